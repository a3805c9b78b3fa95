#include "haptosim/fem.hpp"

#include "haptosim/errors.hpp"

#include <cmath>
#include <string>

namespace haptosim {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
struct Gauss1d
{
  std::vector<double> x, w;
};

Gauss1d
gauss_legendre_1d(int n)
{
  switch (n)
    {
      case 1:
        return {{0.0}, {2.0}};
      case 2:
        {
          const double a = 1.0 / std::sqrt(3.0);
          return {{-a, a}, {1.0, 1.0}};
        }
      case 3:
        {
          const double a = std::sqrt(3.0 / 5.0);
          return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
        }
      case 4:
        {
          const double r  = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
          const double a  = std::sqrt(3.0 / 7.0 - r);
          const double b  = std::sqrt(3.0 / 7.0 + r);
          const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
          const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
          return {{-b, -a, a, b}, {wb, wa, wa, wb}};
        }
      case 5:
        {
          const double r  = 2.0 * std::sqrt(10.0 / 7.0);
          const double a  = std::sqrt(5.0 - r) / 3.0;
          const double b  = std::sqrt(5.0 + r) / 3.0;
          const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
          const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
          return {{-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb}};
        }
      default:
        throw ConfigError("gauss_rule: points per axis must be in [1, 5]");
    }
}

// Shape function values and physical gradients at the quadrature points of
// one element.
struct Tabulation
{
  std::size_t                           nve = 0;
  std::size_t                           nq  = 0;
  std::array<double, 8>                 jxw{};
  std::array<std::array<double, 8>, 8>  phi{};
  std::array<std::array<Point, 8>, 8>   grad{};
};

void
check_geometry(const ElementGeometry &g)
{
  if (g.dim != 2 && g.dim != 3)
    throw AssemblyError("element: dim must be 2 or 3");
  for (int d = 0; d < g.dim; ++d)
    if (!std::isfinite(g.size[d]) || !(g.size[d] > 0.0) ||
        !std::isfinite(g.origin[d]))
      throw AssemblyError("element: degenerate geometry (edge " +
                          std::to_string(d) + " has length " +
                          std::to_string(g.size[d]) + ")");
}

void
check_values(std::span<const double> v, std::size_t nve, const char *what)
{
  if (v.size() != nve)
    throw AssemblyError(std::string("element: ") + what +
                        " needs one value per element vertex");
  for (double x : v)
    if (!std::isfinite(x))
      throw AssemblyError(std::string("element: non-finite ") + what);
}

// Reference-cell values for the 2-point rule: phi and d(phi)/d(xi).
struct ReferenceTable
{
  std::size_t                          nve = 0;
  std::size_t                          nq  = 0;
  std::array<double, 8>                weight{};
  std::array<std::array<double, 8>, 8> phi{};
  std::array<std::array<Point, 8>, 8>  dphi{};
};

ReferenceTable
make_reference(int dim)
{
  const QuadratureRule rule = gauss_rule(dim, 2);
  ReferenceTable       t;
  t.nve = std::size_t{1} << dim;
  t.nq  = rule.size();
  for (std::size_t q = 0; q < t.nq; ++q)
    {
      const Point &xi = rule.points[q];
      t.weight[q]     = rule.weights[q];
      for (std::size_t a = 0; a < t.nve; ++a)
        {
          // 1D factors: xi for bit 1, (1 - xi) for bit 0.
          std::array<double, 3> f{1.0, 1.0, 1.0}, df{0.0, 0.0, 0.0};
          for (int d = 0; d < dim; ++d)
            {
              const int bit = StructuredMesh::vertex_bit(a, d);
              f[d]          = bit ? xi[d] : 1.0 - xi[d];
              df[d]         = bit ? 1.0 : -1.0;
            }
          t.phi[q][a] = f[0] * f[1] * f[2];
          Point dphi{0.0, 0.0, 0.0};
          for (int d = 0; d < dim; ++d)
            {
              double prod = df[d];
              for (int e = 0; e < dim; ++e)
                if (e != d)
                  prod *= f[e];
              dphi[d] = prod;
            }
          t.dphi[q][a] = dphi;
        }
    }
  return t;
}

Tabulation
tabulate(const ElementGeometry &g)
{
  check_geometry(g);
  static const ReferenceTable ref2 = make_reference(2);
  static const ReferenceTable ref3 = make_reference(3);
  const ReferenceTable       &ref  = g.dim == 2 ? ref2 : ref3;

  Tabulation t;
  t.nve            = ref.nve;
  t.nq             = ref.nq;
  t.phi            = ref.phi;
  const double vol = g.volume();
  for (std::size_t q = 0; q < t.nq; ++q)
    {
      t.jxw[q] = ref.weight[q] * vol;
      for (std::size_t a = 0; a < t.nve; ++a)
        for (int d = 0; d < g.dim; ++d)
          t.grad[q][a][d] = ref.dphi[q][a][d] / g.size[d];
    }
  return t;
}

double
value_at(const Tabulation &t, std::size_t q, std::span<const double> nodal)
{
  double v = 0.0;
  for (std::size_t a = 0; a < t.nve; ++a)
    v += nodal[a] * t.phi[q][a];
  return v;
}

} // namespace

QuadratureRule
gauss_rule(int dim, int points_per_axis)
{
  if (dim < 1 || dim > 3)
    throw ConfigError("gauss_rule: dim must be 1, 2 or 3");
  const Gauss1d  g1 = gauss_legendre_1d(points_per_axis);
  const int      n  = points_per_axis;
  QuadratureRule rule;
  rule.dim = dim;
  const int nz = dim == 3 ? n : 1;
  const int ny = dim >= 2 ? n : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < n; ++i)
        {
          Point  x{0.5 * (g1.x[i] + 1.0), 0.0, 0.0};
          double w = 0.5 * g1.w[i];
          if (dim >= 2)
            {
              x[1] = 0.5 * (g1.x[j] + 1.0);
              w *= 0.5 * g1.w[j];
            }
          if (dim == 3)
            {
              x[2] = 0.5 * (g1.x[k] + 1.0);
              w *= 0.5 * g1.w[k];
            }
          rule.points.push_back(x);
          rule.weights.push_back(w);
        }
  return rule;
}

ElementGeometry
ElementGeometry::unit(int dim)
{
  ElementGeometry g;
  g.dim = dim;
  return g;
}

ElementGeometry
ElementGeometry::of(const StructuredMesh &mesh, std::size_t e)
{
  ElementGeometry g;
  g.dim    = mesh.dim();
  g.origin = mesh.element_origin(e);
  g.size   = mesh.element_size(e);
  if (g.dim == 2)
    g.size[2] = 1.0;
  return g;
}

double
ElementGeometry::volume() const
{
  double v = 1.0;
  for (int d = 0; d < dim; ++d)
    v *= size[d];
  return v;
}

ElementMatrix
element_mass(const ElementGeometry &g)
{
  const Tabulation t = tabulate(g);
  ElementMatrix    m;
  m.n = t.nve;
  for (std::size_t q = 0; q < t.nq; ++q)
    for (std::size_t i = 0; i < t.nve; ++i)
      for (std::size_t j = 0; j < t.nve; ++j)
        m(i, j) += t.phi[q][i] * t.phi[q][j] * t.jxw[q];
  return m;
}

ElementMatrix
element_stiffness(const ElementGeometry &g)
{
  const Tabulation t = tabulate(g);
  ElementMatrix    m;
  m.n = t.nve;
  for (std::size_t q = 0; q < t.nq; ++q)
    for (std::size_t i = 0; i < t.nve; ++i)
      for (std::size_t j = 0; j < t.nve; ++j)
        {
          double s = 0.0;
          for (int d = 0; d < g.dim; ++d)
            s += t.grad[q][i][d] * t.grad[q][j][d];
          m(i, j) += s * t.jxw[q];
        }
  return m;
}

ElementMatrix
element_weighted_mass(const ElementGeometry &g, std::span<const double> w)
{
  const Tabulation t = tabulate(g);
  check_values(w, t.nve, "weight");
  ElementMatrix m;
  m.n = t.nve;
  for (std::size_t q = 0; q < t.nq; ++q)
    {
      const double wq = value_at(t, q, w) * t.jxw[q];
      for (std::size_t i = 0; i < t.nve; ++i)
        for (std::size_t j = 0; j < t.nve; ++j)
          m(i, j) += wq * t.phi[q][i] * t.phi[q][j];
    }
  return m;
}

ElementMatrix
element_haptotaxis(const ElementGeometry &g, std::span<const double> c)
{
  const Tabulation t = tabulate(g);
  check_values(c, t.nve, "haptotactic coefficient");
  ElementMatrix m;
  m.n = t.nve;
  for (std::size_t q = 0; q < t.nq; ++q)
    {
      // Shape gradients sum to zero, so subtracting c[0] leaves the
      // gradient unchanged and makes it exactly zero for constant c.
      Point grad_c{0.0, 0.0, 0.0};
      for (std::size_t a = 1; a < t.nve; ++a)
        for (int d = 0; d < g.dim; ++d)
          grad_c[d] += (c[a] - c[0]) * t.grad[q][a][d];
      for (std::size_t j = 0; j < t.nve; ++j)
        {
          double gc_gphi = 0.0;
          for (int d = 0; d < g.dim; ++d)
            gc_gphi += grad_c[d] * t.grad[q][j][d];
          gc_gphi *= t.jxw[q];
          for (std::size_t i = 0; i < t.nve; ++i)
            m(j, i) += t.phi[q][i] * gc_gphi;
        }
    }
  return m;
}

ElementVector
element_load_product(const ElementGeometry  &g,
                     std::span<const double> a,
                     std::span<const double> b)
{
  const Tabulation t = tabulate(g);
  check_values(a, t.nve, "load factor");
  check_values(b, t.nve, "load factor");
  ElementVector v;
  v.n = t.nve;
  for (std::size_t q = 0; q < t.nq; ++q)
    {
      const double ab = value_at(t, q, a) * value_at(t, q, b) * t.jxw[q];
      for (std::size_t j = 0; j < t.nve; ++j)
        v[j] += ab * t.phi[q][j];
    }
  return v;
}

Assembler::Assembler(MeshPtr mesh)
  : mesh_(std::move(mesh))
{
  if (!mesh_)
    throw AssemblyError("Assembler: null mesh");
  const std::size_t                     n   = mesh_->n_nodes();
  const std::size_t                     nve = mesh_->nodes_per_element();
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t e = 0; e < mesh_->n_elements(); ++e)
    {
      const auto nodes = mesh_->element(e);
      for (std::size_t i : nodes)
        rows[i].insert(rows[i].end(), nodes.begin(), nodes.end());
    }
  pattern_ =
    std::make_shared<const SparsityPattern>(SparsityPattern::from_rows(std::move(rows)));

  scatter_.resize(mesh_->n_elements() * nve * nve);
  for (std::size_t e = 0; e < mesh_->n_elements(); ++e)
    {
      const auto nodes = mesh_->element(e);
      for (std::size_t i = 0; i < nve; ++i)
        for (std::size_t j = 0; j < nve; ++j)
          scatter_[(e * nve + i) * nve + j] = pattern_->find(nodes[i], nodes[j]);
    }
}

void
Assembler::check_field(const FeField &f) const
{
  if (f.mesh() != mesh_ || f.size() != mesh_->n_nodes())
    throw AssemblyError("assemble: coefficient field lives on a different mesh");
}

CsrMatrix
Assembler::assemble(FormKind kind, const FeField *coeff) const
{
  const bool needs_coeff =
    kind == FormKind::weighted_mass || kind == FormKind::haptotaxis;
  if (needs_coeff)
    {
      if (!coeff)
        throw AssemblyError("assemble: form requires a coefficient field");
      check_field(*coeff);
    }

  const std::size_t nve = mesh_->nodes_per_element();
  CsrMatrix         A(pattern_);
  auto             &values = A.values();
  std::array<double, 8> local{};
  for (std::size_t e = 0; e < mesh_->n_elements(); ++e)
    {
      const auto            nodes = mesh_->element(e);
      const ElementGeometry g     = ElementGeometry::of(*mesh_, e);
      if (needs_coeff)
        for (std::size_t a = 0; a < nve; ++a)
          local[a] = (*coeff)[nodes[a]];
      const std::span<const double> lv(local.data(), nve);

      ElementMatrix m;
      switch (kind)
        {
          case FormKind::mass:
            m = element_mass(g);
            break;
          case FormKind::stiffness:
            m = element_stiffness(g);
            break;
          case FormKind::weighted_mass:
            m = element_weighted_mass(g, lv);
            break;
          case FormKind::haptotaxis:
            m = element_haptotaxis(g, lv);
            break;
        }
      const std::size_t *map = scatter_.data() + e * nve * nve;
      for (std::size_t k = 0; k < nve * nve; ++k)
        values[map[k]] += m.a[k];
    }
  return A;
}

std::vector<double>
Assembler::load_product(const FeField &a, const FeField &b) const
{
  check_field(a);
  check_field(b);
  const std::size_t     nve = mesh_->nodes_per_element();
  std::vector<double>   out(mesh_->n_nodes(), 0.0);
  std::array<double, 8> la{}, lb{};
  for (std::size_t e = 0; e < mesh_->n_elements(); ++e)
    {
      const auto nodes = mesh_->element(e);
      for (std::size_t k = 0; k < nve; ++k)
        {
          la[k] = a[nodes[k]];
          lb[k] = b[nodes[k]];
        }
      const ElementVector v =
        element_load_product(ElementGeometry::of(*mesh_, e),
                             std::span<const double>(la.data(), nve),
                             std::span<const double>(lb.data(), nve));
      for (std::size_t k = 0; k < nve; ++k)
        out[nodes[k]] += v[k];
    }
  return out;
}

} // namespace haptosim
