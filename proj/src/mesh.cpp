#include "haptosim/mesh.hpp"

#include "haptosim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace haptosim {

double
Box::volume() const
{
  double v = 1.0;
  for (int d = 0; d < dim; ++d)
    v *= axes[d].length();
  return v;
}

Point
StructuredMesh::element_size(std::size_t e) const
{
  const auto  nodes = element(e);
  const Point &lo   = coords_[nodes[0]];
  // Local vertex 2 (2D) / 6 (3D) is the opposite corner.
  const Point &hi = coords_[nodes[dim() == 2 ? 2 : 6]];
  Point        h{0.0, 0.0, 0.0};
  for (int d = 0; d < dim(); ++d)
    h[d] = hi[d] - lo[d];
  return h;
}

double
StructuredMesh::element_volume(std::size_t e) const
{
  const Point h = element_size(e);
  double      v = 1.0;
  for (int d = 0; d < dim(); ++d)
    v *= h[d];
  return v;
}

StructuredMesh
build_structured_mesh(int                               dim,
                      const Box                        &extents,
                      const std::array<std::size_t, 3> &base_cells,
                      int                               refinements)
{
  if (dim != 2 && dim != 3)
    throw ConfigError("mesh: dim must be 2 or 3, got " + std::to_string(dim));
  if (refinements < 0 || refinements > 20)
    throw ConfigError("mesh: refinements must be in [0, 20]");
  for (int d = 0; d < dim; ++d)
    {
      const Interval &iv = extents.axes[d];
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo))
        {
          std::ostringstream msg;
          msg << "mesh: empty or invalid interval [" << iv.lo << ", " << iv.hi
              << "] on axis " << d;
          throw ConfigError(msg.str());
        }
      if (base_cells[d] < 1)
        throw ConfigError("mesh: base cell count must be >= 1 on every axis");
    }

  StructuredMesh mesh;
  mesh.box_     = extents;
  mesh.box_.dim = dim;
  for (int d = dim; d < 3; ++d)
    mesh.box_.axes[d] = Interval{0.0, 0.0};

  std::array<std::size_t, 3> n{1, 1, 1};   // cells
  std::array<std::size_t, 3> np{1, 1, 1};  // nodes
  for (int d = 0; d < dim; ++d)
    {
      n[d]  = base_cells[d] << refinements;
      np[d] = n[d] + 1;
    }
  mesh.cells_ = {n[0], n[1], dim == 3 ? n[2] : 0};

  const std::size_t n_nodes = np[0] * np[1] * np[2];
  mesh.coords_.resize(n_nodes);
  for (std::size_t k = 0; k < np[2]; ++k)
    for (std::size_t j = 0; j < np[1]; ++j)
      for (std::size_t i = 0; i < np[0]; ++i)
        {
          const std::array<std::size_t, 3> idx{i, j, k};
          Point                            x{0.0, 0.0, 0.0};
          for (int d = 0; d < dim; ++d)
            {
              const Interval &iv = extents.axes[d];
              // Pin the last node to hi exactly.
              x[d] = idx[d] == n[d] ?
                       iv.hi :
                       iv.lo + iv.length() * static_cast<double>(idx[d]) /
                                 static_cast<double>(n[d]);
            }
          mesh.coords_[(k * np[1] + j) * np[0] + i] = x;
        }

  const std::size_t nve  = std::size_t{1} << dim;
  mesh.n_elements_       = n[0] * n[1] * (dim == 3 ? n[2] : 1);
  mesh.connectivity_.resize(mesh.n_elements_ * nve);
  const std::size_t nz = dim == 3 ? n[2] : 1;
  std::size_t       e  = 0;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < n[1]; ++j)
      for (std::size_t i = 0; i < n[0]; ++i, ++e)
        for (std::size_t a = 0; a < nve; ++a)
          {
            const std::size_t ii = i + StructuredMesh::vertex_bit(a, 0);
            const std::size_t jj = j + StructuredMesh::vertex_bit(a, 1);
            const std::size_t kk = k + StructuredMesh::vertex_bit(a, 2);
            mesh.connectivity_[e * nve + a] = (kk * np[1] + jj) * np[0] + ii;
          }
  return mesh;
}

MeshPtr
make_mesh(int                               dim,
          const Box                        &extents,
          const std::array<std::size_t, 3> &base_cells,
          int                               refinements)
{
  return std::make_shared<const StructuredMesh>(
    build_structured_mesh(dim, extents, base_cells, refinements));
}

FeField::FeField(MeshPtr mesh, double value)
  : mesh_(std::move(mesh))
  , coeffs_(mesh_ ? mesh_->n_nodes() : 0, value)
{}

FeField::FeField(MeshPtr mesh, std::vector<double> coeffs)
  : mesh_(std::move(mesh))
  , coeffs_(std::move(coeffs))
{
  if (!mesh_ || coeffs_.size() != mesh_->n_nodes())
    throw AssemblyError("FeField: coefficient count does not match mesh");
}

bool
FeField::all_finite() const
{
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double v) {
    return std::isfinite(v);
  });
}

double
FeField::max() const
{
  return *std::max_element(coeffs_.begin(), coeffs_.end());
}

double
FeField::min() const
{
  return *std::min_element(coeffs_.begin(), coeffs_.end());
}

double
FeField::max_abs() const
{
  double m = 0.0;
  for (double v : coeffs_)
    {
      if (std::isnan(v))
        return v;
      m = std::max(m, std::abs(v));
    }
  return m;
}

FeField
interpolate(const PointFunction &f, const MeshPtr &mesh)
{
  FeField out(mesh);
  for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
    {
      const double v = f(mesh->node(i));
      if (!std::isfinite(v))
        {
          const Point       &x = mesh->node(i);
          std::ostringstream msg;
          msg << "interpolate: non-finite value " << v << " at node " << i
              << " (" << x[0] << ", " << x[1] << ", " << x[2] << ")";
          throw InterpolationError(msg.str(), i);
        }
      out[i] = v;
    }
  return out;
}

} // namespace haptosim
