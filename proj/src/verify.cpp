#include "haptosim/verify.hpp"

#include "haptosim/errors.hpp"
#include "haptosim/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace haptosim {

namespace {

Triple
reaction_rhs(const Parameters &prm, const Triple &y)
{
  const auto [u, c, p] = y;
  return {prm.mu * u * (1.0 - u), -p * c, (u * c - p) / prm.epsilon};
}

Triple
axpy3(const Triple &y, double a, const Triple &k)
{
  return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]};
}

} // namespace

OdeTrajectory
ode_oracle(const Parameters &prm, const Triple &y0, double t_end, std::size_t substeps)
{
  if (substeps < 1)
    throw ConfigError("ode_oracle: substeps must be >= 1");
  if (!(t_end >= 0.0))
    throw ConfigError("ode_oracle: t_end must be >= 0");
  OdeTrajectory traj;
  traj.substeps = substeps;
  traj.times.reserve(substeps + 1);
  traj.states.reserve(substeps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(y0);

  const double h = t_end / static_cast<double>(substeps);
  Triple       y = y0;
  for (std::size_t n = 0; n < substeps; ++n)
    {
      const Triple k1 = reaction_rhs(prm, y);
      const Triple k2 = reaction_rhs(prm, axpy3(y, 0.5 * h, k1));
      const Triple k3 = reaction_rhs(prm, axpy3(y, 0.5 * h, k2));
      const Triple k4 = reaction_rhs(prm, axpy3(y, h, k3));
      for (int i = 0; i < 3; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !std::isfinite(y[2]))
        {
          std::ostringstream msg;
          msg << "ode_oracle: state became non-finite at step " << n + 1;
          throw Error(msg.str());
        }
      traj.times.push_back(static_cast<double>(n + 1) * h);
      traj.states.push_back(y);
    }
  return traj;
}

OrderStudy
temporal_order_study(const Parameters          &params,
                     double                     theta,
                     const std::vector<double> &dts,
                     const Triple              &y0,
                     double                     t_end)
{
  if (dts.size() < 2)
    throw ConfigError("temporal_order_study: need at least two time steps");
  if (std::set<double>(dts.begin(), dts.end()).size() != dts.size())
    throw ConfigError("temporal_order_study: time steps must be distinct");
  for (double dt : dts)
    if (!(dt > 0.0))
      throw ConfigError("temporal_order_study: time steps must be positive");

  // 2^17 RK4 steps keep the oracle error far below the scheme error.
  const OdeTrajectory ref    = ode_oracle(params, y0, t_end, std::size_t{1} << 17);
  const Triple       &target = ref.endpoint();

  const MeshPtr mesh = make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}},
                                 {1, 1, 1}, 0);
  const Operators ops = Operators::build(mesh);

  OrderStudy study;
  study.theta = theta;
  for (double dt : dts)
    {
      RunSetup setup;
      setup.params              = params;
      setup.params.theta        = theta;
      setup.params.dt           = dt;
      setup.params.t_final      = t_end;
      setup.params.tol_fp       = std::min(params.tol_fp, 1e-14);
      setup.params.max_fp_iters = std::max(params.max_fp_iters, 400);
      setup.mesh                = mesh;
      setup.initial             = constant_initial_data(y0[0], y0[1], y0[2]);
      const RunResult res       = run(setup, ops);
      if (res.status != RunStatus::completed)
        {
          std::ostringstream msg;
          msg << "temporal_order_study: run with dt = " << dt << " failed: "
              << (res.breakdown ? res.breakdown->reason : res.failure);
          throw Error(msg.str());
        }
      const SimState &s   = res.final_state;
      double          err = 0.0;
      for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
        err = std::max({err,
                        std::abs(s.u[i] - target[0]),
                        std::abs(s.c[i] - target[1]),
                        std::abs(s.p[i] - target[2])});
      study.rows.push_back({dt, err});
    }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto &r : study.rows)
    {
      const double x = std::log(r.dt), y = std::log(r.error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
  const double n = static_cast<double>(study.rows.size());
  study.order    = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return study;
}

void
write_order_study_csv(const OrderStudy &study, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("write_order_study_csv: cannot open " + path.string());
  out.precision(17);
  out << "dt,error,estimated_order\n";
  for (const auto &r : study.rows)
    out << r.dt << "," << r.error << "," << study.order << "\n";
}

ScalingReport
scaling_equivalence(const ScalingProblem &problem)
{
  const RescaledProblem scaled =
    rescale_to_unit_chi_eps(problem.params, problem.extents, problem.initial);

  const MeshPtr mesh = make_mesh(problem.dim, problem.extents, problem.base_cells,
                                 problem.refinements);
  const MeshPtr mesh_scaled = make_mesh(problem.dim, scaled.extents,
                                        problem.base_cells, problem.refinements);
  if (mesh->n_nodes() != mesh_scaled->n_nodes() ||
      mesh->n_elements() != mesh_scaled->n_elements())
    throw Error("scaling_equivalence: grid topologies differ");

  auto collect = [](const Parameters &prm, const MeshPtr &m, const InitialData &init,
                    std::vector<SimState> &states) {
    RunSetup setup{prm, m, init, {}};
    return run(setup, [&states](const SimState &s, std::size_t) {
             states.push_back(s);
           }).status;
  };

  std::vector<SimState> original, rescaled;
  ScalingReport         report;
  report.original_status = collect(problem.params, mesh, problem.initial, original);
  report.rescaled_status = collect(scaled.params, mesh_scaled, scaled.initial, rescaled);

  const std::size_t levels = std::min(original.size(), rescaled.size());
  for (std::size_t n = 0; n < levels; ++n)
    {
      const SimState back = map_back(scaled, rescaled[n], mesh);
      const SimState &ref = original[n];
      for (std::size_t i = 0; i < mesh->n_nodes(); ++i)
        report.max_discrepancy = std::max({report.max_discrepancy,
                                           std::abs(back.u[i] - ref.u[i]),
                                           std::abs(back.c[i] - ref.c[i]),
                                           std::abs(back.p[i] - ref.p[i])});
    }
  report.compared_levels = levels;
  return report;
}

namespace {

// Independent evaluation: shape functions written out from the vertex
// coordinates, 5-point Gauss per axis on the physical element.
struct Oracle
{
  ElementGeometry g;
  std::size_t     nve;

  double
  phi(std::size_t a, const Point &x) const
  {
    double v = 1.0;
    for (int d = 0; d < g.dim; ++d)
      {
        const double s = (x[d] - g.origin[d]) / g.size[d];
        v *= StructuredMesh::vertex_bit(a, d) ? s : 1.0 - s;
      }
    return v;
  }

  Point
  grad(std::size_t a, const Point &x) const
  {
    Point out{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim; ++d)
      {
        double v = (StructuredMesh::vertex_bit(a, d) ? 1.0 : -1.0) / g.size[d];
        for (int e = 0; e < g.dim; ++e)
          if (e != d)
            {
              const double s = (x[e] - g.origin[e]) / g.size[e];
              v *= StructuredMesh::vertex_bit(a, e) ? s : 1.0 - s;
            }
        out[d] = v;
      }
    return out;
  }

  template <typename F>
  double
  integrate(F &&f) const
  {
    static const double xs[5] = {-0.9061798459386639927976269,
                                 -0.5384693101056830910363144,
                                 0.0,
                                 0.5384693101056830910363144,
                                 0.9061798459386639927976269};
    static const double ws[5] = {0.2369268850561890875142640,
                                 0.4786286704993664680412915,
                                 0.5688888888888888888888889,
                                 0.4786286704993664680412915,
                                 0.2369268850561890875142640};
    double      sum = 0.0;
    const int   nz  = g.dim == 3 ? 5 : 1;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i)
          {
            Point  x{g.origin[0] + 0.5 * (xs[i] + 1.0) * g.size[0],
                    g.origin[1] + 0.5 * (xs[j] + 1.0) * g.size[1],
                    0.0};
            double w = 0.25 * ws[i] * ws[j] * g.size[0] * g.size[1];
            if (g.dim == 3)
              {
                x[2] = g.origin[2] + 0.5 * (xs[k] + 1.0) * g.size[2];
                w *= 0.5 * ws[k] * g.size[2];
              }
            sum += w * f(x);
          }
    return sum;
  }

  double
  field(const std::vector<double> &v, const Point &x) const
  {
    double s = 0.0;
    for (std::size_t a = 0; a < nve; ++a)
      s += v[a] * phi(a, x);
    return s;
  }

  Point
  field_grad(const std::vector<double> &v, const Point &x) const
  {
    Point s{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < nve; ++a)
      {
        const Point ga = grad(a, x);
        for (int d = 0; d < 3; ++d)
          s[d] += v[a] * ga[d];
      }
    return s;
  }
};

double
deviation(const ElementMatrix &m, std::size_t n,
          const std::function<double(std::size_t, std::size_t)> &ref)
{
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      dev = std::max(dev, std::abs(m(i, j) - ref(i, j)));
  return dev;
}

} // namespace

double
CrosscheckReport::max_deviation() const
{
  return std::max({mass_symbolic, stiffness_symbolic, mass, stiffness, weighted,
                   haptotaxis, load, cube_row_sum});
}

CrosscheckReport
element_matrix_crosscheck(std::size_t n_random, std::uint64_t seed)
{
  CrosscheckReport report;

  // Unit square, counterclockwise vertex order.
  static const double mass36[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
  static const double stiff6[4][4] = {
    {4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
  const ElementGeometry unit2 = ElementGeometry::unit(2);
  report.mass_symbolic        = deviation(element_mass(unit2), 4, [](auto i, auto j) {
    return mass36[i][j] / 36.0;
  });
  report.stiffness_symbolic = deviation(element_stiffness(unit2), 4, [](auto i, auto j) {
    return stiff6[i][j] / 6.0;
  });

  const ElementMatrix cube = element_mass(ElementGeometry::unit(3));
  for (std::size_t i = 0; i < 8; ++i)
    {
      double row = 0.0;
      for (std::size_t j = 0; j < 8; ++j)
        row += cube(i, j);
      report.cube_row_sum = std::max(report.cube_row_sum, std::abs(row - 0.125));
    }

  std::mt19937_64                        rng(seed);
  std::uniform_real_distribution<double> origin(-5.0, 5.0);
  std::uniform_real_distribution<double> size(0.25, 2.0);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);

  for (int dim : {2, 3})
    for (std::size_t r = 0; r < n_random; ++r)
      {
        ElementGeometry g;
        g.dim = dim;
        for (int d = 0; d < dim; ++d)
          {
            g.origin[d] = origin(rng);
            g.size[d]   = size(rng);
          }
        const std::size_t   nve = std::size_t{1} << dim;
        std::vector<double> w(nve), c(nve), a(nve), b(nve);
        for (std::size_t k = 0; k < nve; ++k)
          {
            w[k] = coeff(rng);
            c[k] = coeff(rng);
            a[k] = coeff(rng);
            b[k] = coeff(rng);
          }
        const Oracle o{g, nve};

        report.mass = std::max(report.mass,
                               deviation(element_mass(g), nve, [&](auto i, auto j) {
                                 return o.integrate([&](const Point &x) {
                                   return o.phi(i, x) * o.phi(j, x);
                                 });
                               }));
        report.stiffness =
          std::max(report.stiffness, deviation(element_stiffness(g), nve, [&](auto i, auto j) {
                     return o.integrate([&](const Point &x) {
                       const Point gi = o.grad(i, x), gj = o.grad(j, x);
                       return gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2];
                     });
                   }));
        report.weighted =
          std::max(report.weighted,
                   deviation(element_weighted_mass(g, w), nve, [&](auto i, auto j) {
                     return o.integrate([&](const Point &x) {
                       return o.field(w, x) * o.phi(i, x) * o.phi(j, x);
                     });
                   }));
        // Row = test function.
        report.haptotaxis =
          std::max(report.haptotaxis,
                   deviation(element_haptotaxis(g, c), nve, [&](auto row, auto col) {
                     return o.integrate([&](const Point &x) {
                       const Point gc = o.field_grad(c, x), gt = o.grad(row, x);
                       return o.phi(col, x) * (gc[0] * gt[0] + gc[1] * gt[1] + gc[2] * gt[2]);
                     });
                   }));
        const ElementVector lv = element_load_product(g, a, b);
        for (std::size_t j = 0; j < nve; ++j)
          {
            const double ref = o.integrate([&](const Point &x) {
              return o.field(a, x) * o.field(b, x) * o.phi(j, x);
            });
            report.load = std::max(report.load, std::abs(lv[j] - ref));
          }
        ++report.elements;
      }
  return report;
}

} // namespace haptosim
