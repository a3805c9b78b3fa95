#include "haptosim/model.hpp"

#include "haptosim/errors.hpp"

#include <cmath>
#include <sstream>

namespace haptosim {

namespace {

void
require(bool ok, const char *key, const char *constraint)
{
  if (!ok)
    throw ConfigError(std::string("parameter '") + key + "' must satisfy " +
                      constraint);
}

bool
positive(double v)
{
  return std::isfinite(v) && v > 0.0;
}

double
squared_norm(const Point &x)
{
  return x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
}

} // namespace

void
Parameters::validate() const
{
  require(positive(alpha), "alpha", "alpha > 0");
  require(std::isfinite(chi) && chi >= 0.0, "chi", "chi >= 0");
  require(positive(mu), "mu", "mu > 0");
  require(positive(epsilon), "epsilon", "epsilon > 0");
  require(std::isfinite(theta) && theta >= 0.0 && theta <= 1.0,
          "theta",
          "0 <= theta <= 1");
  require(positive(dt), "dt", "dt > 0");
  require(std::isfinite(t_final) && t_final >= 0.0, "t_final", "t_final >= 0");
  require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0,
          "beta",
          "0 < beta <= 1");
  require(positive(tol_fp), "tol_fp", "tol_fp > 0");
  require(max_fp_iters >= 1, "max_fp_iters", "max_fp_iters >= 1");
  require(positive(tol_lin), "tol_lin", "tol_lin > 0");
  require(positive(blowup_threshold), "blowup_threshold", "blowup_threshold > 0");
}

InitialData
paper_initial_data(const GaussianFamily &f)
{
  InitialData d;
  d.name = "paper-gaussian";
  d.u0   = [a = f.u_amplitude](const Point &x) {
    return a * std::exp(-squared_norm(x));
  };
  d.c0 = [o = f.c_offset, b = f.c_dip](const Point &x) {
    return o - b * std::exp(-squared_norm(x));
  };
  d.p0 = [a = f.p_amplitude](const Point &x) {
    return a * std::exp(-squared_norm(x));
  };
  return d;
}

InitialData
constant_initial_data(double u0, double c0, double p0)
{
  InitialData d;
  std::ostringstream name;
  name << "constant:" << u0 << "," << c0 << "," << p0;
  d.name = name.str();
  d.u0   = [u0](const Point &) { return u0; };
  d.c0   = [c0](const Point &) { return c0; };
  d.p0   = [p0](const Point &) { return p0; };
  return d;
}

SimState
initial_state(const InitialData        &data,
              const MeshPtr            &mesh,
              std::vector<std::string> *warnings)
{
  SimState s;
  s.time = 0.0;
  s.u    = interpolate(data.u0, mesh);
  s.c    = interpolate(data.c0, mesh);
  s.p    = interpolate(data.p0, mesh);
  if (warnings)
    {
      const std::pair<const char *, const FeField *> fields[] = {
        {"u0", &s.u}, {"c0", &s.c}, {"p0", &s.p}};
      for (const auto &[name, f] : fields)
        if (f->min() < 0.0)
          warnings->push_back(std::string("initial data ") + name +
                              " is negative at some node (min " +
                              std::to_string(f->min()) + ")");
    }
  return s;
}

RescaledProblem
rescale_to_unit_chi_eps(const Parameters  &params,
                        const Box         &extents,
                        const InitialData &initial)
{
  if (!(params.chi > 0.0))
    throw ConfigError("rescale: chi must be positive, the rescaling is "
                      "undefined for chi = 0");
  if (!(params.epsilon > 0.0))
    throw ConfigError("rescale: epsilon must be positive");

  const double chi = params.chi;
  const double eps = params.epsilon;
  const double s   = std::sqrt(chi);

  RescaledProblem r;
  r.length_scale = s;
  r.time_scale   = eps;
  r.amplitude    = eps;

  r.params         = params;
  r.params.alpha   = params.alpha * chi / eps;
  r.params.chi     = 1.0;
  r.params.mu      = eps * params.mu;
  r.params.epsilon = 1.0;
  r.params.dt      = params.dt / eps;
  r.params.t_final = params.t_final / eps;

  r.extents = extents;
  for (int d = 0; d < extents.dim; ++d)
    {
      r.extents.axes[d].lo = extents.axes[d].lo / s;
      r.extents.axes[d].hi = extents.axes[d].hi / s;
    }

  auto stretch = [s](const Point &xt) {
    return Point{s * xt[0], s * xt[1], s * xt[2]};
  };
  r.initial.name = initial.name + " (rescaled)";
  r.initial.u0   = [f = initial.u0, stretch](const Point &xt) {
    return f(stretch(xt));
  };
  r.initial.c0 = [f = initial.c0, stretch, eps](const Point &xt) {
    return eps * f(stretch(xt));
  };
  r.initial.p0 = [f = initial.p0, stretch, eps](const Point &xt) {
    return eps * f(stretch(xt));
  };
  return r;
}

SimState
map_back(const RescaledProblem &problem,
         const SimState        &rescaled,
         const MeshPtr         &original_mesh)
{
  if (rescaled.u.size() != original_mesh->n_nodes())
    throw ConfigError("map_back: grid topology differs from the original mesh");
  const double inv = 1.0 / problem.amplitude;
  SimState     out;
  out.time = problem.time_scale * rescaled.time;
  out.u    = FeField(original_mesh, rescaled.u.coeffs());
  out.c    = FeField(original_mesh, rescaled.c.coeffs());
  out.p    = FeField(original_mesh, rescaled.p.coeffs());
  for (std::size_t i = 0; i < out.c.size(); ++i)
    {
      out.c[i] *= inv;
      out.p[i] *= inv;
    }
  return out;
}

Parameters
unscale_parameters(const Parameters &rescaled, double chi, double epsilon)
{
  Parameters p = rescaled;
  p.alpha      = rescaled.alpha * epsilon / chi;
  p.chi        = chi;
  p.mu         = rescaled.mu / epsilon;
  p.epsilon    = epsilon;
  p.dt         = rescaled.dt * epsilon;
  p.t_final    = rescaled.t_final * epsilon;
  return p;
}

FeField
w_diagnostic(const FeField &u, const FeField &c, double alpha)
{
  if (!u.same_mesh(c) || u.size() != c.size())
    throw AssemblyError("w_diagnostic: u and c live on different meshes");
  FeField w(u.mesh());
  for (std::size_t i = 0; i < u.size(); ++i)
    w[i] = u[i] * std::exp(-alpha * c[i]);
  return w;
}

} // namespace haptosim
