#pragma once

#include "haptosim/mesh.hpp"

#include <string>
#include <vector>

namespace haptosim {

// Model and scheme constants.
//
//   u_t = (1/alpha) lap u - chi div(u grad c) + mu u (1 - u)
//   c_t = -p c
//   p_t = (u c - p) / epsilon
//
// with zero-flux boundary conditions.
struct Parameters
{
  double alpha   = 10.0;   // 1/alpha multiplies the cell diffusion
  double chi     = 0.01;   // haptotactic sensitivity
  double mu      = 1e-10;  // proliferation rate
  double epsilon = 0.2;    // protease time scale

  double theta   = 0.5;  // 0 explicit, 1 implicit
  double dt      = 1.0;
  double t_final = 50.0;

  double      beta             = 0.5;  // fixed-point relaxation
  double      tol_fp           = 1e-8;
  int         max_fp_iters     = 100;
  double      tol_lin          = 1e-12;
  double      blowup_threshold = 1e6;
  // Start from beta = 1 and halve it whenever the fixed-point residual fails
  // to decrease.
  bool        backtracking     = false;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const Parameters &, const Parameters &) = default;
};

// Pointwise initial data (u0, c0, p0).
struct InitialData
{
  std::string   name;
  PointFunction u0;
  PointFunction c0;
  PointFunction p0;
};

// u0 = A exp(-|x|^2), c0 = 1 - B exp(-|x|^2), p0 = C exp(-|x|^2).
struct GaussianFamily
{
  double u_amplitude = 1.0;
  double c_offset    = 1.0;
  double c_dip       = 0.5;
  double p_amplitude = 0.5;
};

InitialData paper_initial_data(const GaussianFamily &family = {});

InitialData constant_initial_data(double u0, double c0, double p0);

// Fields at one time level on a shared mesh.
struct SimState
{
  double  time = 0.0;
  FeField u;
  FeField c;
  FeField p;
};

// Interpolates the initial data on `mesh`. Negative nodal values are
// appended to `warnings` (the run still proceeds).
SimState initial_state(const InitialData        &data,
                       const MeshPtr            &mesh,
                       std::vector<std::string> *warnings = nullptr);

// Problem mapped onto chi = epsilon = 1 by
//   x~ = x / sqrt(chi),  t~ = t / epsilon,  u~ = u,  c~ = epsilon c,
//   p~ = epsilon p,
//   alpha~ = alpha chi / epsilon,  mu~ = epsilon mu.
struct RescaledProblem
{
  Parameters  params;
  Box         extents;
  InitialData initial;
  double      length_scale = 1.0;  // x = length_scale * x~
  double      time_scale   = 1.0;  // t = time_scale * t~
  double      amplitude    = 1.0;  // (c, p) = (c~, p~) / amplitude

  double
  to_rescaled_time(double t) const
  {
    return t / time_scale;
  }
};

// Throws ConfigError when chi <= 0 or epsilon <= 0. dt and t_final are
// mapped to dt / epsilon and t_final / epsilon.
RescaledProblem rescale_to_unit_chi_eps(const Parameters  &params,
                                        const Box         &extents,
                                        const InitialData &initial);

// Inverse map for a state of the rescaled problem computed on a mesh with
// the same topology: u = u~, c = c~ / epsilon, p = p~ / epsilon, t = eps t~.
// The result lives on `original_mesh`.
SimState map_back(const RescaledProblem &problem,
                  const SimState        &rescaled,
                  const MeshPtr         &original_mesh);

// Inverse of the parameter part of the rescaling.
Parameters unscale_parameters(const Parameters &rescaled,
                              double            chi,
                              double            epsilon);

// w = u exp(-alpha c), nodewise.
FeField w_diagnostic(const FeField &u, const FeField &c, double alpha);

} // namespace haptosim
