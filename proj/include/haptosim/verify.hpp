#pragma once

#include "haptosim/model.hpp"
#include "haptosim/stepper.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace haptosim {

using Triple = std::array<double, 3>;  // (u, c, p)

// Reference solution of the spatially constant problem
//   u' = mu u (1 - u),  c' = -p c,  p' = (u c - p) / epsilon.
struct OdeTrajectory
{
  std::vector<double> times;
  std::vector<Triple> states;
  std::size_t         substeps = 0;

  const Triple &
  endpoint() const
  {
    return states.back();
  }
};

// Classical RK4 with `substeps` uniform steps on [0, t_end]. Throws
// Error if the state becomes non-finite.
OdeTrajectory ode_oracle(const Parameters &params,
                         const Triple     &y0,
                         double            t_end,
                         std::size_t       substeps);

struct OrderStudyRow
{
  double dt    = 0.0;
  double error = 0.0;  // max over nodes and components at t_end
};

struct OrderStudy
{
  double                     theta = 0.5;
  std::vector<OrderStudyRow> rows;
  double                     order = 0.0;  // least-squares slope
};

// Runs the full scheme with spatially constant data on a single-element
// mesh for each dt and compares with ode_oracle at t_end. `params` supplies
// the reaction constants; theta is overridden and the fixed-point tolerance
// tightened so it does not mask the time error. Throws ConfigError for
// fewer than two distinct time steps and Error naming the failing dt when
// the fixed point does not converge.
OrderStudy temporal_order_study(const Parameters          &params,
                                double                     theta,
                                const std::vector<double> &dts,
                                const Triple              &y0,
                                double                     t_end = 1.0);

// Columns dt,error,estimated_order (the order repeated on each row).
void write_order_study_csv(const OrderStudy &study, const std::filesystem::path &path);

struct ScalingProblem
{
  Parameters                 params;
  int                        dim = 2;
  Box                        extents;
  std::array<std::size_t, 3> base_cells{1, 1, 1};
  int                        refinements = 0;
  InitialData                initial;
};

struct ScalingReport
{
  double      max_discrepancy = 0.0;  // over fields, nodes and step times
  std::size_t compared_levels = 0;
  RunStatus   original_status = RunStatus::completed;
  RunStatus   rescaled_status = RunStatus::completed;
};

// Runs the problem as given and after mapping it to chi = epsilon = 1,
// maps the second run back and compares nodal values at every time level.
ScalingReport scaling_equivalence(const ScalingProblem &problem);

struct CrosscheckReport
{
  double mass_symbolic      = 0.0;  // unit square vs closed form
  double stiffness_symbolic = 0.0;
  double mass        = 0.0;  // random elements vs 5-point Gauss
  double stiffness   = 0.0;
  double weighted    = 0.0;
  double haptotaxis  = 0.0;
  double load        = 0.0;
  double cube_row_sum = 0.0;  // 3D unit cube mass rows vs 1/8
  std::size_t elements = 0;

  double max_deviation() const;
};

// Compares the element integrals with an independent 5-point Gauss
// evaluation on `n_random` random elements in both 2D and 3D.
CrosscheckReport element_matrix_crosscheck(std::size_t   n_random = 50,
                                           std::uint64_t seed     = 20240611);

} // namespace haptosim
