#pragma once

#include "haptosim/errors.hpp"
#include "haptosim/fem.hpp"
#include "haptosim/linsolve.hpp"
#include "haptosim/model.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace haptosim {

// Mesh-level operators that never change during a run.
struct Operators
{
  std::shared_ptr<const Assembler> assembler;
  CsrMatrix                        mass;
  CsrMatrix                        stiffness;
  std::vector<double>              mass_weights;  // M * 1, so that ∫v_h = w·v

  static Operators build(const MeshPtr &mesh);

  const MeshPtr &
  mesh() const
  {
    return assembler->mesh();
  }
};

struct FixedPointReport
{
  int                                iterations = 0;
  std::array<double, 3>              residuals{0.0, 0.0, 0.0};  // u, c, p
  bool                               converged = false;
  double                             beta      = 0.5;  // last relaxation used
  std::vector<std::array<double, 3>> history;
};

// Run-level breakdown: non-finite values or a coefficient beyond
// blowup_threshold.
struct BreakdownReport
{
  double      time         = 0.0;
  std::size_t step         = 0;
  int         fp_iteration = 0;
  std::string reason;
};

// A linear solve inside a time step failed.
class StepError : public Error
{
public:
  StepError(const std::string &what, FixedPointReport report)
    : Error(what)
    , report_(std::move(report))
  {}

  const FixedPointReport &
  report() const noexcept
  {
    return report_;
  }

private:
  FixedPointReport report_;
};

// max_fp_iters passes without meeting tol_fp.
class NonConvergenceError : public StepError
{
public:
  using StepError::StepError;
};

// Single equations of the fully discrete scheme. `*_prev` are the values at
// t^n, `*_iter` the fixed-point iterate k-1 at t^{n+1} (k for u and c in
// step_p). All fields must live on ops.mesh().

// [M + θΔt((1/α)K − χB(c_iter) − μ(M − W(u_iter)))] u
//   = [M − (1−θ)Δt((1/α)K − χB(c_prev) − μ(M − W(u_prev)))] u_prev
FeField step_u(const FeField    &u_prev,
               const FeField    &c_prev,
               const FeField    &u_iter,
               const FeField    &c_iter,
               const Parameters &params,
               const Operators  &ops);

// [M + θΔt W(p_iter)] c = [M − (1−θ)Δt W(p_prev)] c_prev
FeField step_c(const FeField    &c_prev,
               const FeField    &p_prev,
               const FeField    &p_iter,
               const Parameters &params,
               const Operators  &ops);

// (1 + θΔt/ε) M p = (1 − (1−θ)Δt/ε) M p_prev
//                   + θΔt/ε F(u_iter c_iter) + (1−θ)Δt/ε F(u_prev c_prev)
FeField step_p(const FeField    &p_prev,
               const FeField    &u_prev,
               const FeField    &c_prev,
               const FeField    &u_iter,
               const FeField    &c_iter,
               const Parameters &params,
               const Operators  &ops);

struct StepResult
{
  SimState                       state;
  FixedPointReport               report;
  std::optional<BreakdownReport> breakdown;
};

// One time step by relaxed fixed-point iteration. On breakdown `state`
// holds the offending iterate (fields flagged as breakdown artifacts).
// Throws NonConvergenceError or StepError.
StepResult fixed_point_advance(const SimState   &state,
                               const Parameters &params,
                               const Operators  &ops);

struct DiagnosticsRow
{
  double      time = 0.0;
  double      max_u = 0.0, min_u = 0.0;
  double      max_c = 0.0, min_c = 0.0;
  double      max_p = 0.0, min_p = 0.0;
  double      mass_u = 0.0, mass_c = 0.0, mass_p = 0.0;
  int         fp_iters  = 0;
  bool        breakdown = false;
  std::string breakdown_reason;
  // min of some field below -1e-10
  bool        oscillation = false;
  // max c grew by more than 10 tol_fp while min p >= 0
  bool        c_growth = false;
};

DiagnosticsRow measure(const SimState &s, const Operators &ops);

enum class RunStatus
{
  completed,
  breakdown,
  nonconvergence
};

struct RunSetup
{
  Parameters          params;
  MeshPtr             mesh;
  InitialData         initial;
  std::vector<double> snapshot_times;
};

struct RunResult
{
  RunStatus                      status = RunStatus::completed;
  SimState                       final_state;
  std::vector<DiagnosticsRow>    diagnostics;
  std::vector<SimState>          snapshots;
  std::vector<FixedPointReport>  reports;  // one per completed step
  std::optional<BreakdownReport> breakdown;
  std::string                    failure;  // nonconvergence message
  std::vector<std::string>       warnings;
};

// Called after the initial state (step 0) and after every committed step.
using StepObserver = std::function<void(const SimState &, std::size_t step)>;

// Number of uniform steps T/Δt; ConfigError unless T is a multiple of Δt.
std::size_t step_count(const Parameters &params);

// Validates the setup (ConfigError before any compute) and integrates to
// t_final. Breakdown and nonconvergence end the run early and are reported
// through RunResult::status with the partial results.
RunResult run(const RunSetup &setup, const StepObserver &observer = {});

// Shared-operator variant for callers that run many problems on one mesh.
RunResult run(const RunSetup     &setup,
              const Operators    &ops,
              const StepObserver &observer = {});

} // namespace haptosim
