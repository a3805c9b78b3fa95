#include "haptosim/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace haptosim {

Operators
Operators::build(const MeshPtr &mesh)
{
  Operators ops;
  ops.assembler = std::make_shared<const Assembler>(mesh);
  ops.mass      = ops.assembler->mass();
  ops.stiffness = ops.assembler->stiffness();
  const std::vector<double> ones(mesh->n_nodes(), 1.0);
  ops.mass_weights = spmv(ops.mass, ones);
  return ops;
}

namespace {

void
check_fields(const Operators &ops, std::initializer_list<const FeField *> fields)
{
  for (const FeField *f : fields)
    if (f->mesh() != ops.mesh())
      throw AssemblyError("stepper: field lives on a different mesh");
}

std::vector<double>
solve_field(const CsrMatrix &A, const std::vector<double> &b, const Parameters &params)
{
  LinearSolverOptions opts;
  opts.tol = params.tol_lin;
  return solve(A, b, opts);
}

// Right-hand sides depending on t^n only; fixed during the iteration.
struct PreviousLevel
{
  std::vector<double> rhs_u;
  std::vector<double> rhs_c;
  std::vector<double> rhs_p;  // without the theta load term
  CsrMatrix           p_matrix;
};

std::vector<double>
rhs_u(const FeField &u_prev, const FeField &c_prev, const Parameters &prm,
      const Operators &ops)
{
  const double        w = (1.0 - prm.theta) * prm.dt;
  std::vector<double> r = spmv(ops.mass, u_prev.coeffs());
  if (w == 0.0)
    return r;
  // r = M u - w ((1/α) K u - χ B(c) u - μ (M u - W(u) u))
  CsrMatrix op = ops.stiffness;
  op.scale(1.0 / prm.alpha);
  if (prm.chi != 0.0)
    op.add(-prm.chi, ops.assembler->haptotaxis(c_prev));
  op.add(-prm.mu, ops.mass);
  op.add(prm.mu, ops.assembler->weighted_mass(u_prev));
  axpy(-w, spmv(op, u_prev.coeffs()), r);
  return r;
}

CsrMatrix
lhs_u(const FeField &u_iter, const FeField &c_iter, const Parameters &prm,
      const Operators &ops)
{
  const double w = prm.theta * prm.dt;
  CsrMatrix    A = ops.mass;
  if (w == 0.0)
    return A;
  A.scale(1.0 - w * prm.mu);
  A.add(w / prm.alpha, ops.stiffness);
  if (prm.chi != 0.0)
    A.add(-w * prm.chi, ops.assembler->haptotaxis(c_iter));
  A.add(w * prm.mu, ops.assembler->weighted_mass(u_iter));
  return A;
}

std::vector<double>
rhs_c(const FeField &c_prev, const FeField &p_prev, const Parameters &prm,
      const Operators &ops)
{
  const double        w = (1.0 - prm.theta) * prm.dt;
  std::vector<double> r = spmv(ops.mass, c_prev.coeffs());
  if (w != 0.0)
    axpy(-w, spmv(ops.assembler->weighted_mass(p_prev), c_prev.coeffs()), r);
  return r;
}

CsrMatrix
lhs_c(const FeField &p_iter, const Parameters &prm, const Operators &ops)
{
  CsrMatrix A = ops.mass;
  if (prm.theta != 0.0)
    A.add(prm.theta * prm.dt, ops.assembler->weighted_mass(p_iter));
  return A;
}

std::vector<double>
rhs_p_base(const FeField &p_prev, const FeField &u_prev, const FeField &c_prev,
           const Parameters &prm, const Operators &ops)
{
  const double        w = (1.0 - prm.theta) * prm.dt / prm.epsilon;
  std::vector<double> r = spmv(ops.mass, p_prev.coeffs());
  for (double &v : r)
    v *= 1.0 - w;
  if (w != 0.0)
    axpy(w, ops.assembler->load_product(u_prev, c_prev), r);
  return r;
}

CsrMatrix
lhs_p(const Parameters &prm, const Operators &ops)
{
  CsrMatrix A = ops.mass;
  A.scale(1.0 + prm.theta * prm.dt / prm.epsilon);
  return A;
}

FeField
finish_p(const std::vector<double> &base, const FeField &u_iter,
         const FeField &c_iter, const CsrMatrix &A, const Parameters &prm,
         const Operators &ops)
{
  std::vector<double> r = base;
  const double        w = prm.theta * prm.dt / prm.epsilon;
  if (w != 0.0)
    axpy(w, ops.assembler->load_product(u_iter, c_iter), r);
  return FeField(ops.mesh(), solve_field(A, r, prm));
}

// Breakdown test on one iterate; empty when healthy.
std::string
health(const FeField &f, const char *name, double threshold)
{
  if (!f.all_finite())
    return std::string("non-finite values in ") + name;
  const double m = f.max_abs();
  if (m > threshold)
    {
      std::ostringstream msg;
      msg << "|" << name << "| reached " << m << " > blowup threshold "
          << threshold;
      return msg.str();
    }
  return {};
}

} // namespace

FeField
step_u(const FeField    &u_prev,
       const FeField    &c_prev,
       const FeField    &u_iter,
       const FeField    &c_iter,
       const Parameters &params,
       const Operators  &ops)
{
  check_fields(ops, {&u_prev, &c_prev, &u_iter, &c_iter});
  return FeField(ops.mesh(),
                 solve_field(lhs_u(u_iter, c_iter, params, ops),
                             rhs_u(u_prev, c_prev, params, ops),
                             params));
}

FeField
step_c(const FeField    &c_prev,
       const FeField    &p_prev,
       const FeField    &p_iter,
       const Parameters &params,
       const Operators  &ops)
{
  check_fields(ops, {&c_prev, &p_prev, &p_iter});
  return FeField(ops.mesh(),
                 solve_field(lhs_c(p_iter, params, ops),
                             rhs_c(c_prev, p_prev, params, ops),
                             params));
}

FeField
step_p(const FeField    &p_prev,
       const FeField    &u_prev,
       const FeField    &c_prev,
       const FeField    &u_iter,
       const FeField    &c_iter,
       const Parameters &params,
       const Operators  &ops)
{
  check_fields(ops, {&p_prev, &u_prev, &c_prev, &u_iter, &c_iter});
  return finish_p(rhs_p_base(p_prev, u_prev, c_prev, params, ops),
                  u_iter,
                  c_iter,
                  lhs_p(params, ops),
                  params,
                  ops);
}

StepResult
fixed_point_advance(const SimState &state, const Parameters &prm, const Operators &ops)
{
  check_fields(ops, {&state.u, &state.c, &state.p});

  StepResult       result;
  FixedPointReport &report = result.report;
  double            beta   = prm.backtracking ? 1.0 : prm.beta;
  report.beta              = beta;

  PreviousLevel prev;
  try
    {
      prev.rhs_u    = rhs_u(state.u, state.c, prm, ops);
      prev.rhs_c    = rhs_c(state.c, state.p, prm, ops);
      prev.rhs_p    = rhs_p_base(state.p, state.u, state.c, prm, ops);
      prev.p_matrix = lhs_p(prm, ops);
    }
  catch (const Error &e)
    {
      throw StepError(std::string("time step setup failed: ") + e.what(), report);
    }

  const double t_next = state.time + prm.dt;
  SimState     iter   = state;  // iterate k-1
  iter.time           = t_next;
  double previous_max = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= prm.max_fp_iters; ++k)
    {
      SimState next;
      next.time = t_next;
      try
        {
          next.u = FeField(ops.mesh(),
                           solve_field(lhs_u(iter.u, iter.c, prm, ops), prev.rhs_u, prm));
          next.c = FeField(ops.mesh(),
                           solve_field(lhs_c(iter.p, prm, ops), prev.rhs_c, prm));
          next.p = finish_p(prev.rhs_p, next.u, next.c, prev.p_matrix, prm, ops);
        }
      catch (const Error &e)
        {
          report.iterations = k;
          // Solver failures on blown-up data count as breakdown.
          if (!iter.u.all_finite() || iter.u.max_abs() > prm.blowup_threshold)
            {
              result.state     = iter;
              result.breakdown = BreakdownReport{t_next, 0, k, e.what()};
              return result;
            }
          std::ostringstream msg;
          msg << "linear solve failed at t = " << t_next << ", fixed-point pass "
              << k << ": " << e.what();
          throw StepError(msg.str(), report);
        }

      const std::array<double, 3> res{distance2(next.u.coeffs(), iter.u.coeffs()),
                                      distance2(next.c.coeffs(), iter.c.coeffs()),
                                      distance2(next.p.coeffs(), iter.p.coeffs())};
      report.history.push_back(res);
      report.residuals  = res;
      report.iterations = k;

      std::string reason;
      for (const auto &[f, name] :
           {std::pair{&next.u, "u"}, std::pair{&next.c, "c"}, std::pair{&next.p, "p"}})
        if (reason = health(*f, name, prm.blowup_threshold); !reason.empty())
          break;
      if (!reason.empty())
        {
          next.u.breakdown_artifact = true;
          next.c.breakdown_artifact = true;
          next.p.breakdown_artifact = true;
          result.state              = std::move(next);
          result.breakdown          = BreakdownReport{t_next, 0, k, reason};
          return result;
        }

      if (res[0] < prm.tol_fp && res[1] < prm.tol_fp && res[2] < prm.tol_fp)
        {
          report.converged = true;
          result.state     = std::move(next);
          return result;
        }

      if (prm.backtracking)
        {
          const double current_max = std::max({res[0], res[1], res[2]});
          if (current_max >= previous_max)
            beta = std::max(0.5 * beta, 1.0 / 1024.0);
          previous_max = current_max;
          report.beta  = beta;
        }

      // v_k <- β v_new + (1 − β) v_{k−1}
      auto relax = [beta](FeField &old, const FeField &fresh) {
        for (std::size_t i = 0; i < old.size(); ++i)
          old[i] = beta * fresh[i] + (1.0 - beta) * old[i];
      };
      relax(iter.u, next.u);
      relax(iter.c, next.c);
      relax(iter.p, next.p);
    }

  std::ostringstream msg;
  msg << "fixed-point iteration did not converge at t = " << t_next << " within "
      << prm.max_fp_iters << " passes (residuals u " << report.residuals[0]
      << ", c " << report.residuals[1] << ", p " << report.residuals[2] << ")";
  throw NonConvergenceError(msg.str(), report);
}

DiagnosticsRow
measure(const SimState &s, const Operators &ops)
{
  DiagnosticsRow row;
  row.time   = s.time;
  row.max_u  = s.u.max();
  row.min_u  = s.u.min();
  row.max_c  = s.c.max();
  row.min_c  = s.c.min();
  row.max_p  = s.p.max();
  row.min_p  = s.p.min();
  row.mass_u = dot(ops.mass_weights, s.u.coeffs());
  row.mass_c = dot(ops.mass_weights, s.c.coeffs());
  row.mass_p = dot(ops.mass_weights, s.p.coeffs());
  constexpr double undershoot = -1e-10;
  row.oscillation = row.min_u < undershoot || row.min_c < undershoot ||
                    row.min_p < undershoot;
  return row;
}

std::size_t
step_count(const Parameters &params)
{
  const double ratio = params.t_final / params.dt;
  const double n     = std::round(ratio);
  if (std::abs(n * params.dt - params.t_final) >
      1e-12 * std::max(1.0, std::abs(params.t_final)))
    {
      std::ostringstream msg;
      msg << "t_final = " << params.t_final << " is not a multiple of dt = "
          << params.dt;
      throw ConfigError(msg.str());
    }
  return static_cast<std::size_t>(n);
}

namespace {

// Step index of each snapshot time; ConfigError when one is off the grid.
std::vector<std::size_t>
snapshot_steps(const std::vector<double> &times, const Parameters &params,
               std::size_t n_steps)
{
  std::vector<std::size_t> steps;
  for (double t : times)
    {
      const double n = std::round(t / params.dt);
      if (!(t >= 0.0) ||
          std::abs(n * params.dt - t) > 1e-12 * std::max(1.0, std::abs(t)))
        {
          std::ostringstream msg;
          msg << "snapshot time " << t << " is not a multiple of dt = " << params.dt;
          throw ConfigError(msg.str());
        }
      if (static_cast<std::size_t>(n) > n_steps)
        {
          std::ostringstream msg;
          msg << "snapshot time " << t << " lies beyond t_final = " << params.t_final;
          throw ConfigError(msg.str());
        }
      steps.push_back(static_cast<std::size_t>(n));
    }
  return steps;
}

} // namespace

RunResult
run(const RunSetup &setup, const StepObserver &observer)
{
  setup.params.validate();
  if (!setup.mesh)
    throw ConfigError("run: no mesh");
  step_count(setup.params);
  return run(setup, Operators::build(setup.mesh), observer);
}

RunResult
run(const RunSetup &setup, const Operators &ops, const StepObserver &observer)
{
  const Parameters &prm = setup.params;
  prm.validate();
  if (!setup.mesh || setup.mesh != ops.mesh())
    throw ConfigError("run: operators were built for a different mesh");
  const std::size_t              n_steps = step_count(prm);
  const std::vector<std::size_t> snaps   = snapshot_steps(setup.snapshot_times, prm, n_steps);
  auto is_snapshot = [&snaps](std::size_t n) {
    return std::find(snaps.begin(), snaps.end(), n) != snaps.end();
  };

  RunResult result;
  SimState  state = initial_state(setup.initial, setup.mesh, &result.warnings);
  result.diagnostics.push_back(measure(state, ops));
  if (is_snapshot(0))
    result.snapshots.push_back(state);
  if (observer)
    observer(state, 0);

  for (std::size_t n = 0; n < n_steps; ++n)
    {
      StepResult step;
      try
        {
          step = fixed_point_advance(state, prm, ops);
        }
      catch (const NonConvergenceError &e)
        {
          result.status  = RunStatus::nonconvergence;
          result.failure = e.what();
          break;
        }
      const double t_next = static_cast<double>(n + 1) * prm.dt;
      step.state.time     = t_next;

      if (step.breakdown)
        {
          step.breakdown->step = n + 1;
          step.breakdown->time = t_next;
          DiagnosticsRow row;
          row.time             = t_next;
          // Extrema of the offending iterate, possibly nan.
          row.max_u            = step.state.u.max();
          row.min_u            = step.state.u.min();
          row.max_c            = step.state.c.max();
          row.min_c            = step.state.c.min();
          row.max_p            = step.state.p.max();
          row.min_p            = step.state.p.min();
          row.mass_u           = dot(ops.mass_weights, step.state.u.coeffs());
          row.mass_c           = dot(ops.mass_weights, step.state.c.coeffs());
          row.mass_p           = dot(ops.mass_weights, step.state.p.coeffs());
          row.fp_iters         = step.report.iterations;
          row.breakdown        = true;
          row.breakdown_reason = step.breakdown->reason;
          result.diagnostics.push_back(row);
          result.breakdown = step.breakdown;
          result.status    = RunStatus::breakdown;
          result.final_state = std::move(step.state);
          return result;
        }

      DiagnosticsRow row = measure(step.state, ops);
      row.fp_iters       = step.report.iterations;
      const DiagnosticsRow &before = result.diagnostics.back();
      row.c_growth = row.min_p >= 0.0 && row.max_c > before.max_c + 10.0 * prm.tol_fp;
      if (row.oscillation && !before.oscillation)
        {
          std::ostringstream msg;
          msg << "t = " << t_next << ": negative undershoot (min u " << row.min_u
              << ", min c " << row.min_c << ", min p " << row.min_p << ")";
          result.warnings.push_back(msg.str());
        }
      if (row.c_growth)
        {
          std::ostringstream msg;
          msg << "t = " << t_next << ": max c increased from " << before.max_c
              << " to " << row.max_c;
          result.warnings.push_back(msg.str());
        }
      result.diagnostics.push_back(row);
      result.reports.push_back(step.report);

      state = std::move(step.state);
      if (is_snapshot(n + 1))
        result.snapshots.push_back(state);
      if (observer)
        observer(state, n + 1);
    }

  result.final_state = std::move(state);
  return result;
}

} // namespace haptosim
