#include "doctest.h"

#include "haptosim/errors.hpp"
#include "haptosim/stepper.hpp"

#include <cmath>

using namespace haptosim;

namespace {

MeshPtr
unit_element()
{
  return make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}}, {1, 1, 1}, 0);
}

MeshPtr
paper_square(int refinements)
{
  return make_mesh(2, Box{2, {Interval{0, 20}, Interval{0, 20}, Interval{0, 0}}}, {1, 1, 1}, refinements);
}

double
spread(const FeField &f, double value)
{
  double d = 0.0;
  for (double v : f.coeffs())
    d = std::max(d, std::abs(v - value));
  return d;
}

SimState
constant_state(const MeshPtr &m, double u, double c, double p)
{
  return SimState{0.0, FeField(m, u), FeField(m, c), FeField(m, p)};
}

} // namespace

TEST_CASE("step_u: zero-flux heat equation keeps constants")
{
  const MeshPtr m = paper_square(3);
  const Operators ops = Operators::build(m);
  Parameters p;
  p.chi = 0;
  p.mu = 0;
  const FeField u(m, 0.7);
  const FeField c = interpolate([](const Point &x) { return std::cos(x[0]); }, m);
  CHECK(spread(step_u(u, c, u, c, p, ops), 0.7) <= 1e-11);
}

TEST_CASE("step_u: logistic recurrence with constant data")
{
  const MeshPtr m = unit_element();
  const Operators ops = Operators::build(m);
  Parameters p;
  p.chi = 0;
  p.mu = 1;
  p.theta = 1;
  p.dt = 1;
  const FeField half(m, 0.5), c(m, 1.0);
  CHECK(spread(step_u(half, c, half, c, p, ops), 1.0) <= 1e-14);
}

TEST_CASE("step_c recurrences")
{
  const MeshPtr m = unit_element();
  const Operators ops = Operators::build(m);
  Parameters p;
  p.theta = 0.5;
  p.dt = 1;
  const FeField one(m, 1.0), zero(m, 0.0);
  CHECK(spread(step_c(one, one, one, p, ops), 1.0 / 3.0) <= 1e-15);

  const MeshPtr fine = paper_square(2);
  const Operators fops = Operators::build(fine);
  const FeField cn = interpolate([](const Point &x) { return 1 + 0.1 * x[0] - 0.01 * x[1] * x[1]; }, fine);
  const FeField pz(fine, 0.0);
  const FeField same = step_c(cn, pz, pz, p, fops);
  for (std::size_t i = 0; i < fine->n_nodes(); ++i)
    CHECK(std::abs(same[i] - cn[i]) <= 1e-12);

  const FeField pp = interpolate([](const Point &x) { return 0.2 + 0.01 * x[1]; }, fine);
  FeField c2 = cn;
  for (double &v : c2.coeffs())
    v *= 2;
  const FeField a = step_c(cn, pp, pp, p, fops), b = step_c(c2, pp, pp, p, fops);
  for (std::size_t i = 0; i < fine->n_nodes(); ++i)
    CHECK(std::abs(b[i] - 2 * a[i]) <= 1e-12);
}

TEST_CASE("step_p recurrences")
{
  const MeshPtr m = unit_element();
  const Operators ops = Operators::build(m);
  Parameters p;
  p.theta = 0.5;
  p.dt = 1;
  p.epsilon = 0.2;
  const FeField one(m, 1.0), zero(m, 0.0);
  CHECK(spread(step_p(zero, one, one, one, one, p, ops), 10.0 / 7.0) <= 1e-14);
  CHECK(spread(step_p(zero, zero, one, zero, one, p, ops), 0.0) == 0.0);

  // theta = 1: (1 + dt/eps) p = p_prev + (dt/eps) u c
  p.theta = 1;
  p.dt = 0.5;
  const FeField pn(m, 0.3), u(m, 0.8), c(m, 0.5);
  CHECK(spread(step_p(pn, one, one, u, c, p, ops), 1.3 / 3.5) <= 1e-15);
}

TEST_CASE("step functions reject foreign fields")
{
  const Operators ops = Operators::build(unit_element());
  const FeField foreign(unit_element(), 1.0), own(ops.mesh(), 1.0);
  const Parameters p;
  CHECK_THROWS_AS(step_u(own, own, foreign, own, p, ops), AssemblyError);
  CHECK_THROWS_AS(step_c(own, foreign, own, p, ops), AssemblyError);
  CHECK_THROWS_AS(step_p(own, own, own, own, foreign, p, ops), AssemblyError);
}

TEST_CASE("decoupled linear regime is exact after one pass")
{
  Parameters p;
  p.chi = 0;
  p.mu = 0;
  // p stays zero only while u c = 0
  const MeshPtr m = unit_element();
  const Operators ops = Operators::build(m);
  for (auto [u, c] : {std::pair{0.0, 0.9}, std::pair{0.4, 0.0}})
    {
      // the first pass already reproduces the starting iterate
      const StepResult r = fixed_point_advance(constant_state(m, u, c, 0.0), p, ops);
      CHECK(r.report.converged);
      CHECK(r.report.iterations == 1);
      CHECK(spread(r.state.u, u) <= 1e-15);
      CHECK(spread(r.state.c, c) <= 1e-15);
      CHECK(spread(r.state.p, 0.0) <= 1e-15);
      CHECK(r.state.time == 1.0);
    }

  // pure diffusion: every pass solves the same system, relaxation only
  // drags the iterate toward that solve
  const MeshPtr fine = paper_square(3);
  const Operators fops = Operators::build(fine);
  SimState s = constant_state(fine, 0.0, 0.0, 0.0);
  s.u = interpolate([](const Point &x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); }, fine);
  const StepResult r = fixed_point_advance(s, p, fops);
  CHECK(r.report.converged);
  CHECK(r.report.iterations > 1);
  const FeField direct = step_u(s.u, s.c, s.u, s.c, p, fops);
  double diff = 0;
  for (std::size_t i = 0; i < fine->n_nodes(); ++i)
    diff = std::max(diff, std::abs(r.state.u[i] - direct[i]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("logistic fixed point is independent of the relaxation")
{
  const MeshPtr m = unit_element();
  const Operators ops = Operators::build(m);
  Parameters p;
  p.chi = 0;
  p.mu = 1;
  p.theta = 1;
  p.dt = 1;
  p.tol_fp = 1e-13;
  p.max_fp_iters = 500;
  const SimState s = constant_state(m, 0.5, 1.0, 0.0);
  for (double beta : {0.25, 0.5})
    {
      p.beta = beta;
      const StepResult r = fixed_point_advance(s, p, ops);
      CHECK(r.report.converged);
      CHECK(spread(r.state.u, std::sqrt(0.5)) <= 1e-12);
    }
  // Plain iteration u <- 0.5 / u cycles between 1 and 0.5.
  p.beta = 1.0;
  CHECK_THROWS_AS(fixed_point_advance(s, p, ops), NonConvergenceError);
  p.backtracking = true;
  const StepResult r = fixed_point_advance(s, p, ops);
  CHECK(r.report.converged);
  CHECK(r.report.beta < 1.0);
  CHECK(spread(r.state.u, std::sqrt(0.5)) <= 1e-12);
}

TEST_CASE("fixed-point report invariants and nonconvergence")
{
  const MeshPtr m = paper_square(3);
  const Operators ops = Operators::build(m);
  const SimState s = initial_state(paper_initial_data(), m);
  Parameters p;
  const StepResult r = fixed_point_advance(s, p, ops);
  CHECK(r.report.converged);
  CHECK(r.report.iterations <= p.max_fp_iters);
  CHECK(r.report.history.size() == std::size_t(r.report.iterations));
  for (double v : r.report.residuals)
    CHECK(v < p.tol_fp);

  p.max_fp_iters = 2;
  try
    {
      fixed_point_advance(s, p, ops);
      FAIL("expected NonConvergenceError");
    }
  catch (const NonConvergenceError &e)
    {
      CHECK_FALSE(e.report().converged);
      CHECK(e.report().history.size() == 2);
    }
}

TEST_CASE("breakdown is reported, not thrown")
{
  const MeshPtr m = paper_square(2);
  RunSetup setup;
  setup.mesh = m;
  setup.initial = paper_initial_data();
  setup.params.t_final = 5;
  setup.params.blowup_threshold = 0.5;  // initial u peaks at 1
  const RunResult r = run(setup);
  CHECK(r.status == RunStatus::breakdown);
  REQUIRE(r.breakdown.has_value());
  CHECK(r.breakdown->step == 1);
  CHECK(r.breakdown->time == 1.0);
  CHECK(r.diagnostics.size() == 2);
  CHECK(r.diagnostics.back().breakdown);
  CHECK(r.final_state.u.breakdown_artifact);
}

TEST_CASE("run: step counts, snapshots and zero-length runs")
{
  Parameters p;
  p.t_final = 50;
  CHECK(step_count(p) == 50);
  p.t_final = 10;
  p.dt = 3;
  CHECK_THROWS_AS(step_count(p), ConfigError);
  p.dt = 0.1;
  p.t_final = 0.7;
  CHECK(step_count(p) == 7);

  const MeshPtr m = paper_square(2);
  RunSetup setup;
  setup.mesh = m;
  setup.initial = paper_initial_data();
  setup.params.t_final = 0;
  RunResult r = run(setup);
  CHECK(r.status == RunStatus::completed);
  CHECK(r.diagnostics.size() == 1);
  CHECK(r.final_state.u.coeffs() == initial_state(paper_initial_data(), m).u.coeffs());

  setup.params.t_final = 6;
  setup.snapshot_times = {0, 2, 6};
  std::vector<std::size_t> seen;
  r = run(setup, [&](const SimState &, std::size_t n) { seen.push_back(n); });
  CHECK(r.diagnostics.size() == 7);
  CHECK(r.reports.size() == 6);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[1].time == 2.0);
  CHECK(r.snapshots[2].time == 6.0);
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});

  setup.snapshot_times = {2.5};
  CHECK_THROWS_AS(run(setup), ConfigError);
  setup.snapshot_times = {7};
  CHECK_THROWS_AS(run(setup), ConfigError);
  setup.snapshot_times = {};
  setup.params.theta = 2;
  CHECK_THROWS_AS(run(setup), ConfigError);
}

TEST_CASE("run: nonconvergence returns partial results")
{
  RunSetup setup;
  setup.mesh = paper_square(2);
  setup.initial = paper_initial_data();
  setup.params.t_final = 3;
  setup.params.max_fp_iters = 1;
  const RunResult r = run(setup);
  CHECK(r.status == RunStatus::nonconvergence);
  CHECK_FALSE(r.failure.empty());
  CHECK(r.diagnostics.size() == 1);
}

TEST_CASE("spatially constant data stays constant and follows the scalar scheme")
{
  Parameters p;
  p.mu = 1;
  p.chi = 0.3;
  p.t_final = 5;
  RunSetup fine{p, paper_square(3), constant_initial_data(0.2, 0.9, 0.1), {}};
  RunSetup one{p, unit_element(), constant_initial_data(0.2, 0.9, 0.1), {}};
  std::vector<std::array<double, 3>> scalar;
  run(one, [&](const SimState &s, std::size_t) { scalar.push_back({s.u[0], s.c[0], s.p[0]}); });
  run(fine, [&](const SimState &s, std::size_t n) {
    for (const FeField *f : {&s.u, &s.c, &s.p})
      CHECK(f->max() - f->min() <= 10 * p.tol_lin);
    // the two fixed-point loops may stop on different passes
    CHECK(spread(s.u, scalar[n][0]) <= 10 * p.tol_fp);
    CHECK(spread(s.c, scalar[n][1]) <= 10 * p.tol_fp);
    CHECK(spread(s.p, scalar[n][2]) <= 10 * p.tol_fp);
  });
}

TEST_CASE("committed states do not depend on the relaxation parameter")
{
  Parameters p;
  p.mu = 0.5;
  p.t_final = 8;
  const MeshPtr m = paper_square(3);
  const Operators ops = Operators::build(m);
  std::vector<SimState> a;
  p.beta = 0.5;
  run(RunSetup{p, m, paper_initial_data(), {}}, ops, [&](const SimState &s, std::size_t) { a.push_back(s); });
  p.beta = 0.25;
  double worst = 0.0;
  run(RunSetup{p, m, paper_initial_data(), {}}, ops, [&](const SimState &s, std::size_t n) {
    for (std::size_t i = 0; i < m->n_nodes(); ++i)
      worst = std::max({worst, std::abs(s.u[i] - a[n].u[i]), std::abs(s.c[i] - a[n].c[i]),
                        std::abs(s.p[i] - a[n].p[i])});
  });
  CHECK(worst <= 1e-7);
}

TEST_CASE("diagnostics measure extrema and consistent masses")
{
  const MeshPtr m = paper_square(2);
  const Operators ops = Operators::build(m);
  SimState s = constant_state(m, 2.0, 0.5, 0.0);
  s.time = 3;
  s.p[4] = -1e-6;
  const DiagnosticsRow d = measure(s, ops);
  CHECK(d.time == 3.0);
  CHECK(d.mass_u == doctest::Approx(800.0).epsilon(1e-14));
  CHECK(d.mass_c == doctest::Approx(200.0).epsilon(1e-14));
  CHECK(d.max_u == 2.0);
  CHECK(d.min_p == -1e-6);
  CHECK(d.oscillation);
  CHECK_FALSE(d.breakdown);
}
