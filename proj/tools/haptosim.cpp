// haptosim: run, sweep and verify the haptotaxis invasion simulator.
//
// Exit codes: 0 success, 1 I/O or internal error, 2 config error,
// 3 breakdown, 4 fixed-point nonconvergence, 5 verification failure.

#include "haptosim/iocfg.hpp"
#include "haptosim/stepper.hpp"
#include "haptosim/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace haptosim;

namespace {

enum Exit : int
{
  exit_ok          = 0,
  exit_error       = 1,
  exit_config      = 2,
  exit_breakdown   = 3,
  exit_nonconverge = 4,
  exit_verify      = 5
};

ConfigOverrides
parse_assignments(const std::vector<std::string> &items, const char *flag)
{
  ConfigOverrides out;
  for (const auto &item : items)
    {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ConfigError(std::string(flag) + ": expected key=value, got '" + item + "'");
      out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
  return out;
}

RunConfig
read_config(const std::string &path, const ConfigOverrides &overrides)
{
  if (path.empty())
    return parse_config("", overrides);
  return load_config(path, overrides);
}

fs::path
output_root(const std::string &flag, const RunConfig &cfg)
{
  if (!flag.empty())
    return flag;
  if (!cfg.out_dir.empty())
    return cfg.out_dir;
  if (const char *env = std::getenv("HAPTOSIM_OUT"); env && *env)
    return env;
  return "haptosim_out";
}

std::string
snapshot_name(double t)
{
  return "snapshot_t" + format_number(t) + ".vtk";
}

std::string
status_name(RunStatus s)
{
  switch (s)
    {
      case RunStatus::completed:
        return "completed";
      case RunStatus::breakdown:
        return "breakdown";
      case RunStatus::nonconvergence:
        return "nonconvergence";
    }
  return "unknown";
}

int
exit_code(RunStatus s)
{
  switch (s)
    {
      case RunStatus::completed:
        return exit_ok;
      case RunStatus::breakdown:
        return exit_breakdown;
      case RunStatus::nonconvergence:
        return exit_nonconverge;
    }
  return exit_error;
}

// Runs one configuration into `dir`. Returns the result for summaries.
RunResult
execute(const RunConfig &cfg, const fs::path &dir, std::ostream &log)
{
  const RunSetup setup = cfg.to_setup();
  fs::create_directories(dir);
  {
    std::ofstream cfg_out(dir / "config.cfg");
    cfg_out << render_config(cfg);
  }

  const auto observer = [&](const SimState &s, std::size_t step) {
    if (cfg.vtk_every > 0 && step % static_cast<std::size_t>(cfg.vtk_every) == 0)
      {
        std::ostringstream name;
        name << "step_" << std::setw(6) << std::setfill('0') << step << ".vtk";
        write_vtk(s, dir / name.str());
      }
  };
  RunResult result = run(setup, observer);

  for (const SimState &s : result.snapshots)
    write_vtk(s, dir / snapshot_name(s.time));
  if (result.status == RunStatus::breakdown)
    write_vtk(result.final_state, dir / ("breakdown_t" + format_number(result.final_state.time) + ".vtk"));
  write_diagnostics_csv(result.diagnostics, dir / "diagnostics.csv");

  for (const auto &w : result.warnings)
    log << "warning: " << w << "\n";
  if (result.breakdown)
    log << "breakdown at t = " << result.breakdown->time << " (step "
        << result.breakdown->step << "): " << result.breakdown->reason << "\n";
  if (result.status == RunStatus::nonconvergence)
    log << "error: " << result.failure << "\n";
  return result;
}

int
cmd_run(const std::string &config, const std::vector<std::string> &sets,
        const std::string &out)
{
  const RunConfig cfg = read_config(config, parse_assignments(sets, "--set"));
  const fs::path  dir = output_root(out, cfg);
  const RunResult res = execute(cfg, dir, std::cerr);
  std::cout << "status: " << status_name(res.status) << "\n";
  for (const SimState &s : res.snapshots)
    std::cout << "t = " << format_number(s.time) << "  max u = " << format_number(s.u.max())
              << "\n";
  std::cout << "output: " << dir.string() << "\n";
  return exit_code(res.status);
}

struct SweepAxis
{
  std::string              key;
  std::vector<std::string> values;
};

struct SweepChild
{
  ConfigOverrides assignment;  // axis values only
  RunConfig       cfg;
  std::string     name;
  std::string     status = "error";
  int             code   = exit_error;
  std::vector<double> max_u;   // per snapshot, nan when missing
  std::string     message;
};

int
cmd_sweep(const std::string &config, const std::vector<std::string> &sets,
          const std::vector<std::string> &axis_args, const std::string &out, int jobs)
{
  const ConfigOverrides base_sets = parse_assignments(sets, "--set");
  std::vector<SweepAxis> axes;
  for (const auto &[key, list] : parse_assignments(axis_args, "--axis"))
    {
      SweepAxis axis{key, {}};
      std::stringstream ss(list);
      std::string       v;
      while (std::getline(ss, v, ','))
        if (!v.empty())
          axis.values.push_back(v);
      if (axis.values.empty())
        throw ConfigError("--axis " + key + ": no values");
      axes.push_back(std::move(axis));
    }
  if (axes.empty())
    throw ConfigError("sweep: at least one --axis is required");

  // Cartesian expansion, last axis fastest.
  std::vector<SweepChild> children;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true)
    {
      SweepChild child;
      for (std::size_t a = 0; a < axes.size(); ++a)
        {
          child.assignment.emplace_back(axes[a].key, axes[a].values[idx[a]]);
          child.name += (a ? "_" : "") + axes[a].key + "-" + axes[a].values[idx[a]];
        }
      ConfigOverrides all = base_sets;
      all.insert(all.end(), child.assignment.begin(), child.assignment.end());
      child.cfg = read_config(config, all);  // validates every child up front
      children.push_back(std::move(child));

      std::size_t a = axes.size();
      while (a > 0 && ++idx[a - 1] == axes[a - 1].values.size())
        idx[--a] = 0;
      if (a == 0)
        break;
    }

  const fs::path root = output_root(out, children.front().cfg);
  fs::create_directories(root);

  std::atomic<std::size_t> next{0};
  std::mutex               log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < children.size(); i = next++)
      {
        SweepChild        &child = children[i];
        std::ostringstream log;
        try
          {
            const RunResult res = execute(child.cfg, root / child.name, log);
            child.status        = status_name(res.status);
            child.code          = exit_code(res.status);
            for (double t : child.cfg.snapshots)
              {
                double v = std::numeric_limits<double>::quiet_NaN();
                for (const SimState &s : res.snapshots)
                  if (std::abs(s.time - t) <= 1e-9 * std::max(1.0, t))
                    v = s.u.max();
                child.max_u.push_back(v);
              }
          }
        catch (const std::exception &e)
          {
            child.status  = "error";
            child.code    = exit_error;
            child.message = e.what();
            log << "error: " << e.what() << "\n";
          }
        std::lock_guard lock(log_mutex);
        std::cerr << "[" << child.name << "] " << child.status << "\n" << log.str();
      }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(children.size())));
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back(worker);
  for (auto &t : pool)
    t.join();

  // Snapshot columns come from the base configuration.
  const std::vector<double> times = children.front().cfg.snapshots;
  std::ofstream             summary(root / "summary.csv");
  summary << "run";
  for (const auto &axis : axes)
    summary << "," << axis.key;
  summary << ",status,exit_code";
  for (double t : times)
    summary << ",max_u_t" << format_number(t);
  summary << "\n";
  for (const auto &child : children)
    {
      summary << child.name;
      for (const auto &kv : child.assignment)
        summary << "," << kv.second;
      summary << "," << child.status << "," << child.code;
      for (std::size_t k = 0; k < times.size(); ++k)
        summary << "," << (k < child.max_u.size() ? format_number(child.max_u[k]) : "nan");
      summary << "\n";
    }
  std::cout << "summary: " << (root / "summary.csv").string() << "\n";

  bool any_error = false, any_nonconv = false, any_breakdown = false;
  for (const auto &child : children)
    {
      any_error |= child.code == exit_error;
      any_nonconv |= child.code == exit_nonconverge;
      any_breakdown |= child.code == exit_breakdown;
    }
  if (any_error)
    return exit_error;
  if (any_nonconv)
    return exit_nonconverge;
  if (any_breakdown)
    return exit_breakdown;
  return exit_ok;
}

struct Check
{
  std::string name;
  double      value;
  double      limit;
  bool        pass;
};

Check
at_most(std::string name, double value, double limit)
{
  return {std::move(name), value, limit, value <= limit};
}

Check
within(std::string name, double value, double target, double tol)
{
  return {std::move(name), value, tol, std::abs(value - target) <= tol};
}

std::vector<Check>
suite_element()
{
  const CrosscheckReport r = element_matrix_crosscheck(50);
  return {at_most("element: unit-square mass vs closed form", r.mass_symbolic, 1e-14),
          at_most("element: unit-square stiffness vs closed form", r.stiffness_symbolic, 1e-14),
          at_most("element: unit-cube mass row sums vs 1/8", r.cube_row_sum, 1e-15),
          at_most("element: mass vs 5-point Gauss", r.mass, 1e-13),
          at_most("element: stiffness vs 5-point Gauss", r.stiffness, 1e-13),
          at_most("element: weighted mass vs 5-point Gauss", r.weighted, 1e-13),
          at_most("element: haptotaxis vs 5-point Gauss", r.haptotaxis, 1e-13),
          at_most("element: product load vs 5-point Gauss", r.load, 1e-13)};
}

Parameters
reaction_parameters()
{
  Parameters p;
  p.mu      = 1.0;
  p.epsilon = 0.2;
  return p;
}

std::vector<Check>
suite_ode()
{
  const Parameters p  = reaction_parameters();
  const Triple     y0 = {0.5, 0.75, 0.25};
  const Triple     a  = ode_oracle(p, y0, 1.0, 4096).endpoint();
  const Triple     b  = ode_oracle(p, y0, 1.0, 8192).endpoint();
  double           self = 0.0;
  for (int i = 0; i < 3; ++i)
    self = std::max(self, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-300));

  RunSetup setup;
  setup.params         = p;
  setup.params.theta   = 0.5;
  setup.params.dt      = 1e-3;
  setup.params.t_final = 1.0;
  setup.mesh           = make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}}, {1, 1, 1}, 0);
  setup.initial        = constant_initial_data(y0[0], y0[1], y0[2]);
  const RunResult res  = run(setup);
  double          gap  = std::numeric_limits<double>::infinity();
  if (res.status == RunStatus::completed)
    {
      gap = 0.0;
      for (std::size_t i = 0; i < setup.mesh->n_nodes(); ++i)
        gap = std::max({gap, std::abs(res.final_state.u[i] - b[0]),
                        std::abs(res.final_state.c[i] - b[1]),
                        std::abs(res.final_state.p[i] - b[2])});
    }
  return {at_most("ode: oracle self-convergence (relative)", self, 1e-12),
          at_most("ode: constant-data scheme vs oracle, dt=1e-3", gap, 1e-5)};
}

std::vector<Check>
suite_order(const fs::path &csv_dir)
{
  const std::vector<double> dts = {0.1, 0.05, 0.025, 0.0125};
  const Triple              y0  = {0.5, 0.75, 0.25};
  const OrderStudy          cn  = temporal_order_study(reaction_parameters(), 0.5, dts, y0);
  const OrderStudy          be  = temporal_order_study(reaction_parameters(), 1.0, dts, y0);
  if (!csv_dir.empty())
    {
      fs::create_directories(csv_dir);
      write_order_study_csv(cn, csv_dir / "order_theta0.5.csv");
      write_order_study_csv(be, csv_dir / "order_theta1.csv");
    }
  return {within("order: theta = 0.5", cn.order, 2.0, 0.1),
          within("order: theta = 1", be.order, 1.0, 0.1)};
}

std::vector<Check>
suite_scaling()
{
  ScalingProblem prob;
  prob.params.t_final = 10.0;
  prob.dim            = 2;
  prob.extents        = Box{2, {Interval{0, 20}, Interval{0, 20}, Interval{0, 0}}};
  prob.refinements    = 5;
  prob.initial        = paper_initial_data();
  const ScalingReport r = scaling_equivalence(prob);
  const bool          ok =
    r.original_status == RunStatus::completed && r.rescaled_status == RunStatus::completed;
  return {at_most("scaling: baseline, 32x32, T = 10", ok ? r.max_discrepancy : INFINITY, 1e-8)};
}

int
cmd_verify(const std::string &suite, const std::string &out)
{
  const std::vector<std::string> known = {"element", "ode", "order", "scaling", "all"};
  if (std::find(known.begin(), known.end(), suite) == known.end())
    throw ConfigError("--suite must be one of element, ode, order, scaling, all");
  std::vector<Check> checks;
  auto               add = [&](std::vector<Check> more) {
    checks.insert(checks.end(), more.begin(), more.end());
  };
  if (suite == "element" || suite == "all")
    add(suite_element());
  if (suite == "ode" || suite == "all")
    add(suite_ode());
  if (suite == "order" || suite == "all")
    add(suite_order(out));
  if (suite == "scaling" || suite == "all")
    add(suite_scaling());

  int failures = 0;
  for (const auto &c : checks)
    {
      std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << ": " << c.value
                << " (limit " << c.limit << ")\n";
      if (!c.pass)
        {
          ++failures;
          std::cerr << "verification failure: " << c.name << " = " << c.value
                    << " violates limit " << c.limit << "\n";
        }
    }
  return failures ? exit_verify : exit_ok;
}

} // namespace

int
main(int argc, char **argv)
{
  CLI::App app{"Finite-element simulator for haptotactic cancer invasion"};
  app.require_subcommand(1);

  std::string              config, out, suite = "all";
  std::vector<std::string> sets, axes;
  int                      jobs = 1;

  auto *run_cmd = app.add_subcommand("run", "Run one simulation");
  run_cmd->add_option("--config", config, "Configuration file (key = value)");
  run_cmd->add_option("--set", sets, "Override a configuration key (key=value)");
  run_cmd->add_option("--out", out, "Output directory");

  auto *sweep_cmd = app.add_subcommand("sweep", "Run the Cartesian product of parameter axes");
  sweep_cmd->add_option("--config", config, "Base configuration file");
  sweep_cmd->add_option("--set", sets, "Override a base configuration key (key=value)");
  sweep_cmd->add_option("--axis", axes, "Sweep axis key=v1,v2,...")->required();
  sweep_cmd->add_option("--out", out, "Output root directory");
  sweep_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto *verify_cmd = app.add_subcommand("verify", "Run verification studies");
  verify_cmd->add_option("--suite", suite, "element|ode|order|scaling|all");
  verify_cmd->add_option("--out", out, "Directory for study CSV reports");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::ParseError &e)
    {
      const int code = app.exit(e);
      return code == 0 ? exit_ok : exit_config;
    }

  try
    {
      if (*run_cmd)
        return cmd_run(config, sets, out);
      if (*sweep_cmd)
        return cmd_sweep(config, sets, axes, out, jobs);
      return cmd_verify(suite, out);
    }
  catch (const ConfigError &e)
    {
      std::cerr << "config error: " << e.what() << "\n";
      return exit_config;
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return exit_error;
    }
}
