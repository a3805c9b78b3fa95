#include "haptosim/iocfg.hpp"

#include "haptosim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace haptosim {

namespace {

const std::set<std::string> known_keys = {
  "dim",     "domain_min", "domain_max", "base_cells",   "refinements",
  "alpha",   "chi",        "mu",         "epsilon",      "theta",
  "dt",      "t_final",    "beta",       "tol_fp",       "max_fp_iters",
  "tol_lin", "blowup_threshold",          "backtracking", "initial",
  "snapshots", "out_dir",  "vtk_every"};

std::string
trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string>
split_list(const std::string &s)
{
  std::vector<std::string> out;
  std::string              item;
  std::istringstream       in(s);
  while (std::getline(in, item, ','))
    out.push_back(trim(item));
  return out;
}

struct Entry
{
  std::string value;
  int         line = 0;  // 0 for command-line overrides
};

std::string
where(const std::string &key, const Entry &e)
{
  if (e.line > 0)
    return "line " + std::to_string(e.line) + ": key '" + key + "'";
  return "override '" + key + "'";
}

double
to_double(const std::string &key, const Entry &e, const std::string &text)
{
  double      v  = 0.0;
  const char *b  = text.data();
  const char *en = text.data() + text.size();
  // from_chars rejects a leading '+'.
  if (b != en && *b == '+')
    ++b;
  const auto [ptr, ec] = std::from_chars(b, en, v);
  if (ec != std::errc() || ptr != en || text.empty())
    throw ConfigError(where(key, e) + ": expected a number, got '" + text + "'");
  return v;
}

long long
to_integer(const std::string &key, const Entry &e, const std::string &text)
{
  long long   v  = 0;
  const char *b  = text.data();
  const char *en = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(b, en, v);
  if (ec != std::errc() || ptr != en || text.empty())
    throw ConfigError(where(key, e) + ": expected an integer, got '" + text + "'");
  return v;
}

bool
to_bool(const std::string &key, const Entry &e)
{
  const std::string &v = e.value;
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  throw ConfigError(where(key, e) + ": expected true/false, got '" + v + "'");
}

InitialSpec
to_initial(const std::string &key, const Entry &e)
{
  InitialSpec spec;
  if (e.value == "paper-gaussian")
    return spec;
  const std::string prefix = "constant:";
  if (e.value.rfind(prefix, 0) == 0)
    {
      const auto parts = split_list(e.value.substr(prefix.size()));
      if (parts.size() != 3)
        throw ConfigError(where(key, e) +
                          ": constant initial data needs three values u0,c0,p0");
      spec.kind = InitialSpec::Kind::constant;
      spec.u0   = to_double(key, e, parts[0]);
      spec.c0   = to_double(key, e, parts[1]);
      spec.p0   = to_double(key, e, parts[2]);
      return spec;
    }
  throw ConfigError(where(key, e) + ": unknown initial data '" + e.value +
                    "' (expected paper-gaussian or constant:u0,c0,p0)");
}

// Scalar (applied to every axis) or one value per axis.
template <typename T, typename Convert>
std::array<T, 3>
per_axis(const std::string &key, const Entry &e, int dim, Convert convert)
{
  const auto parts = split_list(e.value);
  if (parts.size() != 1 && parts.size() != static_cast<std::size_t>(dim))
    throw ConfigError(where(key, e) + ": expected 1 or " + std::to_string(dim) +
                      " values");
  std::array<T, 3> out{};
  for (int d = 0; d < dim; ++d)
    out[d] = convert(parts.size() == 1 ? parts[0] : parts[d]);
  return out;
}

std::map<std::string, Entry>
read_entries(const std::string &text)
{
  std::map<std::string, Entry> entries;
  std::istringstream           in(text);
  std::string                  raw;
  int                          line_no = 0;
  while (std::getline(in, raw))
    {
      ++line_no;
      std::string_view line(raw);
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      const std::string content = trim(line);
      if (content.empty())
        continue;
      const auto eq = content.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected 'key = value', got '" + content + "'");
      const std::string key   = trim(std::string_view(content).substr(0, eq));
      const std::string value = trim(std::string_view(content).substr(eq + 1));
      if (!known_keys.count(key))
        throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                          key + "'");
      if (value.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                          "' has no value");
      if (entries.count(key))
        throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                          "' repeated (first set on line " +
                          std::to_string(entries[key].line) + ")");
      entries[key] = Entry{value, line_no};
    }
  return entries;
}

void
check_snapshot_grid(const RunConfig &cfg)
{
  for (double t : cfg.snapshots)
    {
      const double n = std::round(t / cfg.params.dt);
      if (!(t >= 0.0) || std::abs(n * cfg.params.dt - t) >
                           1e-12 * std::max(1.0, std::abs(t)))
        throw ConfigError("key 'snapshots': time " + format_number(t) +
                          " is not a multiple of dt");
      if (t > cfg.params.t_final * (1.0 + 1e-12))
        throw ConfigError("key 'snapshots': time " + format_number(t) +
                          " lies beyond t_final");
    }
}

} // namespace

InitialData
InitialSpec::to_initial_data() const
{
  if (kind == Kind::constant)
    return constant_initial_data(u0, c0, p0);
  return paper_initial_data();
}

RunSetup
RunConfig::to_setup() const
{
  validate(*this);
  RunSetup s;
  s.params         = params;
  s.mesh           = make_mesh(dim, domain, base_cells, refinements);
  s.initial        = initial.to_initial_data();
  s.snapshot_times = snapshots;
  return s;
}

void
validate(const RunConfig &cfg)
{
  cfg.params.validate();
  if (cfg.dim != 2 && cfg.dim != 3)
    throw ConfigError("key 'dim': must be 2 or 3");
  if (cfg.domain.dim != cfg.dim)
    throw ConfigError("key 'dim': domain dimension mismatch");
  for (int d = 0; d < cfg.dim; ++d)
    {
      const Interval &iv = cfg.domain.axes[d];
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo))
        throw ConfigError("keys 'domain_min'/'domain_max': empty interval on axis " +
                          std::to_string(d));
      if (cfg.base_cells[d] < 1)
        throw ConfigError("key 'base_cells': must be >= 1");
    }
  if (cfg.refinements < 0 || cfg.refinements > 12)
    throw ConfigError("key 'refinements': must be in [0, 12]");
  if (cfg.vtk_every < 0)
    throw ConfigError("key 'vtk_every': must be >= 0");
  try
    {
      step_count(cfg.params);
    }
  catch (const ConfigError &e)
    {
      throw ConfigError(std::string("keys 't_final'/'dt': ") + e.what());
    }
  check_snapshot_grid(cfg);
}

RunConfig
parse_config(const std::string &text, const ConfigOverrides &overrides)
{
  auto entries = read_entries(text);
  for (const auto &[key, value] : overrides)
    {
      if (!known_keys.count(key))
        throw ConfigError("override: unknown key '" + key + "'");
      entries[key] = Entry{trim(value), 0};
    }

  RunConfig   cfg;
  Parameters &p = cfg.params;
  auto        get = [&](const char *key) -> const Entry * {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto number = [&](const char *key, double &target) {
    if (const Entry *e = get(key))
      target = to_double(key, *e, e->value);
  };

  if (const Entry *e = get("dim"))
    cfg.dim = static_cast<int>(to_integer("dim", *e, e->value));
  if (cfg.dim != 2 && cfg.dim != 3)
    throw ConfigError(where("dim", *get("dim")) + ": must be 2 or 3");
  cfg.domain.dim = cfg.dim;
  for (int d = 0; d < 3; ++d)
    cfg.domain.axes[d] = d < cfg.dim ? Interval{0.0, 20.0} : Interval{0.0, 0.0};
  if (const Entry *e = get("domain_min"))
    {
      const auto lo = per_axis<double>("domain_min", *e, cfg.dim, [&](const std::string &s) {
        return to_double("domain_min", *e, s);
      });
      for (int d = 0; d < cfg.dim; ++d)
        cfg.domain.axes[d].lo = lo[d];
    }
  if (const Entry *e = get("domain_max"))
    {
      const auto hi = per_axis<double>("domain_max", *e, cfg.dim, [&](const std::string &s) {
        return to_double("domain_max", *e, s);
      });
      for (int d = 0; d < cfg.dim; ++d)
        cfg.domain.axes[d].hi = hi[d];
    }
  cfg.base_cells = {1, 1, 1};
  if (const Entry *e = get("base_cells"))
    {
      const auto n = per_axis<long long>("base_cells", *e, cfg.dim, [&](const std::string &s) {
        return to_integer("base_cells", *e, s);
      });
      for (int d = 0; d < cfg.dim; ++d)
        {
          if (n[d] < 1)
            throw ConfigError(where("base_cells", *e) + ": must be >= 1");
          cfg.base_cells[d] = static_cast<std::size_t>(n[d]);
        }
    }
  if (const Entry *e = get("refinements"))
    cfg.refinements = static_cast<int>(to_integer("refinements", *e, e->value));

  number("alpha", p.alpha);
  number("chi", p.chi);
  number("mu", p.mu);
  number("epsilon", p.epsilon);
  number("theta", p.theta);
  number("dt", p.dt);
  number("t_final", p.t_final);
  number("beta", p.beta);
  number("tol_fp", p.tol_fp);
  number("tol_lin", p.tol_lin);
  number("blowup_threshold", p.blowup_threshold);
  if (const Entry *e = get("max_fp_iters"))
    p.max_fp_iters = static_cast<int>(to_integer("max_fp_iters", *e, e->value));
  if (const Entry *e = get("backtracking"))
    p.backtracking = to_bool("backtracking", *e);
  if (const Entry *e = get("initial"))
    cfg.initial = to_initial("initial", *e);
  if (const Entry *e = get("out_dir"))
    cfg.out_dir = e->value;
  if (const Entry *e = get("vtk_every"))
    cfg.vtk_every = static_cast<int>(to_integer("vtk_every", *e, e->value));

  if (const Entry *e = get("snapshots"))
    {
      cfg.snapshots.clear();
      if (e->value != "none")
        for (const auto &s : split_list(e->value))
          cfg.snapshots.push_back(to_double("snapshots", *e, s));
    }
  else
    std::erase_if(cfg.snapshots, [&](double t) { return t > p.t_final; });

  validate(cfg);
  return cfg;
}

RunConfig
load_config(const std::filesystem::path &path, const ConfigOverrides &overrides)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

std::string
format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos)
    s += ".0";
  return s;
}

std::string
render_config(const RunConfig &cfg)
{
  const Parameters  &p = cfg.params;
  std::ostringstream out;
  auto               axis_list = [&](auto getter) {
    std::string s;
    for (int d = 0; d < cfg.dim; ++d)
      s += (d ? "," : "") + getter(d);
    return s;
  };
  out << "dim = " << cfg.dim << "\n";
  out << "domain_min = "
      << axis_list([&](int d) { return format_number(cfg.domain.axes[d].lo); }) << "\n";
  out << "domain_max = "
      << axis_list([&](int d) { return format_number(cfg.domain.axes[d].hi); }) << "\n";
  out << "base_cells = "
      << axis_list([&](int d) { return std::to_string(cfg.base_cells[d]); }) << "\n";
  out << "refinements = " << cfg.refinements << "\n";
  out << "alpha = " << format_number(p.alpha) << "\n";
  out << "chi = " << format_number(p.chi) << "\n";
  out << "mu = " << format_number(p.mu) << "\n";
  out << "epsilon = " << format_number(p.epsilon) << "\n";
  out << "theta = " << format_number(p.theta) << "\n";
  out << "dt = " << format_number(p.dt) << "\n";
  out << "t_final = " << format_number(p.t_final) << "\n";
  out << "beta = " << format_number(p.beta) << "\n";
  out << "tol_fp = " << format_number(p.tol_fp) << "\n";
  out << "max_fp_iters = " << p.max_fp_iters << "\n";
  out << "tol_lin = " << format_number(p.tol_lin) << "\n";
  out << "blowup_threshold = " << format_number(p.blowup_threshold) << "\n";
  out << "backtracking = " << (p.backtracking ? "true" : "false") << "\n";
  if (cfg.initial.kind == InitialSpec::Kind::constant)
    out << "initial = constant:" << format_number(cfg.initial.u0) << ","
        << format_number(cfg.initial.c0) << "," << format_number(cfg.initial.p0)
        << "\n";
  else
    out << "initial = paper-gaussian\n";
  out << "snapshots = ";
  if (cfg.snapshots.empty())
    out << "none";
  for (std::size_t i = 0; i < cfg.snapshots.size(); ++i)
    out << (i ? "," : "") << format_number(cfg.snapshots[i]);
  out << "\n";
  if (!cfg.out_dir.empty())
    out << "out_dir = " << cfg.out_dir << "\n";
  out << "vtk_every = " << cfg.vtk_every << "\n";
  return out.str();
}

void
write_vtk(const SimState &state, const std::filesystem::path &path)
{
  const StructuredMesh &mesh = *state.u.mesh();
  std::ofstream         out(path);
  if (!out)
    throw IoError("write_vtk: cannot open " + path.string());

  const bool broken = state.u.breakdown_artifact || state.c.breakdown_artifact ||
                      state.p.breakdown_artifact;
  out << "# vtk DataFile Version 3.0\n";
  out << "haptosim t=" << format_number(state.time)
      << (broken ? " BREAKDOWN ARTIFACT" : "") << "\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const Point &x : mesh.nodes())
    out << format_number(x[0]) << " " << format_number(x[1]) << " "
        << format_number(x[2]) << "\n";

  const std::size_t nve = mesh.nodes_per_element();
  out << "CELLS " << mesh.n_elements() << " " << mesh.n_elements() * (nve + 1) << "\n";
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
    {
      out << nve;
      for (std::size_t v : mesh.element(e))
        out << " " << v;
      out << "\n";
    }
  const int cell_type = mesh.dim() == 2 ? 9 : 12;
  out << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (std::size_t e = 0; e < mesh.n_elements(); ++e)
    out << cell_type << "\n";

  out << "POINT_DATA " << mesh.n_nodes() << "\n";
  for (const auto &[name, field] :
       {std::pair{"u", &state.u}, std::pair{"c", &state.c}, std::pair{"p", &state.p}})
    {
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : field->coeffs())
        out << format_number(v) << "\n";
    }
  if (!out)
    throw IoError("write_vtk: failed writing " + path.string());
}

void
write_diagnostics_csv(const std::vector<DiagnosticsRow> &series,
                      const std::filesystem::path       &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("write_diagnostics_csv: cannot open " + path.string());
  out << diagnostics_csv_header << "\n";
  for (const DiagnosticsRow &r : series)
    out << format_number(r.time) << "," << format_number(r.max_u) << ","
        << format_number(r.min_u) << "," << format_number(r.max_c) << ","
        << format_number(r.min_c) << "," << format_number(r.max_p) << ","
        << format_number(r.min_p) << "," << format_number(r.mass_u) << ","
        << format_number(r.mass_c) << "," << format_number(r.mass_p) << ","
        << r.fp_iters << "," << (r.breakdown ? 1 : 0) << "\n";
  if (!out)
    throw IoError("write_diagnostics_csv: failed writing " + path.string());
}

} // namespace haptosim
