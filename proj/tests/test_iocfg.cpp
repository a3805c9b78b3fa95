#include "doctest.h"

#include "haptosim/errors.hpp"
#include "haptosim/iocfg.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace haptosim;
namespace fs = std::filesystem;

namespace {

std::string
slurp(const fs::path &p)
{
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path
scratch(const std::string &name)
{
  const fs::path dir = fs::temp_directory_path() / "haptosim_iocfg_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string
error_of(const std::string &text)
{
  try
    {
      parse_config(text);
    }
  catch (const ConfigError &e)
    {
      return e.what();
    }
  return "";
}

// Legacy VTK grammar accepted by the writer. Returns the parsed content or
// throws std::runtime_error describing the first deviation.
struct VtkFile
{
  std::string                      title;
  std::vector<std::array<double, 3>> points;
  std::vector<std::vector<long>>   cells;
  std::vector<int>                 types;
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
};

VtkFile
parse_vtk(const std::string &text)
{
  std::istringstream lines(text);
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(lines, line))
      throw std::runtime_error("unexpected end of file");
    return line;
  };
  auto expect = [&](const std::string &want) {
    if (next_line() != want)
      throw std::runtime_error("expected '" + want + "', got '" + line + "'");
  };
  auto tokens = [&]() {
    std::istringstream ts(next_line());
    std::vector<std::string> t;
    for (std::string s; ts >> s;)
      t.push_back(s);
    return t;
  };
  auto number = [](const std::string &s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::runtime_error("bad number '" + s + "'");
    return v;
  };
  auto count = [](const std::string &s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw std::runtime_error("bad count '" + s + "'");
    return std::stol(s);
  };

  VtkFile f;
  expect("# vtk DataFile Version 3.0");
  f.title = next_line();
  if (f.title.size() > 255)
    throw std::runtime_error("title too long");
  expect("ASCII");
  expect("DATASET UNSTRUCTURED_GRID");

  auto t = tokens();
  if (t.size() != 3 || t[0] != "POINTS" || t[2] != "double")
    throw std::runtime_error("bad POINTS line");
  const long np = count(t[1]);
  for (long i = 0; i < np; ++i)
    {
      t = tokens();
      if (t.size() != 3)
        throw std::runtime_error("point needs 3 coordinates");
      f.points.push_back({number(t[0]), number(t[1]), number(t[2])});
    }

  t = tokens();
  if (t.size() != 3 || t[0] != "CELLS")
    throw std::runtime_error("bad CELLS line");
  const long nc = count(t[1]), total = count(t[2]);
  long seen = 0;
  for (long i = 0; i < nc; ++i)
    {
      t = tokens();
      const long k = count(t.at(0));
      if (long(t.size()) != k + 1)
        throw std::runtime_error("cell size mismatch");
      std::vector<long> ids;
      for (long j = 1; j <= k; ++j)
        {
          ids.push_back(count(t[j]));
          if (ids.back() >= np)
            throw std::runtime_error("cell references a missing point");
        }
      f.cells.push_back(ids);
      seen += k + 1;
    }
  if (seen != total)
    throw std::runtime_error("CELLS size field is wrong");

  t = tokens();
  if (t.size() != 2 || t[0] != "CELL_TYPES" || count(t[1]) != nc)
    throw std::runtime_error("bad CELL_TYPES line");
  for (long i = 0; i < nc; ++i)
    {
      t = tokens();
      if (t.size() != 1)
        throw std::runtime_error("bad cell type");
      f.types.push_back(int(count(t[0])));
    }

  t = tokens();
  if (t.size() != 2 || t[0] != "POINT_DATA" || count(t[1]) != np)
    throw std::runtime_error("bad POINT_DATA line");
  while (std::getline(lines, line))
    {
      std::istringstream ts(line);
      std::string kw, name, type, ncomp;
      ts >> kw >> name >> type >> ncomp;
      if (kw != "SCALARS" || type != "double" || ncomp != "1")
        throw std::runtime_error("bad SCALARS line '" + line + "'");
      expect("LOOKUP_TABLE default");
      std::vector<double> v;
      for (long i = 0; i < np; ++i)
        {
          t = tokens();
          if (t.size() != 1)
            throw std::runtime_error("one value per line expected");
          v.push_back(number(t[0]));
        }
      f.scalars.push_back({name, v});
    }
  return f;
}

} // namespace

TEST_CASE("empty config gives the paper setup")
{
  const RunConfig c = parse_config("");
  CHECK(c == RunConfig{});
  CHECK(c.dim == 2);
  CHECK(c.domain.axes[0].lo == 0.0);
  CHECK(c.domain.axes[0].hi == 20.0);
  CHECK(c.domain.axes[1].hi == 20.0);
  CHECK(c.refinements == 5);
  CHECK(c.params.alpha == 10.0);
  CHECK(c.params.epsilon == 0.2);
  CHECK(c.params.theta == 0.5);
  CHECK(c.params.dt == 1.0);
  CHECK(c.params.t_final == 50.0);
  CHECK(c.params.beta == 0.5);
  CHECK(c.params.tol_fp == 1e-8);
  CHECK(c.snapshots == std::vector<double>{5, 15, 25, 35});
  const RunSetup s = c.to_setup();
  CHECK(s.mesh->n_nodes() == 1089);
}

TEST_CASE("haptotaxis sweep configuration")
{
  const RunConfig c = parse_config("chi = 0.75\nmu = 0.01  # small proliferation\n");
  CHECK(c.params.chi == 0.75);
  CHECK(c.params.mu == 0.01);
  CHECK(c.params.alpha == 10.0);
}

TEST_CASE("full config text")
{
  const std::string text = R"(
# three-dimensional cube
dim = 3
domain_min = 0
domain_max = 1, 2, 3
base_cells = 2,1,1
refinements = 1
theta = 1
dt = 0.5
t_final = 2
initial = constant:0.1,1,0
snapshots = 0.5, 2
out_dir = results/cube
vtk_every = 2
backtracking = true
max_fp_iters = 40
)";
  const RunConfig c = parse_config(text);
  CHECK(c.dim == 3);
  CHECK(c.domain.axes[2].hi == 3.0);
  CHECK(c.domain.axes[1].lo == 0.0);
  CHECK(c.base_cells == std::array<std::size_t, 3>{2, 1, 1});
  CHECK(c.initial.kind == InitialSpec::Kind::constant);
  CHECK(c.initial.u0 == 0.1);
  CHECK(c.snapshots == std::vector<double>{0.5, 2});
  CHECK(c.out_dir == "results/cube");
  CHECK(c.vtk_every == 2);
  CHECK(c.params.backtracking);
  CHECK(c.params.max_fp_iters == 40);
  CHECK(c.to_setup().mesh->n_elements() == 16);
}

TEST_CASE("config errors carry line numbers or key names")
{
  CHECK(error_of("theta = 1.5").find("theta") != std::string::npos);
  CHECK(error_of("\n\nspeed = 3").find("line 3") != std::string::npos);
  CHECK(error_of("chi = 1\nchi = 2").find("line 2") != std::string::npos);
  CHECK(error_of("alpha 10").find("line 1") != std::string::npos);
  CHECK(error_of("alpha = ten").find("alpha") != std::string::npos);
  CHECK(error_of("max_fp_iters = 2.5").find("max_fp_iters") != std::string::npos);
  CHECK(error_of("dim = 4").find("dim") != std::string::npos);
  CHECK(error_of("domain_min = 5\ndomain_max = 5").find("domain") != std::string::npos);
  CHECK(error_of("snapshots = 2.5").find("snapshots") != std::string::npos);
  CHECK(error_of("t_final = 10\nsnapshots = 20").find("snapshots") != std::string::npos);
  CHECK(error_of("initial = sinusoid").find("initial") != std::string::npos);
  CHECK(error_of("dt = 3\nt_final = 10\nsnapshots = none").find("t_final") != std::string::npos);
  CHECK(error_of("base_cells = 1,2,3").find("base_cells") != std::string::npos);
  CHECK(error_of("chi =").find("chi") != std::string::npos);
}

TEST_CASE("overrides replace values and default snapshots follow t_final")
{
  const RunConfig c = parse_config("chi = 0.25\nt_final = 20\n", {{"chi", "0.5"}, {"mu", "1"}});
  CHECK(c.params.chi == 0.5);
  CHECK(c.params.mu == 1.0);
  CHECK(c.snapshots == std::vector<double>{5, 15});
  CHECK_THROWS_AS(parse_config("", {{"gamma", "1"}}), ConfigError);
  CHECK(parse_config("snapshots = none").snapshots.empty());
}

TEST_CASE("render and parse round trip")
{
  RunConfig c;
  c.params.chi = 0.1 + 0.2;  // not a short decimal
  c.params.mu = 1e-10;
  c.params.tol_lin = 3.3e-13;
  c.params.backtracking = true;
  c.dim = 3;
  c.domain = Box{3, {Interval{-1.5, 2}, Interval{0, 1.0 / 3.0}, Interval{0, 7}}};
  c.base_cells = {1, 3, 2};
  c.refinements = 2;
  c.initial = InitialSpec{InitialSpec::Kind::constant, 0.25, 1, 1e-3};
  c.snapshots = {0, 5, 15};
  c.out_dir = "some dir/x";
  c.vtk_every = 3;
  CHECK(parse_config(render_config(c)) == c);
  CHECK(parse_config(render_config(RunConfig{})) == RunConfig{});
  RunConfig none;
  none.snapshots.clear();
  CHECK(parse_config(render_config(none)) == none);
}

TEST_CASE("number formatting")
{
  CHECK(format_number(1.0) == "1.0");
  CHECK(format_number(0.0) == "0.0");
  CHECK(format_number(-20.0) == "-20.0");
  CHECK(format_number(0.3106) == "0.3106");
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(std::stod(format_number(1e-300)) == 1e-300);
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("vtk: single quadrilateral")
{
  const MeshPtr m = make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}}, {1, 1, 1}, 0);
  const SimState s{2.5, FeField(m, 1.0), FeField(m, 1.0), FeField(m, 1.0)};
  const fs::path p = scratch("quad.vtk");
  write_vtk(s, p);
  const std::string text = slurp(p);
  const VtkFile f = parse_vtk(text);
  CHECK(f.points.size() == 4);
  CHECK(f.points[3] == std::array<double, 3>{1, 1, 0});
  CHECK(f.cells.size() == 1);
  CHECK(f.cells[0] == std::vector<long>{0, 1, 3, 2});
  CHECK(f.types == std::vector<int>{9});
  REQUIRE(f.scalars.size() == 3);
  CHECK(f.scalars[0].first == "u");
  CHECK(f.scalars[1].first == "c");
  CHECK(f.scalars[2].first == "p");
  CHECK(text.find("LOOKUP_TABLE default\n1.0\n1.0\n1.0\n1.0\n") != std::string::npos);
  CHECK(f.title.find("t=2.5") != std::string::npos);
}

TEST_CASE("vtk: hexahedra, exact values and determinism")
{
  const MeshPtr m = make_mesh(3, Box{3, {Interval{0, 2}, Interval{0, 1}, Interval{-1, 1}}}, {1, 1, 1}, 1);
  SimState s = initial_state(paper_initial_data(), m);
  s.time = 15;
  s.u[3] = 1.0 / 3.0;
  const fs::path a = scratch("hex_a.vtk"), b = scratch("hex_b.vtk");
  write_vtk(s, a);
  write_vtk(s, b);
  CHECK(slurp(a) == slurp(b));
  const VtkFile f = parse_vtk(slurp(a));
  CHECK(f.points.size() == 27);
  CHECK(f.cells.size() == 8);
  for (int t : f.types)
    CHECK(t == 12);
  for (std::size_t i = 0; i < 27; ++i)
    {
      CHECK(f.scalars[0].second[i] == s.u[i]);
      CHECK(f.scalars[1].second[i] == s.c[i]);
      CHECK(f.scalars[2].second[i] == s.p[i]);
      for (int d = 0; d < 3; ++d)
        CHECK(f.points[i][d] == m->node(i)[d]);
    }
  for (std::size_t e = 0; e < 8; ++e)
    for (std::size_t k = 0; k < 8; ++k)
      CHECK(std::size_t(f.cells[e][k]) == m->element(e)[k]);
}

TEST_CASE("vtk: breakdown artifacts are flagged")
{
  const MeshPtr m = make_mesh(2, Box{2, {Interval{0, 1}, Interval{0, 1}, Interval{0, 0}}}, {1, 1, 1}, 0);
  SimState s{4, FeField(m, 1.0), FeField(m, 1.0), FeField(m, 1.0)};
  s.u[1] = NAN;
  s.u.breakdown_artifact = true;
  const fs::path p = scratch("broken.vtk");
  write_vtk(s, p);
  const std::string text = slurp(p);
  CHECK(text.find("BREAKDOWN ARTIFACT") != std::string::npos);
  CHECK(text.find("\nnan\n") != std::string::npos);
  CHECK_THROWS_AS(write_vtk(s, scratch("missing") / "dir" / "x.vtk"), IoError);
}

TEST_CASE("diagnostics csv")
{
  RunSetup setup = parse_config("refinements = 2\nt_final = 0").to_setup();
  RunResult r = run(setup);
  const fs::path p = scratch("zero.csv");
  write_diagnostics_csv(r.diagnostics, p);
  std::istringstream in(slurp(p));
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == diagnostics_csv_header);
  CHECK(row.rfind("0.0,1.0,", 0) == 0);
  CHECK(row.substr(row.size() - 4) == ",0,0");
  CHECK_FALSE(std::getline(in, extra));

  setup = parse_config("refinements = 2\nt_final = 5\nblowup_threshold = 0.5").to_setup();
  r = run(setup);
  write_diagnostics_csv(r.diagnostics, p);
  std::istringstream in2(slurp(p));
  std::vector<std::string> rows;
  for (std::string l; std::getline(in2, l);)
    rows.push_back(l);
  REQUIRE(rows.size() == 3);
  CHECK(rows.back().substr(rows.back().size() - 2) == ",1");
  CHECK_THROWS_AS(write_diagnostics_csv(r.diagnostics, scratch("missing") / "d" / "x.csv"), IoError);
}
