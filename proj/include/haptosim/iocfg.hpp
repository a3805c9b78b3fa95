#pragma once

#include "haptosim/mesh.hpp"
#include "haptosim/model.hpp"
#include "haptosim/stepper.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace haptosim {

struct InitialSpec
{
  enum class Kind
  {
    paper_gaussian,
    constant
  };

  Kind   kind = Kind::paper_gaussian;
  double u0 = 0.0, c0 = 0.0, p0 = 0.0;  // constant data only

  InitialData to_initial_data() const;

  friend bool operator==(const InitialSpec &, const InitialSpec &) = default;
};

// Everything needed to run one simulation.
struct RunConfig
{
  Parameters                 params;
  int                        dim = 2;
  Box                        domain{2, {Interval{0.0, 20.0}, Interval{0.0, 20.0}, Interval{0.0, 0.0}}};
  std::array<std::size_t, 3> base_cells{1, 1, 1};
  int                        refinements = 5;
  InitialSpec                initial;
  std::vector<double>        snapshots{5.0, 15.0, 25.0, 35.0};
  std::string                out_dir;  // empty: let the caller decide
  int                        vtk_every = 0;  // 0: snapshot times only

  // Builds the mesh and initial data. Throws ConfigError.
  RunSetup to_setup() const;

  friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Flat `key = value` text, `#` starts a comment. Unknown keys, repeated keys
// and malformed values are rejected with the line number; constraint
// violations name the key. `overrides` are applied after the text, as if
// appended (but replacing instead of repeating). Missing keys keep the
// RunConfig defaults; default snapshot times beyond t_final are dropped.
RunConfig parse_config(const std::string &text, const ConfigOverrides &overrides = {});

RunConfig load_config(const std::filesystem::path &path,
                      const ConfigOverrides       &overrides = {});

// Text that parse_config maps back to an equal RunConfig.
std::string render_config(const RunConfig &cfg);

// Throws ConfigError on the first invalid setting.
void validate(const RunConfig &cfg);

// Shortest round-trip decimal form; integral values get a trailing ".0".
std::string format_number(double v);

// Legacy ASCII VTK unstructured grid with point data u, c, p.
void write_vtk(const SimState &state, const std::filesystem::path &path);

void write_diagnostics_csv(const std::vector<DiagnosticsRow> &series,
                           const std::filesystem::path       &path);

inline constexpr const char *diagnostics_csv_header =
  "time,max_u,min_u,max_c,min_c,max_p,min_p,mass_u,mass_c,mass_p,fp_iters,breakdown";

} // namespace haptosim
