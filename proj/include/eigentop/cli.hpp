#pragma once

#include "eigentop/criteria.hpp"
#include "eigentop/levelset.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eigentop::cli {

using fem::Mesh;

enum class ExitCode
{
  Success = 0,
  ConfigFailure = 1,
  NumericalFailure = 2
};

/// Boundary setup of a run. `Mixed` puts a Robin side at the lowest y of the
/// domain and Dirichlet elsewhere.
enum class BcMode
{
  Dirichlet,
  Neumann,
  Robin,
  Mixed
};

struct RunConfig
{
  levelset::PhaseConfig phase; ///< phase.bc is filled in by build_setup
  std::string domain = "square";
  /// Target edge length; 0 selects diameter / 60.
  double h = 0.0;
  /// Optional mesh file (write_mesh format) replacing the generated mesh.
  std::string mesh_file;
  BcMode bc = BcMode::Dirichlet;
  /// Per-tag overrides, applied after `bc`.
  std::map<std::string, fem::BcKind> bc_by_tag;
  double eta = 0.0;
  std::filesystem::path output_dir = "run";

  /// Throws ConfigError naming the offending key.
  void validate() const;
  double resolved_h() const;
};

/// key = value lines, `#` starts a comment. Unknown or repeated keys and
/// invalid values throw ConfigError with the key in the message.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration; parse_config(config_echo(c)) reproduces c.
std::string config_echo(const RunConfig& config);

std::string to_string(BcMode mode);
std::string to_string(fem::BcKind kind);

struct Setup
{
  Mesh mesh;
  fem::BoundaryCondition bc;
};

/// Mesh and boundary condition of a configuration.
Setup build_setup(const RunConfig& config);

using NamedField = std::pair<std::string, std::span<const double>>;

/// Legacy-VTK unstructured grid, ASCII, with cell and point scalars.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& cell_data,
               const std::vector<NamedField>& point_data, const std::string& title = "eigentop");
void write_vtk_file(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedField>& cell_data,
                    const std::vector<NamedField>& point_data);

/// One polygon per triangle; nonzero cells red.
std::string svg_indicator(const Mesh& mesh, std::span<const double> indicator);
/// One polygon per triangle on a sequential colormap.
std::string svg_scalar(const Mesh& mesh, std::span<const double> field);

std::string history_csv_header();
std::string history_csv(const std::vector<levelset::HistoryRow>& rows);
std::vector<levelset::HistoryRow> parse_history_csv(std::string_view text);

struct RunOutcome
{
  ExitCode code = ExitCode::Success;
  std::string message;
};

/// Runs the optimizer and writes config-echo.txt, mesh.txt, history.csv,
/// phi.txt, snapshots, final.vtk, final.svg, quantity.svg and summary.txt
/// into config.output_dir. Failures are reported through the exit code.
RunOutcome run(const RunConfig& config, std::ostream* progress = nullptr);

/// A run directory read back from disk.
struct LoadedRun
{
  RunConfig config;
  Mesh mesh;
  std::vector<double> phi; ///< final level set per vertex
  std::vector<levelset::HistoryRow> history;
  std::map<std::string, std::string> summary;
};

LoadedRun load_run(const std::filesystem::path& dir);

/// {rho = c} of a loaded run.
fem::ElementField final_indicator(const LoadedRun& r);

struct VerifyReport
{
  bool volume_ok = false;
  double max_abs_G = 0.0;
  bool lambda_ok = false;
  double lambda1_recomputed = 0.0;
  double lambda1_recorded = 0.0;
  criteria::CriterionReport criterion;
  std::string text;
  bool ok() const { return volume_ok && lambda_ok; }
};

/// Recomputes the final spectrum and the optimality check from the stored
/// state, and re-checks the volume invariant over the history.
VerifyReport verify(const std::filesystem::path& dir);

struct SweepRow
{
  std::string label;
  double eta = 0.0;
  double lambda1 = 0.0;
  double symdiff_previous = 0.0;
  double symdiff_dirichlet = 0.0;
};

/// Mixed-BC runs for each eta plus a pure-Dirichlet reference, each in its own
/// subdirectory of config.output_dir, and sweep.csv comparing the shapes.
RunOutcome sweep(const RunConfig& config, const std::vector<double>& etas, std::vector<SweepRow>* rows = nullptr,
                 std::ostream* progress = nullptr);

std::string sweep_label(double eta);

} // namespace eigentop::cli
