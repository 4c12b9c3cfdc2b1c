#include "eigentop/cli.hpp"
#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

namespace eigentop::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush())
    throw Error("cannot write '" + path.string() + "'");
}

std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string phi_text(std::span<const double> phi)
{
  std::string out;
  for (double v : phi)
    out += num(v) + '\n';
  return out;
}

const char* coeff_name(Problem p) { return p == Problem::Conductivity ? "rho" : "sigma"; }

struct FinalChecks
{
  criteria::CriterionReport criterion;
  std::vector<criteria::SymmetryReport> symmetry;
  std::optional<criteria::SymmetryReport> radial;
};

FinalChecks final_checks(const RunConfig& config, const Mesh& mesh, const levelset::OptState& st)
{
  const auto& ph = config.phase;
  FinalChecks out;
  out.criterion =
      criteria::check_optimality(ph.problem, ph.objective, st.eigs, st.coeff, ph.c, mesh, ph.multiplicity_threshold);
  if (!config.mesh_file.empty())
    return out;
  const auto spec = geometry::DomainSpec::from_name(config.domain);
  const auto S = criteria::indicator(st.coeff, ph.c);
  const auto center = spec.symmetry_center();
  // Reflections x -> -x and y -> -y about the symmetry center, when the domain has them.
  for (const auto& t : {geometry::Transform::reflection(center, std::numbers::pi / 2),
                        geometry::Transform::reflection(center, 0.0)}) {
    if (spec.is_symmetry(t))
      out.symmetry.push_back(criteria::symmetry_check(mesh, spec, S, t));
  }
  if (spec.kind == geometry::DomainKind::Disk)
    out.radial = criteria::radial_symmetry_deviation(mesh, spec, S);
  return out;
}

std::string summary_text(const RunConfig& config, const levelset::OptState& st, const FinalChecks& fc)
{
  std::ostringstream os;
  const auto& last = st.history.back();
  double max_g = 0.0;
  for (std::size_t i = 1; i < st.history.size(); ++i)
    max_g = std::max(max_g, std::abs(st.history[i].G));
  os << "problem: " << to_string(config.phase.problem) << '\n'
     << "objective: " << to_string(config.phase.objective) << '\n'
     << "domain: " << (config.mesh_file.empty() ? config.domain : config.mesh_file) << '\n'
     << "bc: " << to_string(config.bc) << '\n'
     << "eta: " << num(config.eta) << '\n'
     << "stop_reason: " << st.stop_reason << '\n'
     << "steps: " << last.step << '\n'
     << "lambda1: " << num(last.lambda1) << '\n'
     << "lambda2: " << num(last.lambda2) << '\n'
     << "lambda3: " << num(last.lambda3) << '\n'
     << "ratio12: " << num(last.ratio12()) << '\n'
     << "ratio23: " << num(last.ratio23()) << '\n'
     << "G_final: " << num(last.G) << '\n'
     << "max_abs_G_accepted: " << num(max_g) << '\n'
     << "criterion_quantity: " << fc.criterion.quantity << '\n'
     << "criterion_side: " << criteria::to_string(fc.criterion.side) << '\n'
     << "criterion_violation: " << num(fc.criterion.violation_fraction) << '\n'
     << "criterion_indeterminate: " << (fc.criterion.indeterminate ? "true" : "false") << '\n'
     << "criterion_pass: " << (fc.criterion.pass ? "true" : "false") << '\n'
     << "criterion_report: " << criteria::to_text(fc.criterion) << '\n';
  for (const auto& s : fc.symmetry)
    os << "symmetry " << s.transform << ": " << num(s.fraction) << '\n';
  if (fc.radial)
    os << "radial_deviation: " << num(fc.radial->fraction) << " (" << fc.radial->transform << ")\n";
  return os.str();
}

void write_state_files(const fs::path& dir, const RunConfig& config, const Mesh& mesh, const levelset::OptState& st,
                       const std::string& stem)
{
  const auto flux = fem::flux_magnitude_sq(mesh, st.coeff, st.eigs.vectors[0]);
  write_vtk_file(dir / (stem + ".vtk"), mesh, {{coeff_name(config.phase.problem), st.coeff.values}, {"flux_sq", flux.values}},
                 {{"u", st.eigs.vectors[0]}, {"phi", st.phi.values}});
}

} // namespace

RunOutcome run(const RunConfig& config, std::ostream* progress)
{
  RunOutcome outcome;
  const fs::path dir = config.output_dir;
  std::vector<levelset::HistoryRow> rows;
  try {
    config.validate();
    fs::create_directories(dir);
    fs::remove(dir / "summary.txt");
    write_text(dir / "config-echo.txt", config_echo(config));
    const Setup setup = build_setup(config);
    const Mesh& mesh = setup.mesh;
    write_text(dir / "mesh.txt", geometry::write_mesh(mesh));
    levelset::PhaseConfig ph = config.phase;
    ph.bc = setup.bc;

    const auto on_step = [&](const levelset::OptState& st) {
      rows.push_back(st.history.back());
      if (ph.snapshot_every > 0 && st.step % ph.snapshot_every == 0) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "snapshot_%05d", st.step);
        write_state_files(dir, config, mesh, st, stem);
      }
      if (progress && st.step % 25 == 0)
        *progress << "step " << st.step << "  lambda1 " << num(st.history.back().lambda1) << "  G "
                  << num(st.history.back().G) << std::endl;
    };
    levelset::OptState st;
    try {
      st = levelset::optimize(ph, mesh, on_step);
    } catch (...) {
      write_text(dir / "history.csv", history_csv(rows));
      throw;
    }
    write_text(dir / "history.csv", history_csv(st.history));
    write_text(dir / "phi.txt", phi_text(st.phi.values));
    write_state_files(dir, config, mesh, st, "final");
    const auto checks = final_checks(config, mesh, st);
    write_text(dir / "final.svg", svg_indicator(mesh, criteria::indicator(st.coeff, ph.c).values));
    const auto q = checks.criterion.multiplicity
                       ? criteria::two_mode_quantity(ph.problem, st.eigs, st.coeff, mesh, ph.multiplicity_threshold)
                       : criteria::single_mode_quantity(ph.problem, st.eigs, st.coeff, mesh);
    write_text(dir / "quantity.svg", svg_scalar(mesh, q.values));
    write_text(dir / "summary.txt", summary_text(config, st, checks));
    outcome.message = "finished (" + st.stop_reason + ") after " + std::to_string(st.step) +
                      " steps, lambda1 = " + num(st.history.back().lambda1);
  } catch (const ConfigError& e) {
    outcome = {ExitCode::ConfigFailure, std::string("config error: ") + e.what()};
  } catch (const GeometryError& e) {
    outcome = {ExitCode::ConfigFailure, std::string("geometry error: ") + e.what()};
  } catch (const std::exception& e) {
    outcome = {ExitCode::NumericalFailure, std::string("numerical failure: ") + e.what()};
  }
  if (outcome.code != ExitCode::Success && fs::is_directory(dir)) {
    try {
      write_text(dir / "summary.txt", "status: failed\nmessage: " + outcome.message + '\n');
    } catch (const std::exception&) {
    }
  }
  return outcome;
}

LoadedRun load_run(const fs::path& dir)
{
  LoadedRun r;
  r.config = parse_config(read_text(dir / "config-echo.txt"));
  r.mesh = geometry::read_mesh(read_text(dir / "mesh.txt"));
  r.history = parse_history_csv(read_text(dir / "history.csv"));
  std::istringstream phi(read_text(dir / "phi.txt"));
  for (std::string line; std::getline(phi, line);)
    if (!line.empty())
      r.phi.push_back(std::strtod(line.c_str(), nullptr));
  if (r.phi.size() != r.mesh.num_vertices())
    throw Error("phi.txt: expected " + std::to_string(r.mesh.num_vertices()) + " values, found " +
                std::to_string(r.phi.size()));
  std::istringstream summary(read_text(dir / "summary.txt"));
  for (std::string line; std::getline(summary, line);) {
    const auto colon = line.find(": ");
    if (colon != std::string::npos)
      r.summary[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return r;
}

fem::ElementField final_indicator(const LoadedRun& r)
{
  const auto phi = fem::NodalField::from(r.mesh, r.phi);
  return criteria::indicator(levelset::phase_from_phi(r.mesh, phi, r.config.phase.c), r.config.phase.c);
}

VerifyReport verify(const fs::path& dir)
{
  const LoadedRun r = load_run(dir);
  const auto& ph = r.config.phase;
  VerifyReport rep;
  if (r.history.empty())
    throw Error("history.csv has no rows");
  // Row 0 is the initial level set, not a state accepted by the volume step.
  for (std::size_t i = 1; i < r.history.size(); ++i)
    rep.max_abs_G = std::max(rep.max_abs_G, std::abs(r.history[i].G));
  rep.volume_ok = rep.max_abs_G <= ph.volume_tol;

  fem::BoundaryCondition bc = build_setup(r.config).bc;
  const auto phi = fem::NodalField::from(r.mesh, r.phi);
  const auto coeff = levelset::phase_from_phi(r.mesh, phi, ph.c);
  levelset::ModeSolver solver(r.mesh, ph.problem, bc, ph.seed);
  const auto eigs = solver.solve(coeff, 3);
  rep.lambda1_recomputed = eigs.values[0];
  rep.lambda1_recorded = r.history.back().lambda1;
  rep.lambda_ok = std::abs(rep.lambda1_recomputed - rep.lambda1_recorded) <= 1e-6 * std::abs(rep.lambda1_recorded);
  rep.criterion = criteria::check_optimality(ph.problem, ph.objective, eigs, coeff, ph.c, r.mesh, ph.multiplicity_threshold);

  std::ostringstream os;
  os << "volume invariant: max |G| over " << r.history.size() - 1 << " accepted steps = " << num(rep.max_abs_G)
     << (rep.volume_ok ? " (ok)" : " (VIOLATED)") << '\n'
     << "lambda1 recomputed " << num(rep.lambda1_recomputed) << " vs recorded " << num(rep.lambda1_recorded)
     << (rep.lambda_ok ? " (ok)" : " (MISMATCH)") << '\n'
     << criteria::to_text(rep.criterion) << '\n';
  rep.text = os.str();
  return rep;
}

std::string sweep_label(double eta)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "eta_%g", eta);
  return buf;
}

RunOutcome sweep(const RunConfig& config, const std::vector<double>& etas, std::vector<SweepRow>* rows_out,
                 std::ostream* progress)
{
  if (etas.empty())
    return {ExitCode::ConfigFailure, "config error: eta: the sweep needs at least one value"};
  for (double e : etas)
    if (!(e >= 0) || !std::isfinite(e))
      return {ExitCode::ConfigFailure, "config error: eta: values must be finite and nonnegative"};

  const fs::path base = config.output_dir;
  std::vector<std::pair<std::string, RunConfig>> runs;
  RunConfig ref = config;
  ref.bc = BcMode::Dirichlet;
  ref.eta = 0.0;
  ref.output_dir = base / "dirichlet";
  runs.emplace_back("dirichlet", ref);
  for (double e : etas) {
    RunConfig c = config;
    c.bc = BcMode::Mixed;
    c.eta = e;
    c.output_dir = base / sweep_label(e);
    runs.emplace_back(sweep_label(e), c);
  }
  // Independent runs, each confined to its own directory.
  for (const auto& [label, c] : runs) {
    if (progress)
      *progress << "== " << label << std::endl;
    const auto out = run(c, progress);
    if (out.code != ExitCode::Success)
      return {out.code, label + ": " + out.message};
  }

  try {
    const LoadedRun dirichlet = load_run(base / "dirichlet");
    const auto s_ref = final_indicator(dirichlet);
    std::vector<SweepRow> rows;
    std::optional<fem::ElementField> previous;
    for (std::size_t i = 0; i < etas.size(); ++i) {
      const LoadedRun r = load_run(base / sweep_label(etas[i]));
      if (r.mesh.num_triangles() != dirichlet.mesh.num_triangles())
        throw Error("sweep runs do not share a triangulation");
      const auto S = final_indicator(r);
      SweepRow row;
      row.label = sweep_label(etas[i]);
      row.eta = etas[i];
      row.lambda1 = r.history.back().lambda1;
      row.symdiff_dirichlet = criteria::symmetric_difference(dirichlet.mesh, S, s_ref);
      row.symdiff_previous = previous ? criteria::symmetric_difference(dirichlet.mesh, S, *previous) : 0.0;
      previous = S;
      rows.push_back(row);
    }
    std::string csv = "eta,lambda1,symdiff_previous,symdiff_dirichlet\n";
    for (const auto& row : rows)
      csv += num(row.eta) + ',' + num(row.lambda1) + ',' + num(row.symdiff_previous) + ',' +
             num(row.symdiff_dirichlet) + '\n';
    write_text(base / "sweep.csv", csv);
    if (rows_out)
      *rows_out = std::move(rows);
  } catch (const std::exception& e) {
    return {ExitCode::NumericalFailure, std::string("sweep comparison failed: ") + e.what()};
  }
  return {ExitCode::Success, "sweep finished over " + std::to_string(etas.size()) + " eta values"};
}

} // namespace eigentop::cli
