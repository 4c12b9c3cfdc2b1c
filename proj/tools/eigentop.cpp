#include "eigentop/cli.hpp"
#include "eigentop/error.hpp"
#include "eigentop/oned.hpp"
#include "eigentop/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace eigentop;

namespace {

int code(cli::ExitCode c) { return static_cast<int>(c); }

int report(const cli::RunOutcome& out)
{
  (out.code == cli::ExitCode::Success ? std::cout : std::cerr) << out.message << '\n';
  return code(out.code);
}

std::vector<double> parse_eta_list(const std::string& text)
{
  std::vector<double> etas;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw ConfigError("eta: cannot parse '" + item + "'");
    etas.push_back(v);
  }
  return etas;
}

} // namespace

int main(int argc, char** argv)
{
  parallel::configure_from_environment();

  CLI::App app{"Two-phase eigenvalue optimization by the level-set method"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "run one optimization from a config file");
  run_cmd->add_option("config", config_path, "key = value configuration")->required();
  run_cmd->add_option("-o,--output", output_override, "override output_dir");
  run_cmd->add_flag("-q,--quiet", quiet, "no progress lines");

  std::string run_dir;
  auto* verify_cmd = app.add_subcommand("verify", "recheck a finished run directory");
  verify_cmd->add_option("run-dir", run_dir)->required();

  std::string eta_text = "0,0.2,0.5,1,5";
  auto* sweep_cmd = app.add_subcommand("sweep", "Robin coefficient sweep on a mixed boundary");
  sweep_cmd->add_option("config", config_path)->required();
  sweep_cmd->add_option("--eta", eta_text, "comma-separated eta values")->capture_default_str();
  sweep_cmd->add_option("-o,--output", output_override, "override output_dir");
  sweep_cmd->add_flag("-q,--quiet", quiet);

  double c = 5.0, m0 = 0.5;
  std::string bc = "dirichlet", objective = "min";
  int interfaces = 4, grid = 100;
  auto* oned_cmd = app.add_subcommand("oned", "exhaustive 1-D two-phase optimum");
  oned_cmd->add_option("--c", c)->capture_default_str();
  oned_cmd->add_option("--m0", m0)->capture_default_str();
  oned_cmd->add_option("--bc", bc)->check(CLI::IsMember({"dirichlet", "neumann"}))->capture_default_str();
  oned_cmd->add_option("--objective", objective)->check(CLI::IsMember({"min", "max"}))->capture_default_str();
  oned_cmd->add_option("--interfaces", interfaces, "largest number of interfaces")->capture_default_str();
  oned_cmd->add_option("--grid", grid, "interface grid resolution")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(cli::ExitCode::ConfigFailure);
  }

  try {
    if (*run_cmd || *sweep_cmd) {
      cli::RunConfig cfg = cli::load_config(config_path);
      if (!output_override.empty())
        cfg.output_dir = output_override;
      std::ostream* progress = quiet ? nullptr : &std::cerr;
      if (*run_cmd)
        return report(cli::run(cfg, progress));
      std::vector<cli::SweepRow> rows;
      const int rc = report(cli::sweep(cfg, parse_eta_list(eta_text), &rows, progress));
      for (const auto& r : rows)
        std::printf("%-10s lambda1 %.8f  symdiff(prev) %.4f  symdiff(dirichlet) %.4f\n", r.label.c_str(), r.lambda1,
                    r.symdiff_previous, r.symdiff_dirichlet);
      return rc;
    }
    if (*verify_cmd) {
      const auto rep = cli::verify(run_dir);
      std::cout << rep.text;
      return rep.ok() ? 0 : code(cli::ExitCode::NumericalFailure);
    }
    if (*oned_cmd) {
      if (!(c > 0) || c == 1.0)
        throw ConfigError("c: must be positive and differ from 1");
      if (!(m0 > 0 && m0 < 1))
        throw ConfigError("m0: must lie in (0,1)");
      if (interfaces < 1 || grid < 2)
        throw ConfigError("interfaces/grid: need at least one interface and two grid cells");
      const auto bc1 = bc == "dirichlet" ? oned::Bc1d::Dirichlet : oned::Bc1d::Neumann;
      const auto obj = objective == "min" ? Objective::Minimize : Objective::Maximize;
      const auto best = oned::brute_force_optimum(c, m0, bc1, obj, interfaces, grid);
      const auto crit = oned::criterion_check_1d(best.profile, bc1);
      std::printf("lambda1 %.9f\nprofile %s\ncandidates %ld\n", best.lambda, best.profile.describe().c_str(),
                  best.candidates);
      std::printf("criterion sub-level violation %.5f (%s), super-level violation %.5f (%s)\n", crit.sub_violation,
                  crit.sub_holds ? "holds" : "fails", crit.super_violation, crit.super_holds ? "holds" : "fails");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return code(cli::ExitCode::ConfigFailure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(cli::ExitCode::NumericalFailure);
  }
  return 0;
}
