// relaymec: solve, sweep, and certify entry points over the core library.
// Exit codes: 0 success, 2 infeasible instance, 1 any error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relaymec/baseline.hpp"
#include "relaymec/config.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/model.hpp"
#include "relaymec/montecarlo.hpp"
#include "relaymec/oracle.hpp"
#include "relaymec/recovery.hpp"
#include "relaymec/report_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> tolerance;
  std::optional<long> max_iter;
  std::optional<long> trials;
  std::optional<int> grid;
  bool equal = false;
  bool trace = false;
};

void apply_overrides(relaymec::CliConfig& cfg, const CommonFlags& flags) {
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.sweep.seed = *flags.seed;
  }
  if (flags.tolerance) {
    cfg.solver.tolerance = *flags.tolerance;
    cfg.sweep.solver.tolerance = *flags.tolerance;
  }
  if (flags.max_iter) {
    cfg.solver.max_iterations = *flags.max_iter;
    cfg.sweep.solver.max_iterations = *flags.max_iter;
  }
  if (flags.trace) {
    cfg.solver.keep_trace = true;
    cfg.sweep.solver.keep_trace = true;
  }
  if (flags.threads) cfg.sweep.threads = *flags.threads;
  if (flags.trials) cfg.sweep.trials = *flags.trials;
}

// stdout unless --out names a file
int write_output(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    return kExitOk;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot write '" << out_path << "'\n";
    return kExitError;
  }
  file << payload;
  return file ? kExitOk : kExitError;
}

int cmd_solve(const CommonFlags& flags) {
  relaymec::CliConfig cfg = relaymec::load_config(flags.config_path);
  apply_overrides(cfg, flags);
  const relaymec::Instance in = cfg.make_instance();

  relaymec::SolveReport report;
  int exit_code = kExitOk;
  try {
    report = flags.equal ? relaymec::solve_equal_allocation(in, cfg.solver)
                         : relaymec::solve_instance(in, cfg.solver);
  } catch (const relaymec::InfeasibleInstance& inf) {
    report.method = flags.equal ? "equal" : "optimal";
    report.feasibility = relaymec::Feasibility::infeasible;
    report.tau_r_lb = inf.tau_r_lb;
    report.direct_rate = inf.direct_rate;
    exit_code = kExitInfeasible;
  }
  const int write_code = write_output(flags.out_path,
                                      relaymec::report_to_json(report));
  return write_code == kExitOk ? exit_code : write_code;
}

int cmd_sweep(const CommonFlags& flags) {
  relaymec::CliConfig cfg = relaymec::load_config(flags.config_path);
  apply_overrides(cfg, flags);
  const relaymec::SweepReport report = relaymec::run_sweep(cfg.sweep);
  std::ostringstream os;
  relaymec::write_csv(os, report);
  return write_output(flags.out_path, os.str());
}

int cmd_certify(const CommonFlags& flags, int nodes) {
  if (nodes < 1 || nodes > 2) {
    std::cerr << "error: oracle limited to M <= 2\n";
    return kExitError;
  }
  relaymec::CliConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = relaymec::load_config(flags.config_path);
  }
  apply_overrides(cfg, flags);

  relaymec::InstanceTemplate tpl = cfg.base;
  tpl.M = static_cast<std::size_t>(nodes);
  const long want = flags.trials ? *flags.trials : (nodes == 1 ? 20 : 10);
  const double declared = nodes == 1 ? 1e-2 : 2e-2;

  std::printf("%-6s %-18s %-18s %-12s\n", "trial", "solver", "oracle",
              "deviation");
  double worst = 0.0;
  long done = 0;
  std::uint64_t trial = 0;
  while (done < want) {
    const auto gains = relaymec::sample_channels({cfg.seed, trial++},
                                                 tpl.means, tpl.M);
    const relaymec::Instance in = tpl.make(gains);
    relaymec::SolveReport rep;
    try {
      rep = relaymec::solve_instance(in, cfg.solver);
    } catch (const relaymec::InfeasibleInstance&) {
      continue;  // certification compares objectives on feasible draws
    }
    relaymec::PrimalSolution ref;
    if (nodes == 1) {
      ref = relaymec::oracle::grid_solve(in, flags.grid ? *flags.grid : 0);
    } else {
      ref = relaymec::oracle::multistart_solve(in, 24, 60,
                                               cfg.seed + 1000 + trial);
    }
    const double dev = std::abs(rep.primal_value - ref.objective) /
                       std::max(1.0, std::abs(ref.objective));
    worst = std::max(worst, dev);
    std::printf("%-6ld %-18.10e %-18.10e %-12.3e\n", done, rep.primal_value,
                ref.objective, dev);
    ++done;
  }
  std::printf("worst relative deviation: %.3e (declared bound %.0e)\n", worst,
              declared);
  return worst <= declared ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative-relay MEC spectrum-sharing solver"};
  app.require_subcommand(1);

  CommonFlags flags;
  int nodes = 1;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config_path,
                                "scenario config file");
    if (needs_config) opt->required();
    cmd->add_option("--out", flags.out_path, "write output here (default stdout)");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--tolerance", flags.tolerance,
                    "target relative duality gap");
    cmd->add_option("--max-iter", flags.max_iter, "dual iteration budget");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve one instance, emit JSON");
  add_common(solve, true);
  solve->add_flag("--equal", flags.equal, "equal processor allocation baseline");
  solve->add_flag("--trace", flags.trace, "keep the dual iteration trace");

  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep, emit CSV");
  add_common(sweep, true);
  sweep->add_option("--trials", flags.trials, "trials per cell");
  sweep->add_option("--threads", flags.threads, "worker threads (0 = auto)");

  CLI::App* certify =
      app.add_subcommand("certify", "compare the solver against the oracle");
  add_common(certify, false);
  certify->add_option("--nodes", nodes, "IoT node count for the oracle (1 or 2)");
  certify->add_option("--trials", flags.trials, "feasible instances to check");
  certify->add_option("--grid", flags.grid, "grid points per axis (M = 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    return cmd_certify(flags, nodes);
  } catch (const relaymec::ConfigError& e) {
    std::cerr << "error: " << e.what();
    if (e.line > 0) std::cerr << " (line " << e.line << ")";
    std::cerr << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
