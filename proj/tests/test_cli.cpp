#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "relaymec/config.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/model.hpp"
#include "relaymec/recovery.hpp"
#include "relaymec/report_io.hpp"

using namespace relaymec;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------ subprocess

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

std::string cli_path() {
  const char* env = std::getenv("RELAYMEC_CLI");
  REQUIRE_MESSAGE(env != nullptr, "RELAYMEC_CLI must point at the binary");
  return env;
}

RunResult run_cli(const std::string& args) {
  const std::string cmd = "'" + cli_path() + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  std::array<char, 4096> buf;
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    res.output.append(buf.data(), n);
  }
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

// ---------------------------------------------------------- temp configs

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("relaymec_cli_test_" + std::to_string(getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream f(p);
    f << text;
    return p.string();
  }
};

// two-node scenario with pinned gains so CLI runs need no channel draw;
// the gains keep the relay leg comfortably above the direct link
std::string pinned_config(const std::string& extra_channels = "",
                          const std::string& extra_sections = "") {
  return "[system]\n"
         "frame_s = 0.1\n"
         "bandwidth_hz = 1.4e6\n"
         "noise_dbm = -132.24\n"
         "p_pt_dbm = 43\n"
         "p_ap_dbm = 30\n"
         "f_mec_max_hz = 1e12\n"
         "alpha = 0.4\n"
         "eta1 = 4\n"
         "eta2 = 4\n"
         "eta3 = 4\n"
         "eta4 = 2\n"
         "[geometry]\n"
         "d_pt_pr_m = 100\n"
         "d_pt_ap_m = 60\n"
         "d_iot_m = 10\n"
         "[nodes]\n"
         "count = 2\n"
         "cycles_per_bit = 1e4\n"
         "cpu_hz = 1e10\n"
         "chip_coeff = 1e-28\n"
         "battery_j = 1\n"
         "[channels]\n"
         "g_ap_pr = 2.0\n"
         "g_pt_pr = 1e-5\n"
         "g_pt_ap = 2.0\n"
         "g_iot = 5.0, 4.0\n" +
         extra_channels + extra_sections;
}

Instance pinned_instance(double alpha = 0.4) {
  std::istringstream is(pinned_config());
  CliConfig cfg = parse_config(is, "inline");
  cfg.base.system.alpha = alpha;
  return cfg.make_instance();
}

}  // namespace

// ================================================================ parsing

TEST_CASE("config parsing") {
  SUBCASE("full file maps onto the template") {
    std::istringstream is(pinned_config());
    const CliConfig cfg = parse_config(is, "inline");
    CHECK(cfg.base.system.T == 0.1);
    CHECK(cfg.base.system.B_w == 1.4e6);
    CHECK(cfg.base.system.sigma2 ==
          doctest::Approx(dbm_to_watt(-132.24)).epsilon(1e-15));
    CHECK(cfg.base.system.P_PT == doctest::Approx(19.952623149688797).epsilon(1e-12));
    CHECK(cfg.base.system.P_AP == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cfg.base.M == 2);
    CHECK(cfg.base.d_pt_ap == 60.0);
    CHECK(cfg.base.d_ap_pr == -1.0);  // derived later, stays unset here
    REQUIRE(cfg.pinned_gains.has_value());
    CHECK(cfg.pinned_gains->g_pt_pr == 1e-5);
    CHECK(cfg.pinned_gains->g_iot == std::vector<double>{5.0, 4.0});
    const Instance in = cfg.make_instance();
    CHECK(in.geometry.d_ap_pr == 40.0);
    CHECK(in.channels.g_pt_ap == 2.0);
  }

  SUBCASE("watt keys bypass the dbm conversion") {
    std::istringstream is(
        "[system]\n"
        "p_pt_watt = 2.5\n"
        "noise_watt = 1e-16\n");
    const CliConfig cfg = parse_config(is, "inline");
    CHECK(cfg.base.system.P_PT == 2.5);
    CHECK(cfg.base.system.sigma2 == 1e-16);
  }

  SUBCASE("comments and blank lines are ignored") {
    std::istringstream is(
        "# leading comment\n"
        "\n"
        "[nodes]  ; trailing comment\n"
        "count = 7  # seven nodes\n");
    CHECK(parse_config(is, "inline").base.M == 7);
  }

  SUBCASE("scalar g_iot broadcasts over the node count") {
    std::istringstream is(
        "[nodes]\n"
        "count = 4\n"
        "[channels]\n"
        "g_ap_pr = 1\n"
        "g_pt_pr = 1e-4\n"
        "g_pt_ap = 1\n"
        "g_iot = 3.5\n");
    const CliConfig cfg = parse_config(is, "inline");
    REQUIRE(cfg.pinned_gains.has_value());
    CHECK(cfg.pinned_gains->g_iot == std::vector<double>(4, 3.5));
  }

  SUBCASE("sweep keys land in the sweep config") {
    std::istringstream is(
        "[sweep]\n"
        "alpha_grid = 0.2, 0.4\n"
        "placements_m = 30, 60\n"
        "energy_levels_j = 1\n"
        "trials = 17\n"
        "seed = 99\n"
        "threads = 2\n");
    const CliConfig cfg = parse_config(is, "inline");
    CHECK(cfg.sweep.alpha_grid == std::vector<double>{0.2, 0.4});
    CHECK(cfg.sweep.placements == std::vector<double>{30.0, 60.0});
    CHECK(cfg.sweep.trials == 17);
    CHECK(cfg.sweep.seed == 99);
    CHECK(cfg.sweep.threads == 2);
    CHECK(cfg.seed == 99);
  }

  SUBCASE("diagnostics carry line and field") {
    const auto expect_error = [](const std::string& text,
                                 const std::string& needle, int line) {
      std::istringstream is(text);
      try {
        parse_config(is, "inline");
        FAIL("expected ConfigError");
      } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
        if (line > 0) CHECK(e.line == line);
      }
    };
    expect_error("[nodes]\nbattery_j = abc\n", "nodes.battery_j", 2);
    expect_error("[nodes]\nvoltage = 3\n", "nodes.voltage", 2);
    expect_error("[made_up]\nx = 1\n", "made_up", 1);
    expect_error("count = 2\n", "before any section", 1);
    expect_error("[nodes\ncount = 2\n", "unterminated", 1);
    expect_error("[nodes]\ncount = 2\ncount = 3\n", "duplicate", 3);
    expect_error("[system]\np_pt_dbm = 43\np_pt_watt = 20\n",
                 "both dbm and watt", 3);
    expect_error("[system]\nalpha\n", "key = value", 2);
    expect_error("[channels]\ng_pt_ap = 1\n", "together", 0);
    expect_error(
        "[nodes]\ncount = 3\n[channels]\ng_ap_pr = 1\ng_pt_pr = 1\n"
        "g_pt_ap = 1\ng_iot = 1, 2\n",
        "g_iot", 0);
  }
}

// ========================================================== serialization

TEST_CASE("report json round-trips exactly") {
  const Instance in = pinned_instance();
  SolveSettings settings;
  settings.keep_trace = true;
  const SolveReport rep = solve_instance(in, settings);
  REQUIRE(!rep.trace.empty());

  const std::string text = report_to_json(rep);
  const SolveReport back = report_from_json(text);

  CHECK(back.method == rep.method);
  CHECK(back.feasibility == rep.feasibility);
  CHECK(back.tau_r_lb == rep.tau_r_lb);
  CHECK(back.direct_rate == rep.direct_rate);
  CHECK(back.solution.tau_r == rep.solution.tau_r);
  CHECK(back.solution.t_loc == rep.solution.t_loc);
  CHECK(back.solution.t_off == rep.solution.t_off);
  CHECK(back.solution.e_off == rep.solution.e_off);
  CHECK(back.solution.r_mec == rep.solution.r_mec);
  CHECK(back.solution.f_mec == rep.solution.f_mec);
  CHECK(back.solution.r_local == rep.solution.r_local);
  CHECK(back.solution.r_relay == rep.solution.r_relay);
  CHECK(back.solution.objective == rep.solution.objective);
  CHECK(back.dual.zeta == rep.dual.zeta);
  CHECK(back.dual.mu == rep.dual.mu);
  CHECK(back.dual.lambda == rep.dual.lambda);
  CHECK(back.dual.eta == rep.dual.eta);
  CHECK(back.dual_value == rep.dual_value);
  CHECK(back.primal_value == rep.primal_value);
  CHECK(back.gap == rep.gap);
  CHECK(back.iterations == rep.iterations);
  REQUIRE(back.trace.size() == rep.trace.size());
  CHECK(back.trace.front().iteration == rep.trace.front().iteration);
  CHECK(back.trace.back().best_value == rep.trace.back().best_value);

  // serializing the parsed report reproduces the text byte for byte
  CHECK(report_to_json(back) == text);

  SUBCASE("infinite relay floor maps through null") {
    SolveReport inf_rep;
    inf_rep.feasibility = Feasibility::infeasible;
    inf_rep.tau_r_lb = std::numeric_limits<double>::infinity();
    const std::string t = report_to_json(inf_rep);
    CHECK(t.find("\"tau_r_lb\": null") != std::string::npos);
    CHECK(std::isinf(report_from_json(t).tau_r_lb));
  }

  SUBCASE("malformed or incomplete json is rejected") {
    CHECK_THROWS_AS(report_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(report_from_json("{\"method\": \"optimal\"}"), ConfigError);
  }
}

// ==================================================================== cli

TEST_CASE("cli solve") {
  TempDir tmp;
  const std::string config = tmp.write("solve.ini", pinned_config());

  SUBCASE("feasible instance: exit 0 and a valid report") {
    const RunResult res = run_cli("solve --config '" + config + "'");
    CHECK(res.exit_code == 0);
    const SolveReport rep = report_from_json(res.output);
    CHECK(rep.method == "optimal");
    CHECK(rep.feasibility == Feasibility::feasible);
    CHECK(rep.gap <= 1e-3);
    CHECK(rep.gap >= -1e-9);
    // the printed solution satisfies the model constraints
    const Instance in = pinned_instance();
    for (const auto& row : check_constraints(in, rep.solution, 1e-6)) {
      CHECK(!row.violated);
    }
  }

  SUBCASE("--equal switches to the baseline") {
    const RunResult res =
        run_cli("solve --config '" + config + "' --equal");
    CHECK(res.exit_code == 0);
    const SolveReport rep = report_from_json(res.output);
    CHECK(rep.method == "equal");
    CHECK(rep.solution.f_mec == std::vector<double>(2, 5e11));
  }

  SUBCASE("--trace emits the dual iteration log") {
    const RunResult res =
        run_cli("solve --config '" + config + "' --trace");
    CHECK(res.exit_code == 0);
    CHECK(!report_from_json(res.output).trace.empty());
  }

  SUBCASE("dead relay leg: exit 2 with the relay floor in the report") {
    std::string text = pinned_config();
    const auto pos = text.find("g_pt_ap = 2.0");
    text.replace(pos, 13, "g_pt_ap = 0.0");
    const std::string dead = tmp.write("dead.ini", text);
    const RunResult res = run_cli("solve --config '" + dead + "'");
    CHECK(res.exit_code == 2);
    const SolveReport rep = report_from_json(res.output);
    CHECK(rep.feasibility == Feasibility::infeasible);
    CHECK(std::isinf(rep.tau_r_lb));
    CHECK(rep.direct_rate > 0.0);
  }

  SUBCASE("malformed numeric field names the key, exit 1") {
    const std::string bad = tmp.write(
        "bad.ini", "[nodes]\nbattery_j = one_joule\n");
    const RunResult res = run_cli("solve --config '" + bad + "'");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("nodes.battery_j") != std::string::npos);
  }

  SUBCASE("missing config file: exit 1") {
    const RunResult res = run_cli("solve --config /nonexistent.ini");
    CHECK(res.exit_code == 1);
  }

  SUBCASE("--out writes the same report to a file") {
    const std::string out = (tmp.path / "rep.json").string();
    const RunResult direct = run_cli("solve --config '" + config + "'");
    const RunResult filed =
        run_cli("solve --config '" + config + "' --out '" + out + "'");
    CHECK(filed.exit_code == 0);
    CHECK(filed.output.empty());
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == direct.output);
  }
}

TEST_CASE("cli sweep") {
  TempDir tmp;
  // single-node scenario with a weak direct link so several trials are
  // feasible at small trial counts
  const std::string config = tmp.write(
      "sweep.ini",
      "[nodes]\n"
      "count = 1\n"
      "[channels]\n"
      "mean_pt_pr = 1e-4\n"
      "[sweep]\n"
      "alpha_grid = 0.2, 0.8\n"
      "placements_m = 60\n"
      "energy_levels_j = 1\n"
      "trials = 8\n"
      "seed = 11\n");

  SUBCASE("exit 0 with the fixed csv header") {
    const RunResult res = run_cli("sweep --config '" + config + "'");
    CHECK(res.exit_code == 0);
    CHECK(res.output.rfind(
              "alpha,d_pt_ap,energy,metric,mean,std,n_feasible,n_total\n",
              0) == 0);
    // header + 2 cells x 6 metrics
    CHECK(std::count(res.output.begin(), res.output.end(), '\n') == 13);
  }

  SUBCASE("same seed: byte-identical; new seed: different draws") {
    const RunResult a = run_cli("sweep --config '" + config + "'");
    const RunResult b = run_cli("sweep --config '" + config + "'");
    CHECK(a.output == b.output);
    const RunResult c =
        run_cli("sweep --config '" + config + "' --seed 12");
    CHECK(a.output != c.output);
  }

  SUBCASE("trial count from the command line") {
    const RunResult res =
        run_cli("sweep --config '" + config + "' --trials 3");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find(",3\n") != std::string::npos);
  }

  SUBCASE("zero trials: validation error, exit 1") {
    const RunResult res =
        run_cli("sweep --config '" + config + "' --trials 0");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("trials") != std::string::npos);
  }
}

TEST_CASE("cli certify") {
  SUBCASE("single-node certification against the grid oracle") {
    const RunResult res = run_cli("certify --nodes 1 --trials 2 --seed 5");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("worst relative deviation") != std::string::npos);
  }

  SUBCASE("node counts beyond the oracle are refused") {
    const RunResult res = run_cli("certify --nodes 3");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("oracle limited to M <= 2") != std::string::npos);
  }
}

TEST_CASE("shipped configs parse") {
  const char* dir = std::getenv("RELAYMEC_CONFIG_DIR");
  REQUIRE_MESSAGE(dir != nullptr, "RELAYMEC_CONFIG_DIR must be set");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    INFO(entry.path().string());
    const CliConfig cfg = load_config(entry.path().string());
    CHECK(cfg.base.system.T == 0.1);
    CHECK(cfg.base.system.B_w == 1.4e6);
    cfg.sweep.validate();
  }
}
