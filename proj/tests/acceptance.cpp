// Repository acceptance harness. Eleven integration-level checks over the
// solver stack, each printed as one [PASS]/[FAIL] line with its key numbers
// and wall time. Exit status is the number of failed checks, so the binary
// doubles as a ctest gate. Checks with runtime caps time the whole block,
// draws included.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lp_vertex_oracle.hpp"
#include "relaymec/baseline.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/lp.hpp"
#include "relaymec/model.hpp"
#include "relaymec/montecarlo.hpp"
#include "relaymec/oracle.hpp"
#include "relaymec/recovery.hpp"

using namespace relaymec;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(int id, const char* name, const Verdict& v, double secs) {
  if (!v.pass) ++g_failures;
  std::printf("[%s] %2d. %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name,
              v.detail.c_str(), secs);
  std::fflush(stdout);
}

bool relay_feasible(const Instance& in) {
  try {
    return tau_r_lower_bound(in) <= in.system.T;
  } catch (const RelayPathDegenerate&) {
    return false;
  }
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? std::numeric_limits<double>::quiet_NaN() : s / xs.size();
}

// ---------------------------------------------------------------- 1 and 2

Verdict oracle_equivalence(std::size_t M, int want, double bound,
                           double time_cap_s, double* secs_out) {
  const auto t0 = clk::now();
  InstanceTemplate tpl = default_template();
  tpl.M = M;

  double worst = 0.0;
  int done = 0;
  std::uint64_t trial = 0;
  const std::uint64_t seed = 1234;
  while (done < want) {
    const auto gains = sample_channels({seed, trial++}, tpl.means, tpl.M);
    const Instance in = tpl.make(gains);
    if (!relay_feasible(in)) continue;
    const SolveReport rep = solve_instance(in);
    const PrimalSolution ref =
        M == 1 ? oracle::grid_solve(in)
               : oracle::multistart_solve(in, 24, 60, seed + 1000 + trial);
    const double dev =
        std::abs(rep.primal_value - ref.objective) / std::abs(ref.objective);
    worst = std::max(worst, dev);
    ++done;
  }
  *secs_out = std::chrono::duration<double>(clk::now() - t0).count();
  Verdict v;
  v.pass = worst <= bound && *secs_out <= time_cap_s;
  v.detail =
      fmt("worst deviation %.2e over %d instances, bound %.0e, cap %.0f s",
          worst, want, bound, time_cap_s);
  return v;
}

// --------------------------------------------------------------------- 3

Verdict allocation_exactness() {
  InstanceTemplate tpl = default_template();
  const std::array<double, 3> alphas{0.2, 0.5, 0.8};

  double worst_prop = 0.0, worst_sum = 0.0, worst_time = 0.0;
  int checked = 0;
  int attempts = 0;  // cycles alpha across feasible draws; at a relay-heavy
                     // alpha the optimum may not offload at all, and such
                     // solves are vacuous for the property
  std::uint64_t trial = 0;
  while (checked < 10 && trial < 60000) {
    const auto gains = sample_channels({777, trial++}, tpl.means, tpl.M);
    tpl.system.alpha = alphas[static_cast<std::size_t>(attempts) %
                              alphas.size()];
    const Instance in = tpl.make(gains);
    if (!relay_feasible(in)) continue;
    ++attempts;
    const SolveReport rep = solve_instance(in);
    const PrimalSolution& s = rep.solution;

    double load = 0.0, sum_f = 0.0, sum_t = 0.0;
    for (std::size_t k = 0; k < in.M; ++k) {
      load += s.r_mec[k] * in.nodes.cycles_per_bit[k];
      sum_f += s.f_mec[k];
      sum_t += s.t_off[k];
    }
    if (load <= 0.0) continue;  // the property is about solves that offload
    ++checked;

    const double fmax = in.system.f_mec_max;
    for (std::size_t k = 0; k < in.M; ++k) {
      const double pred = fmax * s.r_mec[k] * in.nodes.cycles_per_bit[k] / load;
      worst_prop = std::max(worst_prop, std::abs(s.f_mec[k] - pred) / fmax);
    }
    worst_sum = std::max(worst_sum, std::abs(sum_f - fmax) / fmax);
    const double server_time = load / fmax;
    const double window = in.system.T - s.tau_r - sum_t;
    worst_time =
        std::max(worst_time, std::abs(server_time - window) / in.system.T);
  }

  Verdict v;
  v.pass = checked == 10 && worst_prop <= 1e-9 && worst_sum <= 1e-9 &&
           worst_time <= 1e-6;
  v.detail = fmt(
      "over %d offloading solves: share residual %.1e (<=1e-9), "
      "sum residual %.1e (<=1e-9), server-window residual %.1e (<=1e-6)",
      checked, worst_prop, worst_sum, worst_time);
  return v;
}

// --------------------------------------------------------------------- 4

Verdict duality_gap(double* secs_out) {
  const auto t0 = clk::now();
  const InstanceTemplate tpl = default_template();

  double worst = 0.0;
  int done = 0;
  std::uint64_t trial = 0;
  while (done < 50) {
    const auto gains = sample_channels({4242, trial++}, tpl.means, tpl.M);
    const Instance in = tpl.make(gains);
    if (!relay_feasible(in)) continue;
    worst = std::max(worst, solve_instance(in).gap);
    ++done;
  }
  *secs_out = std::chrono::duration<double>(clk::now() - t0).count();
  Verdict v;
  v.pass = worst <= 1e-3 && *secs_out <= 600.0;
  v.detail = fmt("worst relative gap %.2e over 50 instances at M = %zu, "
                 "bound 1e-03, cap 600 s",
                 worst, tpl.M);
  return v;
}

// --------------------------------------------------------------------- 5

Verdict alpha_corners() {
  InstanceTemplate tpl = default_template();

  double worst_tau_hi = 0.0;   // |tau_r - T| / T at alpha = 1
  double worst_obj = 0.0;      // closed-form objective residual at alpha = 1
  double worst_tau_lo = 0.0;   // |tau_r - tau_lb| / T at alpha = 0
  int done = 0;
  std::uint64_t trial = 0;
  while (done < 5 && trial < 20000) {
    const auto gains = sample_channels({555, trial++}, tpl.means, tpl.M);
    tpl.system.alpha = 1.0;
    const Instance hi = tpl.make(gains);
    if (!relay_feasible(hi)) continue;
    ++done;

    const SolveReport rep_hi = solve_instance(hi);
    const double T = hi.system.T;
    const double gamma_min = std::min(
        gamma_pt_ap(hi), gamma_pt_pr(hi) + gamma_ap_pr(hi));
    const double closed_form =
        T * hi.system.B_w / 2.0 * std::log2(1.0 + gamma_min);
    worst_tau_hi =
        std::max(worst_tau_hi, std::abs(rep_hi.solution.tau_r - T) / T);
    worst_obj = std::max(
        worst_obj, std::abs(rep_hi.primal_value - closed_form) / closed_form);

    tpl.system.alpha = 0.0;
    const Instance lo = tpl.make(gains);
    const SolveReport rep_lo = solve_instance(lo);
    worst_tau_lo = std::max(
        worst_tau_lo,
        std::abs(rep_lo.solution.tau_r - tau_r_lower_bound(lo)) / T);
  }

  Verdict v;
  v.pass = done == 5 && worst_tau_hi <= 1e-6 && worst_obj <= 1e-6 &&
           worst_tau_lo <= 1e-6;
  v.detail = fmt(
      "alpha=1: |tau_r - T|/T %.1e, closed-form residual %.1e; "
      "alpha=0: |tau_r - floor|/T %.1e (all <=1e-6, %d instances)",
      worst_tau_hi, worst_obj, worst_tau_lo, done);
  return v;
}

// ---------------------------------------------------------------- 6, 7, 8

// One paired scan feeds the three trend checks: every cell of every criterion
// reuses the same per-trial channel draw, so cross-cell comparisons are exact.
struct Cell {
  double relay = 0.0;    // bits/s over the frame
  double comp = 0.0;     // bits/s, local + offloaded
  double utility = 0.0;  // objective / T
  double pg = 0.0;       // relay bits / direct bits
  double ig = 0.0;       // computed bits / local-only bits
  double eps = 0.0;      // certified objective slack [bits]
};

constexpr std::array<double, 5> kAlphas{0.1, 0.3, 0.5, 0.7, 0.9};
constexpr std::array<int, 3> kEqIdx{0, 2, 4};  // alpha subset for the baseline

struct TrendData {
  std::vector<std::array<Cell, 5>> d50;       // E = 1 J
  std::vector<std::array<Cell, 5>> d80;       // E = 1 J
  std::vector<std::array<Cell, 5>> d80_half;  // E = 0.5 J
  std::vector<std::array<double, 3>> eq80;    // equal-allocation utility
  int trials = 0;
};

Cell solve_cell(const InstanceTemplate& tpl, const ChannelGains& gains) {
  const Instance in = tpl.make(gains);
  const SolveReport rep = solve_instance(in);
  Cell c;
  const double T = in.system.T;
  c.relay = rep.solution.r_relay / T;
  double bits = 0.0;
  for (std::size_t k = 0; k < in.M; ++k)
    bits += rep.solution.r_local[k] + rep.solution.r_mec[k];
  c.comp = bits / T;
  c.utility = rep.primal_value / T;
  c.pg = primary_gain(in, rep.solution);
  c.ig = iot_gain(in, rep.solution);
  c.eps = std::max(0.0, rep.dual_value - rep.primal_value);
  return c;
}

TrendData run_trend_scan(int trials) {
  TrendData out;
  out.trials = trials;
  InstanceTemplate tpl = default_template();
  const std::uint64_t seed = 9001;

  for (int trial = 0; trial < trials; ++trial) {
    const auto gains =
        sample_channels({seed, static_cast<std::uint64_t>(trial)}, tpl.means,
                        tpl.M);

    tpl.d_pt_ap = 50.0;
    tpl.battery_j = 1.0;
    if (relay_feasible(tpl.make(gains))) {
      std::array<Cell, 5> row;
      for (std::size_t i = 0; i < kAlphas.size(); ++i) {
        tpl.system.alpha = kAlphas[i];
        row[i] = solve_cell(tpl, gains);
      }
      out.d50.push_back(row);
    }

    tpl.d_pt_ap = 80.0;
    tpl.system.alpha = kAlphas[0];
    if (relay_feasible(tpl.make(gains))) {
      std::array<Cell, 5> full, half;
      for (std::size_t i = 0; i < kAlphas.size(); ++i) {
        tpl.system.alpha = kAlphas[i];
        tpl.battery_j = 1.0;
        full[i] = solve_cell(tpl, gains);
        tpl.battery_j = 0.5;
        half[i] = solve_cell(tpl, gains);
      }
      out.d80.push_back(full);
      out.d80_half.push_back(half);

      std::array<double, 3> eq;
      tpl.battery_j = 1.0;
      for (std::size_t j = 0; j < kEqIdx.size(); ++j) {
        tpl.system.alpha = kAlphas[static_cast<std::size_t>(kEqIdx[j])];
        const Instance in = tpl.make(gains);
        eq[j] = solve_equal_allocation(in).primal_value / in.system.T;
      }
      out.eq80.push_back(eq);
    }
  }
  return out;
}

// Scalarization pairing bound: epsilon-optimal solves at neighbouring weights
// bound each other's relay/computation ordering by (eps + eps') / d_alpha in
// objective units, i.e. divided by T on rates. The 1e-9 floor absorbs fp.
double pair_tol(const Cell& a, const Cell& b, double d_alpha, double T,
                double scale) {
  return (a.eps + b.eps) / (d_alpha * T) + 1e-9 * std::max(1.0, scale);
}

Verdict relay_trends(const TrendData& td) {
  const double T = default_template().system.T;

  int mono_bad = 0;
  for (const auto* rows : {&td.d50, &td.d80}) {
    for (const auto& row : *rows) {
      for (std::size_t i = 0; i + 1 < row.size(); ++i) {
        const double tol =
            pair_tol(row[i], row[i + 1], kAlphas[i + 1] - kAlphas[i], T,
                     row[i].relay);
        if (row[i + 1].relay < row[i].relay - tol) ++mono_bad;
      }
    }
  }

  std::vector<double> relay50, relay80, pg_mid;
  for (const auto& row : td.d50) {
    for (const Cell& c : row) relay50.push_back(c.relay);
    pg_mid.push_back(row[2].pg);
  }
  for (const auto& row : td.d80) {
    for (const Cell& c : row) relay80.push_back(c.relay);
    pg_mid.push_back(row[2].pg);
  }
  const double m50 = mean_of(relay50);
  const double m80 = mean_of(relay80);
  const double pg = mean_of(pg_mid);

  Verdict v;
  const bool enough = td.trials >= 200;
  const bool closer_wins = m50 > m80;
  const bool mutual = pg > 1.0;
  v.pass = enough && mono_bad == 0 && closer_wins && mutual;
  v.detail = fmt(
      "monotone-in-alpha violations %d/%zu trials; mean relay rate %.4e at "
      "50 m vs %.4e at 80 m (need >); mean primary gain %.6f at alpha 0.5 "
      "(need >1); %d trials",
      mono_bad, td.d50.size() + td.d80.size(), m50, m80, pg, td.trials);
  return v;
}

Verdict computation_trends(const TrendData& td) {
  const double T = default_template().system.T;

  int mono_bad = 0;
  for (const auto* rows : {&td.d80, &td.d80_half}) {
    for (const auto& row : *rows) {
      for (std::size_t i = 0; i + 1 < row.size(); ++i) {
        const double tol =
            pair_tol(row[i], row[i + 1], kAlphas[i + 1] - kAlphas[i], T,
                     row[i].comp);
        if (row[i + 1].comp > row[i].comp + tol) ++mono_bad;
      }
    }
  }

  // battery dominance of the means, alpha by alpha, on the same trials
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kAlphas.size(); ++i) {
    std::vector<double> full, half;
    for (const auto& row : td.d80) full.push_back(row[i].comp);
    for (const auto& row : td.d80_half) half.push_back(row[i].comp);
    const double mf = mean_of(full), mh = mean_of(half);
    worst_margin = std::min(worst_margin, mf - mh);
  }

  std::vector<double> ig_mid;
  for (const auto& row : td.d80) ig_mid.push_back(row[2].ig);
  for (const auto& row : td.d80_half) ig_mid.push_back(row[2].ig);
  const double ig = mean_of(ig_mid);

  Verdict v;
  const double scale = 1e-9 * std::max(1.0, std::abs(worst_margin));
  v.pass = td.trials >= 200 && mono_bad == 0 && worst_margin >= -scale &&
           ig > 1.0;
  v.detail = fmt(
      "monotone-in-alpha violations %d/%zu trials; worst battery-dominance "
      "margin %.3e bits/s (need >=0); mean IoT gain %.4f at alpha 0.5 "
      "(need >1)",
      mono_bad, td.d80.size() + td.d80_half.size(), worst_margin, ig);
  return v;
}

Verdict utility_dominance(const TrendData& td) {
  int dom_bad = 0;
  double worst_dev = 0.0;
  std::vector<double> gap_lo, gap_hi;
  for (std::size_t t = 0; t < td.d80.size(); ++t) {
    for (std::size_t j = 0; j < kEqIdx.size(); ++j) {
      const double opt = td.d80[t][static_cast<std::size_t>(kEqIdx[j])].utility;
      const double eq = td.eq80[t][j];
      const double dev = (opt - eq) / std::max(1.0, std::abs(eq));
      worst_dev = std::min(worst_dev, dev);
      if (dev < -1e-6) ++dom_bad;
    }
    gap_lo.push_back(td.d80[t][0].utility - td.eq80[t][0]);
    gap_hi.push_back(td.d80[t][4].utility - td.eq80[t][2]);
  }
  const double mean_lo = mean_of(gap_lo);
  const double mean_hi = mean_of(gap_hi);

  Verdict v;
  v.pass = dom_bad == 0 && mean_hi <= mean_lo;
  v.detail = fmt(
      "dominance violations %d over %zu trials x 3 alphas (worst relative "
      "deviation %.1e, floor -1e-6); mean utility gap %.3e at alpha 0.9 vs "
      "%.3e at alpha 0.1 (need <=)",
      dom_bad, td.d80.size(), worst_dev, mean_hi, mean_lo);
  return v;
}

// --------------------------------------------------------------------- 9

Verdict feasibility_gate() {
  InstanceTemplate tpl = default_template();
  tpl.M = 2;

  ChannelGains gains;
  gains.g_ap_pr = 1.0;
  gains.g_pt_pr = 1e-3;
  gains.g_pt_ap = 0.0;
  gains.g_iot = {1.0, 1.0};

  bool dead_ok = false;
  double dead_lb = 0.0;
  try {
    solve_instance(tpl.make(gains));
  } catch (const InfeasibleInstance& e) {
    dead_lb = e.tau_r_lb;
    dead_ok = e.tau_r_lb > tpl.system.T;
  }

  gains.g_pt_ap = 1.0;
  gains.g_pt_pr = 0.0;
  const Instance free_in = tpl.make(gains);
  bool free_ok = false;
  double free_lb = -1.0;
  try {
    free_lb = tau_r_lower_bound(free_in);
    const SolveReport rep = solve_instance(free_in);
    free_ok = free_lb == 0.0 && rep.feasibility == Feasibility::feasible &&
              rep.tau_r_lb == 0.0;
  } catch (const InfeasibleInstance&) {
  }

  Verdict v;
  v.pass = dead_ok && free_ok;
  v.detail = fmt(
      "dead relay hop: infeasible with floor %s > T as required: %s; "
      "silent primary: feasible with floor %.1f: %s",
      std::isinf(dead_lb) ? "inf" : fmt("%.3e", dead_lb).c_str(),
      dead_ok ? "yes" : "no", free_lb, free_ok ? "yes" : "no");
  return v;
}

// -------------------------------------------------------------------- 10

Verdict lp_certification(double* secs_out) {
  const auto t0 = clk::now();
  std::mt19937_64 rng(31337);
  int n_feasible = 0, n_infeasible = 0, mismatches = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = testutil::random_box_lp(rng);
    const auto ref = testutil::vertex_oracle(p);
    const auto s = lp::solve_lp(p);
    if (ref.feasible != (s.status == lp::LpStatus::optimal)) {
      ++mismatches;
      continue;
    }
    if (!ref.feasible) {
      ++n_infeasible;
      continue;
    }
    ++n_feasible;
    worst = std::max(worst, std::abs(s.value - ref.value) /
                                std::max(1.0, std::abs(ref.value)));
  }
  *secs_out = std::chrono::duration<double>(clk::now() - t0).count();
  Verdict v;
  v.pass = mismatches == 0 && worst <= 1e-8 && *secs_out <= 30.0 &&
           n_feasible > 0 && n_infeasible > 0;
  v.detail = fmt(
      "200 random programs: %d feasible, %d infeasible, %d status "
      "mismatches, worst value residual %.1e (<=1e-8), cap 30 s",
      n_feasible, n_infeasible, mismatches, worst);
  return v;
}

// -------------------------------------------------------------------- 11

Verdict sweep_determinism() {
  Verdict v;
  const char* cli = std::getenv("RELAYMEC_CLI");
  if (cli == nullptr) {
    v.pass = false;
    v.detail = "RELAYMEC_CLI is not set; cannot run the sweep binary";
    return v;
  }

  const fs::path dir =
      fs::temp_directory_path() / ("relaymec_acceptance_" +
                                   std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path cfg = dir / "sweep.ini";
  {
    std::ofstream f(cfg);
    f << "[sweep]\n"
         "alpha_grid = 0.1, 0.5, 0.9\n"
         "placements_m = 50, 80\n"
         "energy_levels_j = 1\n"
         "trials = 120\n"
         "seed = 77\n"
         "threads = 4\n";
  }

  auto run_once = [&](const fs::path& out) -> bool {
    const std::string cmd = std::string("'") + cli + "' sweep --config '" +
                            cfg.string() + "' --out '" + out.string() +
                            "' 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  const fs::path out_a = dir / "a.csv", out_b = dir / "b.csv";
  const bool ok_a = run_once(out_a);
  const bool ok_b = run_once(out_b);
  const std::string a = slurp(out_a), b = slurp(out_b);

  std::error_code ec;
  fs::remove_all(dir, ec);

  const bool header_ok =
      a.rfind("alpha,d_pt_ap,energy,metric,mean,std,n_feasible,n_total\n", 0) ==
      0;
  v.pass = ok_a && ok_b && header_ok && !a.empty() && a == b;
  v.detail = fmt(
      "two seeded runs, 4 worker threads: exit ok %s/%s, %zu bytes, "
      "byte-identical: %s",
      ok_a ? "yes" : "no", ok_b ? "yes" : "no", a.size(),
      a == b ? "yes" : "no");
  return v;
}

}  // namespace

// --------------------------------------------------------------------------

int main() {
  auto run = [](int id, const char* name, auto&& fn) {
    const auto t0 = clk::now();
    const Verdict v = fn();
    report(id, name, v,
           std::chrono::duration<double>(clk::now() - t0).count());
  };

  {
    double block = 0.0;
    const Verdict v = oracle_equivalence(1, 20, 1e-2, 60.0, &block);
    report(1, "solver vs grid oracle, M=1", v, block);
  }
  {
    double block = 0.0;
    const Verdict v = oracle_equivalence(2, 10, 2e-2, 300.0, &block);
    report(2, "solver vs multistart oracle, M=2", v, block);
  }
  run(3, "processor allocation exactness", allocation_exactness);
  {
    double block = 0.0;
    const Verdict v = duality_gap(&block);
    report(4, "certified duality gap, M=20", v, block);
  }
  run(5, "alpha corner closed forms", alpha_corners);

  const auto t_scan = clk::now();
  const TrendData td = run_trend_scan(4000);
  const double scan_secs =
      std::chrono::duration<double>(clk::now() - t_scan).count();
  std::printf("(paired trend scan: %d trials, %zu feasible at 50 m, %zu at "
              "80 m, %.1f s)\n",
              td.trials, td.d50.size(), td.d80.size(), scan_secs);
  std::fflush(stdout);

  report(6, "relay rate trends", relay_trends(td), scan_secs);
  report(7, "computation rate trends", computation_trends(td), 0.0);
  report(8, "optimal vs equal allocation", utility_dominance(td), 0.0);

  run(9, "feasibility gate", feasibility_gate);
  {
    double block = 0.0;
    const Verdict v = lp_certification(&block);
    report(10, "lp solver vs vertex oracle", v, block);
  }
  run(11, "sweep determinism", sweep_determinism);

  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures;
}
