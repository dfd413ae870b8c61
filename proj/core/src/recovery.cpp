#include "relaymec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <utility>

#include "dual_detail.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/model.hpp"

namespace relaymec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double feasible_tau_lb(const Instance& in) {
  try {
    const double tlb = tau_r_lower_bound(in);
    if (tlb > in.system.T) throw InfeasibleInstance(tlb, direct_rate(in));
    return tlb;
  } catch (const RelayPathDegenerate&) {
    throw InfeasibleInstance(kInf, direct_rate(in));
  }
}

// Turns an LP vertex at the given densities into a full solution, or rejects
// it when the audit finds a violation beyond tolerance.
std::optional<PrimalSolution> recover_at_density(const Instance& in,
                                                 const std::vector<double>& rho) {
  const lp::LpSolution s = lp::solve_lp(build_p3(in, rho));
  if (s.status != lp::LpStatus::optimal) return std::nullopt;

  const std::size_t M = in.M;
  PrimalSolution sol;
  sol.tau_r = s.x[0];
  sol.t_loc.resize(M);
  sol.t_off.resize(M);
  sol.e_off.resize(M);
  sol.r_mec.resize(M);
  sol.r_local.resize(M);
  for (std::size_t k = 0; k < M; ++k) {
    sol.t_loc[k] = s.x[1 + static_cast<Eigen::Index>(k)];
    sol.t_off[k] = s.x[1 + static_cast<Eigen::Index>(M + k)];
    sol.r_mec[k] = s.x[1 + static_cast<Eigen::Index>(2 * M + k)];
    sol.e_off[k] = rho[k] * sol.t_off[k];
    sol.r_local[k] = local_bits(in, k, sol.t_loc[k]);
  }
  sol.f_mec = allocate_processors(sol.r_mec, in.system.f_mec_max);
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);

  if (!all_satisfied(check_constraints(in, sol, 1e-6))) return std::nullopt;
  return sol;
}

// Exact completion of a duration profile: drain every battery into its
// offload slot (capacity only widens), fill offloaded bits capacity-first
// against the leftover frame, and park unused frame in the relay slot. At
// fixed times this is the optimal choice of energies and bits, so it can
// only improve on the ray-restricted point the LP hands over.
std::optional<PrimalSolution> complete_times(const Instance& in, double tau,
                                             const std::vector<double>& t_loc,
                                             const std::vector<double>& t_off) {
  const std::size_t M = in.M;
  const auto& sys = in.system;
  PrimalSolution sol;
  sol.t_loc = t_loc;
  sol.t_off = t_off;
  sol.e_off.assign(M, 0.0);
  sol.r_mec.assign(M, 0.0);
  sol.r_local.resize(M);
  std::vector<double> cap(M, 0.0);
  double t_sum = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    sol.r_local[k] = local_bits(in, k, t_loc[k]);
    const double e_local = in.nodes.chip_coeff[k] *
                           std::pow(in.nodes.cpu_hz[k], 3) /
                           in.nodes.cycles_per_bit[k] * t_loc[k];
    if (t_off[k] > 0.0) {
      sol.e_off[k] = std::max(0.0, in.nodes.battery_j[k] - e_local);
      cap[k] = offload_capacity(in, k, t_off[k], sol.e_off[k]);
    }
    t_sum += t_off[k];
  }

  // server-time budget, spent on the cheapest bits first
  double budget = std::max(0.0, sys.T - tau - t_sum) * sys.f_mec_max;
  std::vector<std::size_t> order(M);
  for (std::size_t k = 0; k < M; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return in.nodes.cycles_per_bit[a] < in.nodes.cycles_per_bit[b];
  });
  double server_used = 0.0;
  for (std::size_t k : order) {
    const double C_k = in.nodes.cycles_per_bit[k];
    const double take = std::min(cap[k], (budget - server_used) / C_k);
    if (take <= 0.0) continue;
    sol.r_mec[k] = take;
    server_used += take * C_k;
  }
  sol.tau_r = std::min(
      sys.T, tau + std::max(0.0, (budget - server_used) / sys.f_mec_max));

  sol.f_mec = allocate_processors(sol.r_mec, sys.f_mec_max);
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);
  if (!all_satisfied(check_constraints(in, sol, 1e-6))) return std::nullopt;
  return sol;
}

// Frame waterfilling in the drained-battery regime. With local compute fixed
// and every battery poured into its offload slot, the frame beyond the relay
// floor splits between extra relay time (constant value per second) and
// per-node offload packages: t seconds of uplink plus C/f_mec server seconds
// per bit, worth (1-alpha) per bit, with bits = cap(t, E_avail). The package
// value is concave in t, so the optimum equalizes marginal value per frame
// second across nodes at some water level nu; nodes follow nu through
// h(K/t) = target (the capped-capacity slope), and either the relay absorbs
// the leftover at nu = relay value, or nu rises until the frame just fits.
std::optional<PrimalSolution> waterfill_times(const Instance& in, double tlb,
                                              const std::vector<double>& t_loc) {
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const double a = sys.alpha;
  const double W = sys.T - tlb;
  if (!(W > 0.0) || a >= 1.0) return std::nullopt;

  std::vector<double> e_avail(M), K(M);
  for (std::size_t k = 0; k < M; ++k) {
    const double e_local = in.nodes.chip_coeff[k] *
                           std::pow(in.nodes.cpu_hz[k], 3) /
                           in.nodes.cycles_per_bit[k] * t_loc[k];
    e_avail[k] = std::max(0.0, in.nodes.battery_j[k] - e_local);
    const double g = iot_effective_gain(in, k);
    K[k] = (g > 0.0) ? e_avail[k] * g / sys.sigma2 : 0.0;
  }

  const auto h_inv = [](double target) {
    double lo = 1e-18, hi = 1e18;
    for (int i = 0; i < 90; ++i) {
      const double mid = std::sqrt(lo * hi);
      (detail::capped_slope_h(mid) < target ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
  };

  // per-node durations, bits, and frame budget at water level nu
  std::vector<double> t(M), bits(M);
  const auto spend = [&](double nu) {
    double used = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      t[k] = 0.0;
      bits[k] = 0.0;
      if (K[k] <= 0.0) continue;
      const double C_k = in.nodes.cycles_per_bit[k];
      const double denom = (1.0 - a) - nu * C_k / sys.f_mec_max;
      if (denom <= 0.0) continue;  // bits no longer worth their server time
      const double target = nu / denom * std::numbers::ln2 / sys.B_w;
      if (target <= 0.0) {
        t[k] = kInf;  // free frame time: spend without limit
      } else {
        const double x = h_inv(target);
        t[k] = K[k] / x;
        bits[k] = t[k] * sys.B_w * std::log2(1.0 + x);
      }
      used += t[k] + bits[k] * C_k / sys.f_mec_max;
      if (!std::isfinite(used)) return kInf;
    }
    return used;
  };

  const double relay_value = a * relay_rate(in, 1.0);
  double leftover = 0.0;
  const double base_spend = relay_value > 0.0 ? spend(relay_value) : kInf;
  if (base_spend <= W) {
    leftover = W - base_spend;
  } else {
    // water rises above the relay value until the frame just fits
    double hi = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      hi = std::max(hi, (1.0 - a) * sys.f_mec_max / in.nodes.cycles_per_bit[k]);
    }
    if (hi <= 0.0) return std::nullopt;
    double lo = relay_value;
    if (!(base_spend > W)) return std::nullopt;  // degenerate: nothing to fit
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (spend(mid) > W ? lo : hi) = mid;
    }
    spend(hi);  // final safe side: fits within W
  }

  PrimalSolution sol;
  sol.tau_r = std::min(sys.T, tlb + leftover);
  sol.t_loc = t_loc;
  sol.t_off = t;
  sol.e_off.resize(M);
  sol.r_mec = bits;
  sol.r_local.resize(M);
  for (std::size_t k = 0; k < M; ++k) {
    sol.e_off[k] = (t[k] > 0.0) ? e_avail[k] : 0.0;
    sol.r_local[k] = local_bits(in, k, t_loc[k]);
  }
  sol.f_mec = allocate_processors(sol.r_mec, sys.f_mec_max);
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);
  if (!all_satisfied(check_constraints(in, sol, 1e-6))) return std::nullopt;
  return sol;
}

// Density read off the exact per-node inner maximizer at a dual point. The
// closed-form multiplier ratio goes wrong precisely when the block maximum
// sits on the battery wall (the stationarity ratio then exceeds what the
// budget admits), while the argmax ratio e/t is right in every branch. Idle
// blocks fall back to draining the battery over the whole window.
std::vector<double> block_density(const Instance& in, const DualPoint& d,
                                  double t_win) {
  const auto& sys = in.system;
  std::vector<double> rho(in.M, 0.0);
  for (std::size_t k = 0; k < in.M; ++k) {
    const double C_k = in.nodes.cycles_per_bit[k];
    const double E_k = in.nodes.battery_j[k];
    const double eta_hat =
        std::max(d.eta[k], (1.0 - sys.alpha) - d.zeta * C_k / sys.f_mec_max);
    const detail::NodeBlockResult blk =
        detail::node_block_max(d.zeta, d.lambda[k], eta_hat, sys.B_w,
                               sys.sigma2, iot_effective_gain(in, k), t_win,
                               E_k);
    if (blk.t > 0.0 && blk.e > 0.0) {
      rho[k] = blk.e / blk.t;
    } else if (t_win > 0.0) {
      rho[k] = E_k / t_win;
    }
  }
  return rho;
}

// Density read off the multipliers, with the energy-slack fallback: when the
// battery price is numerically zero the stationarity ratio is undefined, so
// use the density that drains the battery over the whole offload window.
std::vector<double> density_from(const Instance& in, const DualPoint& d,
                                 double t_win, bool force_fallback) {
  std::vector<double> rho(in.M, 0.0);
  const SwitchValues sw = switch_values(in, d);
  double lam_max = 0.0;
  for (double l : d.lambda) lam_max = std::max(lam_max, l);
  for (std::size_t k = 0; k < in.M; ++k) {
    const double fb = (t_win > 0.0) ? in.nodes.battery_j[k] / t_win : 0.0;
    const bool slack = d.lambda[k] <= 1e-9 * std::max(1.0, lam_max);
    rho[k] = (force_fallback || slack) ? fb : sw.rho[k];
  }
  return rho;
}

}  // namespace

std::vector<double> allocate_processors(const std::vector<double>& r_mec,
                                        double f_mec_max) {
  std::vector<double> f(r_mec.size(), 0.0);
  double total = 0.0;
  for (double r : r_mec) total += r;
  if (total > 0.0) {
    for (std::size_t k = 0; k < r_mec.size(); ++k) {
      f[k] = f_mec_max * r_mec[k] / total;
    }
  }
  return f;
}

lp::LinearProgram build_p3(const Instance& in, const std::vector<double>& rho_star) {
  if (rho_star.size() != in.M) {
    throw DimensionMismatch("rho_star does not match the instance node count");
  }
  for (double r : rho_star) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("rho_star must be finite and nonnegative");
    }
  }
  const double tlb = feasible_tau_lb(in);
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const int n = static_cast<int>(1 + 3 * M);
  const auto i_tau = 0;
  const auto i_loc = [&](std::size_t k) { return static_cast<int>(1 + k); };
  const auto i_off = [&](std::size_t k) { return static_cast<int>(1 + M + k); };
  const auto i_bits = [&](std::size_t k) { return static_cast<int>(1 + 2 * M + k); };

  lp::LinearProgram p = lp::make_lp(n);
  p.c[i_tau] = sys.alpha * relay_rate(in, 1.0);
  for (std::size_t k = 0; k < M; ++k) {
    p.c[i_loc(k)] = (1.0 - sys.alpha) * in.nodes.cpu_hz[k] / in.nodes.cycles_per_bit[k];
    p.c[i_bits(k)] = 1.0 - sys.alpha;
  }

  // frame sharing: relay slot + offload slots + server time fill the frame
  p.A_eq = Eigen::MatrixXd::Zero(1, n);
  p.b_eq = Eigen::VectorXd::Constant(1, sys.T);
  p.A_eq(0, i_tau) = 1.0;
  for (std::size_t k = 0; k < M; ++k) {
    p.A_eq(0, i_off(k)) = 1.0;
    p.A_eq(0, i_bits(k)) = in.nodes.cycles_per_bit[k] / sys.f_mec_max;
  }

  // per node: battery (with e_off = rho * t_off) and offload capacity
  p.A_ub = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(M), n);
  p.b_ub = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(M));
  for (std::size_t k = 0; k < M; ++k) {
    const Eigen::Index er = static_cast<Eigen::Index>(k);
    const Eigen::Index cr = static_cast<Eigen::Index>(M + k);
    p.A_ub(er, i_loc(k)) = in.nodes.chip_coeff[k] *
                           std::pow(in.nodes.cpu_hz[k], 3) /
                           in.nodes.cycles_per_bit[k];
    p.A_ub(er, i_off(k)) = rho_star[k];
    p.b_ub[er] = in.nodes.battery_j[k];

    const double x = rho_star[k] * iot_effective_gain(in, k) / sys.sigma2;
    p.A_ub(cr, i_bits(k)) = 1.0;
    p.A_ub(cr, i_off(k)) = -sys.B_w * std::log2(1.0 + x);
    p.b_ub[cr] = 0.0;
  }

  p.lower[i_tau] = tlb;
  p.upper[i_tau] = sys.T;
  for (std::size_t k = 0; k < M; ++k) {
    p.upper[i_loc(k)] = sys.T;
    p.upper[i_off(k)] = sys.T;
    // r_mec upper bound stays +inf; the capacity row holds it down
  }
  return p;
}

SolveReport solve_instance(const Instance& in, const SolveSettings& settings) {
  in.validate();
  solver_cycles_per_bit(in);  // the pipeline requires a common cycles/bit
  const double tlb = feasible_tau_lb(in);
  const double t_win = in.system.T - tlb;
  const std::size_t M = in.M;
  const long n = 1 + 3 * static_cast<long>(M);

  SolveReport rep;
  rep.method = "optimal";
  rep.feasibility = Feasibility::feasible;
  rep.tau_r_lb = tlb;
  rep.direct_rate = direct_rate(in);

  double best_obj = -kInf;
  std::optional<PrimalSolution> best_primal;
  std::vector<double> best_rho;
  const auto try_density = [&](const std::vector<double>& rho) {
    auto sol = recover_at_density(in, rho);
    if (!sol) return;
    if (auto fin = complete_times(in, sol->tau_r, sol->t_loc, sol->t_off);
        fin && fin->objective > sol->objective) {
      sol = std::move(fin);
    }
    if (sol->objective > best_obj) {
      best_obj = sol->objective;
      best_primal = std::move(sol);
      best_rho = rho;
    }
  };

  DualSolveSettings ds;
  ds.tolerance = settings.dual_tolerance;
  ds.max_iterations = settings.max_iterations;
  ds.keep_trace = settings.keep_trace;
  const long cadence = (settings.check_every > 0) ? settings.check_every
                                                  : std::max<long>(100, n);
  long next_check = cadence;
  bool gap_stop = false;
  ds.progress = [&](const EllipsoidState& st, const DualPoint& best,
                    double best_value) {
    if (st.iteration < next_check) return false;
    next_check = st.iteration + cadence;
    try_density(block_density(in, best, t_win));
    const double gap =
        (best_value - best_obj) / std::max(1.0, std::abs(best_value));
    gap_stop = (gap <= 1e-3 * settings.tolerance);
    return gap_stop;
  };

  const DualSolveResult dr = solve_dual(in, ds);

  // final harvest: densities from the block maximizer, the multiplier ratios
  // at the best point and the last center, and the battery-draining fallback
  try_density(block_density(in, dr.best, t_win));
  try_density(density_from(in, dr.best, t_win, false));
  {
    SwitchValues sw = switch_values(in, dr.best);
    try_density(sw.rho);
  }
  if (dr.final_state.center.size() == static_cast<Eigen::Index>(n)) {
    Eigen::VectorXd c = dr.final_state.center.cwiseMax(0.0);
    const DualPoint dc = detail::unpack_dual(c, M);
    try_density(block_density(in, dc, t_win));
    try_density(density_from(in, dc, t_win, false));
  }
  try_density(density_from(in, dr.best, t_win, true));

  if (!best_primal) {
    throw SolverError("primal recovery failed: no density candidate produced "
                      "an audited feasible solution");
  }

  // Last-mile polish: the multipliers pin the optimal densities only to the
  // dual solver's precision, while the LP value is what gets reported.
  // Two audited, monotone moves close the remainder:
  //  - drain steps: give each node the density that parks its battery exactly
  //    on the wall at the incumbent durations (net of local-compute energy);
  //    the incumbent stays feasible and capacities only widen, so the next LP
  //    cannot come back worse
  //  - shrinking scans: per-node coordinate probes at 1 +- delta, coarse to
  //    fine, for the frame-limited nodes the drain step cannot see
  const auto improved = [&](double before) {
    return best_obj > before + 1e-12 * std::max(1.0, std::abs(before));
  };
  const auto drain_density = [&]() {
    std::vector<double> rho = best_rho;
    for (std::size_t k = 0; k < M; ++k) {
      if (best_primal->t_off[k] <= 1e-12 * in.system.T) continue;
      const double e_local = in.nodes.chip_coeff[k] *
                             std::pow(in.nodes.cpu_hz[k], 3) /
                             in.nodes.cycles_per_bit[k] *
                             best_primal->t_loc[k];
      const double e_avail = std::max(0.0, in.nodes.battery_j[k] - e_local);
      rho[k] = e_avail / best_primal->t_off[k];
    }
    return rho;
  };
  for (int i = 0; i < 8; ++i) {
    const double before = best_obj;
    try_density(drain_density());
    if (!improved(before)) break;
  }
  int scan_rounds = 0;
  // pair probes ride the frame-row ridge: one node's density up, another's
  // down, keeping the pooled server load roughly level. Complete for small M,
  // restricted to the heaviest offloaders beyond that.
  const auto pair_targets = [&]() {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < M; ++k) {
      if (best_rho[k] > 0.0) idx.push_back(k);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a2, std::size_t b2) {
      return best_primal->t_off[a2] > best_primal->t_off[b2];
    });
    if (idx.size() > 6) idx.resize(6);
    return idx;
  };
  for (double delta = 0.5; delta >= 1e-5;) {
    const double before = best_obj;
    for (std::size_t k = 0; k < M; ++k) {
      const double base = best_rho[k];
      if (base <= 0.0) continue;
      for (double s : {1.0 - delta, 1.0 + delta}) {
        std::vector<double> rho = best_rho;
        rho[k] = base * s;
        try_density(rho);
      }
    }
    for (double s : {1.0 - delta, 1.0 + delta}) {
      std::vector<double> rho = best_rho;
      for (double& v : rho) v *= s;
      try_density(rho);
    }
    for (std::size_t a2 : pair_targets()) {
      for (std::size_t b2 : pair_targets()) {
        if (a2 == b2) continue;
        std::vector<double> rho = best_rho;
        rho[a2] *= 1.0 + delta;
        rho[b2] *= 1.0 - delta;
        try_density(rho);
      }
    }
    if (improved(before)) {
      try_density(drain_density());
      delta = std::min(0.5, delta * 2.0);
    } else {
      delta /= 3.0;
    }
    if (++scan_rounds >= 60) break;
  }

  // The LP scan can jam on a vertex kink when the dual is degenerate; the
  // waterfilling pass redistributes the incumbent's frame exactly and feeds
  // the implied densities back so the LP can re-decide local compute.
  for (int round = 0; round < 3; ++round) {
    const double before = best_obj;
    if (auto wf = waterfill_times(in, tlb, best_primal->t_loc)) {
      std::vector<double> rho(M, 0.0);
      for (std::size_t k = 0; k < M; ++k) {
        if (wf->t_off[k] > 1e-12 * in.system.T) {
          rho[k] = wf->e_off[k] / wf->t_off[k];
        }
      }
      if (wf->objective > best_obj) {
        best_obj = wf->objective;
        best_primal = std::move(wf);
      }
      try_density(rho);
    }
    if (!improved(before)) break;
  }

  rep.solution = *best_primal;
  rep.dual = dr.best;
  rep.dual_value = dr.value;
  rep.primal_value = best_obj;
  rep.gap = (rep.dual_value - rep.primal_value) /
            std::max(1.0, std::abs(rep.dual_value));
  rep.iterations = dr.iterations;
  rep.trace = dr.trace;

  if (!dr.converged && !gap_stop && rep.gap > settings.tolerance) {
    throw MaxIterationsExceeded(dr.best, dr.value, dr.iterations);
  }
  return rep;
}

}  // namespace relaymec
