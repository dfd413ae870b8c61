#include "relaymec/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "dual_detail.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/lp.hpp"
#include "relaymec/model.hpp"

// Equal-split variant: with f_mec,k pinned to f_mec_max/M the server-time
// constraint splits into M rows (tau_r + sum_j t_off_j + r_mec_k C M /
// f_mec_max <= T), each carrying its own multiplier zeta_k. The offload time
// price becomes sum_j zeta_j, the bits switch uses zeta_k C M / f_mec_max,
// and everything else mirrors the proportional pipeline. Dual vector order:
// (zeta_1..M; mu_1..M; lambda_1..M; eta_1..M).

namespace relaymec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

double feasible_tau_lb_eq(const Instance& in) {
  try {
    const double tlb = tau_r_lower_bound(in);
    if (tlb > in.system.T) throw InfeasibleInstance(tlb, direct_rate(in));
    return tlb;
  } catch (const RelayPathDegenerate&) {
    throw InfeasibleInstance(kInf, direct_rate(in));
  }
}

struct EqParts {
  double tlb = 0.0;
  double t_win = 0.0;
  double relay_slope = 0.0;  // alpha-weighted relay bits per second
  std::vector<double> g_eff;
  std::vector<double> server_s_per_bit;  // C_k M / f_mec_max
};

EqParts make_parts(const Instance& in) {
  EqParts p;
  p.tlb = feasible_tau_lb_eq(in);
  p.t_win = in.system.T - p.tlb;
  p.relay_slope = in.system.alpha * relay_rate(in, 1.0);
  p.g_eff.resize(in.M);
  p.server_s_per_bit.resize(in.M);
  for (std::size_t k = 0; k < in.M; ++k) {
    p.g_eff[k] = iot_effective_gain(in, k);
    p.server_s_per_bit[k] = in.nodes.cycles_per_bit[k] *
                            static_cast<double>(in.M) / in.system.f_mec_max;
  }
  return p;
}

// Exact inner maximum and residuals at a 4M-dimensional multiplier vector.
double eval_equal_dual(const Instance& in, const EqParts& ws,
                       const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const double a = sys.alpha;

  double zeta_sum = 0.0;
  for (std::size_t k = 0; k < M; ++k) zeta_sum += x[static_cast<Eigen::Index>(k)];

  const double c_tau = ws.relay_slope - zeta_sum;
  const double tau = (c_tau > 0.0) ? sys.T : ws.tlb;
  double value = c_tau * tau;

  double t_off_sum = 0.0;
  std::vector<double> t_off(M), r_bits(M), caps(M), t_loc(M), e_off(M);
  for (std::size_t k = 0; k < M; ++k) {
    const double zeta_k = x[static_cast<Eigen::Index>(k)];
    const double mu_k = x[static_cast<Eigen::Index>(M + k)];
    const double lam_k = x[static_cast<Eigen::Index>(2 * M + k)];
    const double eta_k = x[static_cast<Eigen::Index>(3 * M + k)];
    const double C_k = in.nodes.cycles_per_bit[k];
    const double f_k = in.nodes.cpu_hz[k];
    const double E_k = in.nodes.battery_j[k];

    value += zeta_k * sys.T + mu_k * sys.T + lam_k * E_k;

    const double u_k = mu_k +
                       lam_k * in.nodes.chip_coeff[k] * std::pow(f_k, 3) / C_k -
                       (1.0 - a) * f_k / C_k;
    t_loc[k] = (u_k < 0.0) ? sys.T : 0.0;
    value += -u_k * t_loc[k];

    const double eta_hat =
        std::max(eta_k, (1.0 - a) - zeta_k * ws.server_s_per_bit[k]);
    const detail::NodeBlockResult blk =
        detail::node_block_max(zeta_sum, lam_k, eta_hat, sys.B_w, sys.sigma2,
                               ws.g_eff[k], ws.t_win, E_k);
    value += blk.value;
    t_off[k] = blk.t;
    e_off[k] = blk.e;
    caps[k] = blk.cap;
    r_bits[k] = (eta_hat > eta_k) ? blk.cap : 0.0;
    t_off_sum += blk.t;
  }

  for (std::size_t k = 0; k < M; ++k) {
    const double C_k = in.nodes.cycles_per_bit[k];
    const double f_k = in.nodes.cpu_hz[k];
    grad[static_cast<Eigen::Index>(k)] =
        -(tau + t_off_sum + r_bits[k] * ws.server_s_per_bit[k] - sys.T);
    grad[static_cast<Eigen::Index>(M + k)] = -(t_loc[k] - sys.T);
    grad[static_cast<Eigen::Index>(2 * M + k)] =
        -(in.nodes.chip_coeff[k] * std::pow(f_k, 3) / C_k * t_loc[k] +
          e_off[k] - in.nodes.battery_j[k]);
    grad[static_cast<Eigen::Index>(3 * M + k)] = -(r_bits[k] - caps[k]);
  }
  return value;
}

lp::LinearProgram build_equal_lp(const Instance& in,
                                 const std::vector<double>& rho) {
  const double tlb = feasible_tau_lb_eq(in);
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const int n = static_cast<int>(1 + 3 * M);
  const auto i_loc = [&](std::size_t k) { return static_cast<int>(1 + k); };
  const auto i_off = [&](std::size_t k) { return static_cast<int>(1 + M + k); };
  const auto i_bits = [&](std::size_t k) { return static_cast<int>(1 + 2 * M + k); };

  lp::LinearProgram p = lp::make_lp(n);
  p.c[0] = sys.alpha * relay_rate(in, 1.0);
  for (std::size_t k = 0; k < M; ++k) {
    p.c[i_loc(k)] = (1.0 - sys.alpha) * in.nodes.cpu_hz[k] / in.nodes.cycles_per_bit[k];
    p.c[i_bits(k)] = 1.0 - sys.alpha;
  }

  // rows: M per-node frame shares, M batteries, M capacities
  p.A_ub = Eigen::MatrixXd::Zero(3 * static_cast<Eigen::Index>(M), n);
  p.b_ub = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(M));
  for (std::size_t k = 0; k < M; ++k) {
    const Eigen::Index fr = static_cast<Eigen::Index>(k);
    p.A_ub(fr, 0) = 1.0;
    for (std::size_t j = 0; j < M; ++j) p.A_ub(fr, i_off(j)) = 1.0;
    p.A_ub(fr, i_bits(k)) = in.nodes.cycles_per_bit[k] *
                            static_cast<double>(M) / sys.f_mec_max;
    p.b_ub[fr] = sys.T;

    const Eigen::Index er = static_cast<Eigen::Index>(M + k);
    p.A_ub(er, i_loc(k)) = in.nodes.chip_coeff[k] *
                           std::pow(in.nodes.cpu_hz[k], 3) /
                           in.nodes.cycles_per_bit[k];
    p.A_ub(er, i_off(k)) = rho[k];
    p.b_ub[er] = in.nodes.battery_j[k];

    const Eigen::Index cr = static_cast<Eigen::Index>(2 * M + k);
    const double x = rho[k] * iot_effective_gain(in, k) / sys.sigma2;
    p.A_ub(cr, i_bits(k)) = 1.0;
    p.A_ub(cr, i_off(k)) = -sys.B_w * std::log2(1.0 + x);
  }

  p.lower[0] = tlb;
  p.upper[0] = sys.T;
  for (std::size_t k = 0; k < M; ++k) {
    p.upper[i_loc(k)] = sys.T;
    p.upper[i_off(k)] = sys.T;
  }
  return p;
}

std::optional<PrimalSolution> recover_equal(const Instance& in,
                                            const std::vector<double>& rho) {
  const lp::LpSolution s = lp::solve_lp(build_equal_lp(in, rho));
  if (s.status != lp::LpStatus::optimal) return std::nullopt;

  const std::size_t M = in.M;
  PrimalSolution sol;
  sol.tau_r = s.x[0];
  sol.t_loc.resize(M);
  sol.t_off.resize(M);
  sol.e_off.resize(M);
  sol.r_mec.resize(M);
  sol.r_local.resize(M);
  sol.f_mec.assign(M, in.system.f_mec_max / static_cast<double>(M));
  for (std::size_t k = 0; k < M; ++k) {
    sol.t_loc[k] = s.x[1 + static_cast<Eigen::Index>(k)];
    sol.t_off[k] = s.x[1 + static_cast<Eigen::Index>(M + k)];
    sol.r_mec[k] = s.x[1 + static_cast<Eigen::Index>(2 * M + k)];
    sol.e_off[k] = rho[k] * sol.t_off[k];
    sol.r_local[k] = local_bits(in, k, sol.t_loc[k]);
  }
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);

  if (!all_satisfied(check_constraints(in, sol, 1e-6))) return std::nullopt;
  return sol;
}

// Exact completion of a duration profile under the equal split: drain every
// battery into its offload slot, saturate each node's bits against its own
// window and capacity, then grow the relay slot until the tightest node's
// window is spent. At fixed times nothing better exists, so this can only
// improve on the ray-restricted LP point.
std::optional<PrimalSolution> complete_equal_times(
    const Instance& in, const EqParts& ws, double tau,
    const std::vector<double>& t_loc, const std::vector<double>& t_off) {
  const std::size_t M = in.M;
  const auto& sys = in.system;
  PrimalSolution sol;
  sol.t_loc = t_loc;
  sol.t_off = t_off;
  sol.e_off.assign(M, 0.0);
  sol.r_mec.assign(M, 0.0);
  sol.r_local.resize(M);
  sol.f_mec.assign(M, sys.f_mec_max / static_cast<double>(M));
  double t_sum = 0.0;
  for (std::size_t k = 0; k < M; ++k) t_sum += t_off[k];
  const double window = std::max(0.0, sys.T - tau - t_sum);
  double served_max = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    sol.r_local[k] = local_bits(in, k, t_loc[k]);
    if (t_off[k] > 0.0) {
      const double e_local = in.nodes.chip_coeff[k] *
                             std::pow(in.nodes.cpu_hz[k], 3) /
                             in.nodes.cycles_per_bit[k] * t_loc[k];
      sol.e_off[k] = std::max(0.0, in.nodes.battery_j[k] - e_local);
      const double cap = offload_capacity(in, k, t_off[k], sol.e_off[k]);
      sol.r_mec[k] = std::min(cap, window / ws.server_s_per_bit[k]);
      served_max = std::max(served_max, sol.r_mec[k] * ws.server_s_per_bit[k]);
    }
  }
  sol.tau_r = std::min(sys.T, tau + std::max(0.0, window - served_max));
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);
  if (!all_satisfied(check_constraints(in, sol, 1e-6))) return std::nullopt;
  return sol;
}

// Same role as the proportional pipeline's block-maximizer density: the e/t
// ratio at the per-node argmax is valid in every branch, battery wall
// included, where the closed-form multiplier ratio overshoots.
std::vector<double> equal_block_density(const Instance& in, const EqParts& ws,
                                        const Eigen::VectorXd& x) {
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const double a = sys.alpha;
  double zeta_sum = 0.0;
  for (std::size_t j = 0; j < M; ++j) zeta_sum += x[static_cast<Eigen::Index>(j)];
  std::vector<double> rho(M, 0.0);
  for (std::size_t k = 0; k < M; ++k) {
    const double zeta_k = x[static_cast<Eigen::Index>(k)];
    const double lam_k = x[static_cast<Eigen::Index>(2 * M + k)];
    const double eta_k = x[static_cast<Eigen::Index>(3 * M + k)];
    const double E_k = in.nodes.battery_j[k];
    const double eta_hat =
        std::max(eta_k, (1.0 - a) - zeta_k * ws.server_s_per_bit[k]);
    const detail::NodeBlockResult blk =
        detail::node_block_max(zeta_sum, lam_k, eta_hat, sys.B_w, sys.sigma2,
                               ws.g_eff[k], ws.t_win, E_k);
    if (blk.t > 0.0 && blk.e > 0.0) {
      rho[k] = blk.e / blk.t;
    } else if (ws.t_win > 0.0) {
      rho[k] = E_k / ws.t_win;
    }
  }
  return rho;
}

std::vector<double> equal_density_from(const Instance& in,
                                       const Eigen::VectorXd& x, double t_win,
                                       bool force_fallback) {
  const std::size_t M = in.M;
  std::vector<double> rho(M, 0.0);
  double lam_max = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    lam_max = std::max(lam_max, x[static_cast<Eigen::Index>(2 * M + k)]);
  }
  for (std::size_t k = 0; k < M; ++k) {
    const double lam = x[static_cast<Eigen::Index>(2 * M + k)];
    const double eta = x[static_cast<Eigen::Index>(3 * M + k)];
    const double fb = (t_win > 0.0) ? in.nodes.battery_j[k] / t_win : 0.0;
    if (force_fallback || lam <= 1e-9 * std::max(1.0, lam_max)) {
      rho[k] = fb;
    } else {
      const double lam_c = std::max(lam, detail::kLambdaClamp);
      rho[k] = std::max(0.0, eta * in.system.B_w / (lam_c * kLn2) -
                                 in.system.sigma2 / iot_effective_gain(in, k));
    }
  }
  return rho;
}

}  // namespace

SolveReport solve_equal_allocation(const Instance& in,
                                   const SolveSettings& settings) {
  in.validate();
  const double C = solver_cycles_per_bit(in);
  const EqParts ws = make_parts(in);
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const Eigen::Index n = 4 * static_cast<Eigen::Index>(M);
  const double one_minus_a = 1.0 - sys.alpha;

  SolveReport rep;
  rep.method = "equal";
  rep.feasibility = Feasibility::feasible;
  rep.tau_r_lb = ws.tlb;
  rep.direct_rate = direct_rate(in);

  Eigen::VectorXd x0(n), radii(n);
  for (std::size_t k = 0; k < M; ++k) {
    x0[static_cast<Eigen::Index>(k)] =
        one_minus_a * sys.f_mec_max / (C * static_cast<double>(M));
    x0[static_cast<Eigen::Index>(M + k)] = one_minus_a;
    x0[static_cast<Eigen::Index>(2 * M + k)] = one_minus_a;
    x0[static_cast<Eigen::Index>(3 * M + k)] = one_minus_a;
    const double f_k = in.nodes.cpu_hz[k];
    const double E_k = in.nodes.battery_j[k];
    radii[static_cast<Eigen::Index>(k)] =
        10.0 * (ws.relay_slope +
                one_minus_a * (sys.f_mec_max / (C * static_cast<double>(M)) +
                               sys.B_w * 64.0) +
                1.0);
    radii[static_cast<Eigen::Index>(M + k)] =
        10.0 * (one_minus_a * f_k / C + 1.0);
    const double lam_bound =
        (E_k > 0.0) ? one_minus_a * sys.B_w * 64.0 * sys.T / (E_k * kLn2)
                    : one_minus_a / (in.nodes.chip_coeff[k] * f_k * f_k);
    radii[static_cast<Eigen::Index>(2 * M + k)] = 10.0 * (lam_bound + 1.0);
    radii[static_cast<Eigen::Index>(3 * M + k)] = 10.0 * (one_minus_a + 0.1);
  }

  double best_obj = -kInf;
  std::optional<PrimalSolution> best_primal;
  std::vector<double> best_rho;
  const auto try_density = [&](const std::vector<double>& rho) {
    auto sol = recover_equal(in, rho);
    if (!sol) return;
    if (auto fin =
            complete_equal_times(in, ws, sol->tau_r, sol->t_loc, sol->t_off);
        fin && fin->objective > sol->objective) {
      sol = std::move(fin);
    }
    if (sol->objective > best_obj) {
      best_obj = sol->objective;
      best_primal = std::move(sol);
      best_rho = rho;
    }
  };

  detail::EllipsoidSettings es;
  es.tolerance = settings.dual_tolerance;
  es.max_iterations = (settings.max_iterations > 0)
                          ? settings.max_iterations
                          : 20 * static_cast<long>(n) * static_cast<long>(n);
  es.keep_trace = settings.keep_trace;
  const long cadence = (settings.check_every > 0)
                           ? settings.check_every
                           : std::max<long>(100, static_cast<long>(n));
  long next_check = cadence;
  bool gap_stop = false;
  es.on_feasible = [&](const EllipsoidState& st, const Eigen::VectorXd& bx,
                       double bv) {
    if (st.iteration < next_check) return false;
    next_check = st.iteration + cadence;
    try_density(equal_block_density(in, ws, bx));
    const double gap = (bv - best_obj) / std::max(1.0, std::abs(bv));
    gap_stop = (gap <= 1e-3 * settings.tolerance);
    return gap_stop;
  };

  const auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return eval_equal_dual(in, ws, x, g);
  };
  const detail::EllipsoidResult er =
      detail::ellipsoid_minimize(x0, radii, eval, es);

  try_density(equal_block_density(in, ws, er.best_x));
  try_density(equal_density_from(in, er.best_x, ws.t_win, false));
  if (er.final_state.center.size() == n) {
    const Eigen::VectorXd c = er.final_state.center.cwiseMax(0.0);
    try_density(equal_block_density(in, ws, c));
    try_density(equal_density_from(in, c, ws.t_win, false));
  }
  try_density(equal_density_from(in, er.best_x, ws.t_win, true));

  if (!best_primal) {
    throw SolverError("equal-allocation recovery failed: no density candidate "
                      "produced an audited feasible solution");
  }

  // last-mile polish, matching the proportional pipeline: monotone drain
  // steps plus shrinking per-node density probes, keeping the audited winner
  const auto improved = [&](double before) {
    return best_obj > before + 1e-12 * std::max(1.0, std::abs(before));
  };
  const auto drain_density = [&]() {
    std::vector<double> rho = best_rho;
    for (std::size_t k = 0; k < M; ++k) {
      if (best_primal->t_off[k] <= 1e-12 * sys.T) continue;
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

  // fold the per-node frame prices into the report's scalar slot
  rep.dual.mu.resize(M);
  rep.dual.lambda.resize(M);
  rep.dual.eta.resize(M);
  rep.dual.zeta = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    rep.dual.zeta += er.best_x[static_cast<Eigen::Index>(k)];
    rep.dual.mu[k] = er.best_x[static_cast<Eigen::Index>(M + k)];
    rep.dual.lambda[k] = er.best_x[static_cast<Eigen::Index>(2 * M + k)];
    rep.dual.eta[k] = er.best_x[static_cast<Eigen::Index>(3 * M + k)];
  }
  rep.solution = *best_primal;
  rep.dual_value = er.best_value;
  rep.primal_value = best_obj;
  rep.gap = (rep.dual_value - rep.primal_value) /
            std::max(1.0, std::abs(rep.dual_value));
  rep.iterations = er.iterations;
  rep.trace = er.trace;

  if (!er.converged && !gap_stop && rep.gap > settings.tolerance) {
    throw MaxIterationsExceeded(rep.dual, rep.dual_value, rep.iterations);
  }
  return rep;
}

}  // namespace relaymec
