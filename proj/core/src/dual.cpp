#include "relaymec/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dual_detail.hpp"
#include "relaymec/model.hpp"

namespace relaymec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

void check_dual_shape(const Instance& in, const DualPoint& d) {
  if (d.mu.size() != in.M || d.lambda.size() != in.M || d.eta.size() != in.M) {
    throw DimensionMismatch("dual point does not match the instance node count");
  }
}

void check_primal_shape(const Instance& in, const PrimalSolution& p) {
  if (p.t_loc.size() != in.M || p.t_off.size() != in.M ||
      p.e_off.size() != in.M || p.r_mec.size() != in.M) {
    throw DimensionMismatch("primal solution does not match the instance node count");
  }
}

// Relay feasibility gate shared by the candidate and the solver.
double feasible_tau_lb(const Instance& in) {
  double tlb = 0.0;
  try {
    tlb = tau_r_lower_bound(in);
  } catch (const RelayPathDegenerate&) {
    throw InfeasibleInstance(kInf, direct_rate(in));
  }
  if (tlb > in.system.T) throw InfeasibleInstance(tlb, direct_rate(in));
  return tlb;
}

// Server rate split that equalizes remote compute times: f proportional to
// bits * cycles-per-bit. All zeros when nothing is offloaded.
std::vector<double> proportional_server_split(const Instance& in,
                                              const std::vector<double>& r_mec) {
  std::vector<double> f(in.M, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < in.M; ++k) total += r_mec[k] * in.nodes.cycles_per_bit[k];
  if (total > 0.0) {
    for (std::size_t k = 0; k < in.M; ++k) {
      f[k] = in.system.f_mec_max * (r_mec[k] * in.nodes.cycles_per_bit[k]) / total;
    }
  }
  return f;
}

}  // namespace

SwitchValues switch_values(const Instance& in, const DualPoint& dual) {
  check_dual_shape(in, dual);
  const auto& sys = in.system;
  SwitchValues sw;
  sw.rho.resize(in.M);
  sw.s_off.resize(in.M);
  sw.u.resize(in.M);
  sw.v.resize(in.M);
  for (std::size_t k = 0; k < in.M; ++k) {
    const double g_eff = iot_effective_gain(in, k);
    const double lam_c = std::max(dual.lambda[k], detail::kLambdaClamp);
    const double rho =
        std::max(0.0, dual.eta[k] * sys.B_w / (lam_c * kLn2) - sys.sigma2 / g_eff);
    const double x = rho * g_eff / sys.sigma2;
    sw.rho[k] = rho;
    sw.s_off[k] = dual.zeta - dual.eta[k] * sys.B_w * std::log2(1.0 + x) +
                  dual.eta[k] * sys.B_w * (1.0 / kLn2) * (x / (1.0 + x));
    const double f_over_c = in.nodes.cpu_hz[k] / in.nodes.cycles_per_bit[k];
    sw.u[k] = dual.mu[k] +
              dual.lambda[k] * in.nodes.chip_coeff[k] *
                  std::pow(in.nodes.cpu_hz[k], 3) / in.nodes.cycles_per_bit[k] -
              (1.0 - sys.alpha) * f_over_c;
    sw.v[k] = dual.zeta * in.nodes.cycles_per_bit[k] / sys.f_mec_max +
              dual.eta[k] - (1.0 - sys.alpha);
  }
  sw.s_relay = dual.zeta - sys.alpha * relay_rate(in, 1.0);
  return sw;
}

PrimalCandidate primal_from_dual(const Instance& in, const DualPoint& dual) {
  check_dual_shape(in, dual);
  const double tlb = feasible_tau_lb(in);
  const auto& sys = in.system;

  PrimalCandidate out;
  out.switches = switch_values(in, dual);
  const SwitchValues& sw = out.switches;
  PrimalSolution& sol = out.solution;

  sol.tau_r = (sw.s_relay < 0.0) ? sys.T : tlb;
  out.tied = (sw.s_relay == 0.0);
  sol.t_loc.assign(in.M, 0.0);
  sol.t_off.assign(in.M, 0.0);
  sol.e_off.assign(in.M, 0.0);
  sol.r_mec.assign(in.M, 0.0);
  sol.r_local.assign(in.M, 0.0);
  for (std::size_t k = 0; k < in.M; ++k) {
    if (sw.u[k] < 0.0) sol.t_loc[k] = sys.T;
    if (sw.s_off[k] < 0.0) sol.t_off[k] = sys.T - tlb;
    if (sw.v[k] < 0.0) {
      const double x = sw.rho[k] * iot_effective_gain(in, k) / sys.sigma2;
      sol.r_mec[k] = sol.t_off[k] * sys.B_w * std::log2(1.0 + x);
    }
    sol.e_off[k] = std::min(sw.rho[k] * sol.t_off[k], in.nodes.battery_j[k]);
    sol.r_local[k] = local_bits(in, k, sol.t_loc[k]);
    out.tied |= (sw.u[k] == 0.0) || (sw.s_off[k] == 0.0) || (sw.v[k] == 0.0);
  }
  sol.f_mec = proportional_server_split(in, sol.r_mec);
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);
  return out;
}

double lagrangian_value(const Instance& in, const DualPoint& dual,
                        const PrimalSolution& primal) {
  check_dual_shape(in, dual);
  check_primal_shape(in, primal);
  const auto& sys = in.system;

  double obj = sys.alpha * relay_rate(in, primal.tau_r);
  double value = 0.0;
  double frame_use = primal.tau_r;
  for (std::size_t k = 0; k < in.M; ++k) {
    const double f_over_c = in.nodes.cpu_hz[k] / in.nodes.cycles_per_bit[k];
    obj += (1.0 - sys.alpha) * (f_over_c * primal.t_loc[k] + primal.r_mec[k]);
    frame_use += primal.t_off[k] +
                 primal.r_mec[k] * in.nodes.cycles_per_bit[k] / sys.f_mec_max;
    // local window, battery, and capacity residuals
    value -= dual.mu[k] * (primal.t_loc[k] - sys.T);
    const double e_loc = in.nodes.chip_coeff[k] *
                         std::pow(in.nodes.cpu_hz[k], 3) /
                         in.nodes.cycles_per_bit[k] * primal.t_loc[k];
    value -= dual.lambda[k] * (e_loc + primal.e_off[k] - in.nodes.battery_j[k]);
    const double cap = offload_capacity(in, k, primal.t_off[k], primal.e_off[k]);
    value -= dual.eta[k] * (primal.r_mec[k] - cap);
  }
  value -= dual.zeta * (frame_use - sys.T);
  return value + obj;
}

DualPoint subgradient(const Instance& in, const DualPoint& dual,
                      const PrimalSolution& primal) {
  check_dual_shape(in, dual);
  check_primal_shape(in, primal);
  const auto& sys = in.system;
  const SwitchValues sw = switch_values(in, dual);

  DualPoint g;
  g.mu.resize(in.M);
  g.lambda.resize(in.M);
  g.eta.resize(in.M);
  double frame_use = primal.tau_r;
  for (std::size_t k = 0; k < in.M; ++k) {
    frame_use += primal.t_off[k] +
                 primal.r_mec[k] * in.nodes.cycles_per_bit[k] / sys.f_mec_max;
    g.mu[k] = primal.t_loc[k] - sys.T;
    const double e_loc = in.nodes.chip_coeff[k] *
                         std::pow(in.nodes.cpu_hz[k], 3) /
                         in.nodes.cycles_per_bit[k] * primal.t_loc[k];
    g.lambda[k] = e_loc + primal.e_off[k] - in.nodes.battery_j[k];
    const double x = sw.rho[k] * iot_effective_gain(in, k) / sys.sigma2;
    g.eta[k] = primal.r_mec[k] - primal.t_off[k] * sys.B_w * std::log2(1.0 + x);
  }
  g.zeta = frame_use - sys.T;
  return g;
}

namespace {

// Precomputed per-instance quantities for the exact dual evaluation.
struct DualWorkspace {
  double tlb = 0.0;    // relay duration floor [s]
  double t_win = 0.0;  // T - tlb: room left for offload slots [s]
  double relay_slope = 0.0;  // alpha-weighted relay bits per second of tau_r
  std::vector<double> g_eff;
};

DualWorkspace make_workspace(const Instance& in) {
  DualWorkspace ws;
  ws.tlb = feasible_tau_lb(in);
  ws.t_win = in.system.T - ws.tlb;
  ws.relay_slope = in.system.alpha * relay_rate(in, 1.0);
  ws.g_eff.resize(in.M);
  for (std::size_t k = 0; k < in.M; ++k) ws.g_eff[k] = iot_effective_gain(in, k);
  return ws;
}

DualEvaluation eval_dual_at(const Instance& in, const DualWorkspace& ws,
                            const DualPoint& dual) {
  const auto& sys = in.system;
  DualEvaluation ev;
  PrimalSolution& sol = ev.maximizer;
  sol.t_loc.assign(in.M, 0.0);
  sol.t_off.assign(in.M, 0.0);
  sol.e_off.assign(in.M, 0.0);
  sol.r_mec.assign(in.M, 0.0);
  sol.r_local.assign(in.M, 0.0);

  // relay slot: linear in tau_r over [tlb, T]
  const double c_tau = ws.relay_slope - dual.zeta;
  sol.tau_r = (c_tau > 0.0) ? sys.T : ws.tlb;
  double value = c_tau * sol.tau_r + dual.zeta * sys.T;

  ev.subgrad.mu.resize(in.M);
  ev.subgrad.lambda.resize(in.M);
  ev.subgrad.eta.resize(in.M);
  double frame_use = sol.tau_r;
  for (std::size_t k = 0; k < in.M; ++k) {
    const double C_k = in.nodes.cycles_per_bit[k];
    const double f_k = in.nodes.cpu_hz[k];
    const double w_k = in.nodes.chip_coeff[k];
    const double E_k = in.nodes.battery_j[k];
    value += dual.mu[k] * sys.T + dual.lambda[k] * E_k;

    // local compute window: linear, coefficient -u_k
    const double u_k = dual.mu[k] + dual.lambda[k] * w_k * std::pow(f_k, 3) / C_k -
                       (1.0 - sys.alpha) * f_k / C_k;
    if (u_k < 0.0) sol.t_loc[k] = sys.T;
    value += -u_k * sol.t_loc[k];
    sol.r_local[k] = local_bits(in, k, sol.t_loc[k]);

    // offload block with the offloaded bits held inside [0, capacity]: the
    // bits coefficient folds into an effective capacity weight
    const double eta_hat =
        std::max(dual.eta[k], (1.0 - sys.alpha) - dual.zeta * C_k / sys.f_mec_max);
    const detail::NodeBlockResult blk =
        detail::node_block_max(dual.zeta, dual.lambda[k], eta_hat, sys.B_w,
                               sys.sigma2, ws.g_eff[k], ws.t_win, E_k);
    value += blk.value;
    sol.t_off[k] = blk.t;
    sol.e_off[k] = blk.e;
    if (eta_hat > dual.eta[k]) sol.r_mec[k] = blk.cap;  // bits switch strictly on

    frame_use += sol.t_off[k] + sol.r_mec[k] * C_k / sys.f_mec_max;
    ev.subgrad.mu[k] = sol.t_loc[k] - sys.T;
    ev.subgrad.lambda[k] =
        w_k * std::pow(f_k, 3) / C_k * sol.t_loc[k] + sol.e_off[k] - E_k;
    ev.subgrad.eta[k] = sol.r_mec[k] - blk.cap;
  }
  ev.subgrad.zeta = frame_use - sys.T;
  ev.value = value;

  sol.f_mec = proportional_server_split(in, sol.r_mec);
  sol.r_relay = relay_rate(in, sol.tau_r);
  sol.objective = objective(in, sol);
  return ev;
}

}  // namespace

DualEvaluation evaluate_dual(const Instance& in, const DualPoint& dual) {
  check_dual_shape(in, dual);
  const DualWorkspace ws = make_workspace(in);
  return eval_dual_at(in, ws, dual);
}

DualSolveResult solve_dual(const Instance& in, const DualSolveSettings& settings) {
  in.validate();
  const double C = solver_cycles_per_bit(in);
  const DualWorkspace ws = make_workspace(in);
  const auto& sys = in.system;
  const std::size_t M = in.M;
  const Eigen::Index n = 1 + 3 * static_cast<Eigen::Index>(M);

  // Start from the heuristic interior point: every multiplier at the
  // compute-side utility weight, zeta at the server's bits-per-second value.
  Eigen::VectorXd x0(n);
  const double one_minus_a = 1.0 - sys.alpha;
  x0[0] = one_minus_a * sys.f_mec_max / C;
  for (Eigen::Index i = 1; i < n; ++i) x0[i] = one_minus_a;

  // Radii: ten times a coarse bound on where each optimal multiplier can sit
  // (marginal utility per unit of the priced resource). The 64 factor caps
  // the offload spectral efficiency in bits/s/Hz; the floors keep degenerate
  // blocks (alpha = 1, dead batteries) searchable. Boundary-hit restarts in
  // the engine double whatever turns out too small.
  Eigen::VectorXd radii(n);
  radii[0] = 10.0 * (ws.relay_slope + one_minus_a * (sys.f_mec_max / C + sys.B_w * 64.0));
  for (std::size_t k = 0; k < M; ++k) {
    const double f_k = in.nodes.cpu_hz[k];
    const double E_k = in.nodes.battery_j[k];
    radii[1 + static_cast<Eigen::Index>(k)] =
        10.0 * (one_minus_a * f_k / C + 1.0);
    const double lam_bound =
        (E_k > 0.0)
            ? one_minus_a * sys.B_w * 64.0 * sys.T / (E_k * kLn2)
            : one_minus_a / (in.nodes.chip_coeff[k] * f_k * f_k);
    radii[1 + static_cast<Eigen::Index>(M + k)] = 10.0 * (lam_bound + 1.0);
    radii[1 + static_cast<Eigen::Index>(2 * M + k)] = 10.0 * (one_minus_a + 0.1);
  }

  detail::EllipsoidSettings es;
  es.tolerance = settings.tolerance;
  es.max_iterations =
      (settings.max_iterations > 0)
          ? settings.max_iterations
          : 20 * static_cast<long>(n) * static_cast<long>(n);
  es.keep_trace = settings.keep_trace;
  if (settings.progress) {
    es.on_feasible = [&](const EllipsoidState& st, const Eigen::VectorXd& bx,
                         double bv) {
      return settings.progress(st, detail::unpack_dual(bx, M), bv);
    };
  }

  const auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const DualPoint d = detail::unpack_dual(x, M);
    const DualEvaluation ev = eval_dual_at(in, ws, d);
    grad = -detail::pack_dual(ev.subgrad);  // residuals ascend; we minimize
    return ev.value;
  };

  detail::EllipsoidResult er = detail::ellipsoid_minimize(x0, radii, eval, es);

  DualSolveResult out;
  out.best = detail::unpack_dual(er.best_x, M);
  out.value = er.best_value;
  out.iterations = er.iterations;
  out.converged = er.converged;
  out.trace = std::move(er.trace);
  out.final_state = std::move(er.final_state);
  if (!out.converged && !er.stopped_by_callback && settings.require_convergence) {
    throw MaxIterationsExceeded(out.best, out.value, out.iterations);
  }
  return out;
}

}  // namespace relaymec
