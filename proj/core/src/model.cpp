#include "relaymec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace relaymec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log2_1p(double x) { return std::log1p(x) / std::numbers::ln2; }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// types

void Instance::validate() const {
  require(M >= 1, "instance: M must be >= 1");
  require(geometry.d_iot.size() == M, "geometry.d_iot: length != M");
  require(nodes.cycles_per_bit.size() == M, "nodes.cycles_per_bit: length != M");
  require(nodes.cpu_hz.size() == M, "nodes.cpu_hz: length != M");
  require(nodes.chip_coeff.size() == M, "nodes.chip_coeff: length != M");
  require(nodes.battery_j.size() == M, "nodes.battery_j: length != M");
  require(channels.g_iot.size() == M, "channels.g_iot: length != M");

  require(system.T > 0, "system.T must be positive");
  require(system.B_w > 0, "system.B_w must be positive");
  require(system.sigma2 > 0, "system.sigma2 must be positive");
  require(system.P_PT > 0, "system.P_PT must be positive");
  require(system.P_AP > 0, "system.P_AP must be positive");
  require(system.f_mec_max > 0, "system.f_mec_max must be positive");
  require(system.alpha >= 0 && system.alpha <= 1, "system.alpha must lie in [0,1]");
  require(system.eta1 >= 1 && system.eta2 >= 1 && system.eta3 >= 1 &&
              system.eta4 >= 1,
          "path-loss exponents must be >= 1");

  require(geometry.d_pt_pr > 0 && geometry.d_pt_ap > 0 && geometry.d_ap_pr > 0,
          "link distances must be positive");
  require(channels.g_pt_pr >= 0 && channels.g_pt_ap >= 0 && channels.g_ap_pr >= 0,
          "channel gains must be nonnegative");
  for (std::size_t k = 0; k < M; ++k) {
    require(geometry.d_iot[k] > 0, "d_iot must be positive");
    require(nodes.cycles_per_bit[k] > 0, "cycles_per_bit must be positive");
    require(nodes.cpu_hz[k] > 0, "cpu_hz must be positive");
    require(nodes.chip_coeff[k] > 0, "chip_coeff must be positive");
    require(nodes.battery_j[k] >= 0, "battery_j must be nonnegative");
    require(channels.g_iot[k] >= 0, "g_iot must be nonnegative");
  }
}

Instance InstanceTemplate::make(const ChannelGains& gains) const {
  Instance inst;
  inst.system = system;
  inst.M = M;
  inst.geometry.d_pt_pr = d_pt_pr;
  inst.geometry.d_pt_ap = d_pt_ap;
  inst.geometry.d_ap_pr = d_ap_pr > 0 ? d_ap_pr : d_pt_pr - d_pt_ap;
  inst.geometry.d_iot.assign(M, d_iot);
  inst.nodes.cycles_per_bit.assign(M, cycles_per_bit);
  inst.nodes.cpu_hz.assign(M, cpu_hz);
  inst.nodes.chip_coeff.assign(M, chip_coeff);
  inst.nodes.battery_j.assign(M, battery_j);
  inst.channels = gains;
  inst.validate();
  return inst;
}

SystemParams default_system() {
  SystemParams p;
  p.T = 0.1;
  p.B_w = 1.4e6;
  p.sigma2 = dbm_to_watt(-132.24);
  p.P_PT = dbm_to_watt(43.0);
  p.P_AP = dbm_to_watt(30.0);
  p.f_mec_max = 1e12;
  p.alpha = 0.5;
  p.eta1 = p.eta2 = p.eta3 = 4.0;
  p.eta4 = 2.0;
  return p;
}

InstanceTemplate default_template() {
  InstanceTemplate t;
  t.system = default_system();
  return t;
}

// ---------------------------------------------------------------------------
// link budget

double link_snr(double power, double gain, double distance, double exponent,
                double sigma2) {
  return power * gain * std::pow(distance, -exponent) / sigma2;
}

double gamma_pt_pr(const Instance& in) {
  return link_snr(in.system.P_PT, in.channels.g_pt_pr, in.geometry.d_pt_pr,
                  in.system.eta1, in.system.sigma2);
}

double gamma_pt_ap(const Instance& in) {
  return link_snr(in.system.P_PT, in.channels.g_pt_ap, in.geometry.d_pt_ap,
                  in.system.eta2, in.system.sigma2);
}

double gamma_ap_pr(const Instance& in) {
  return link_snr(in.system.P_AP, in.channels.g_ap_pr, in.geometry.d_ap_pr,
                  in.system.eta3, in.system.sigma2);
}

double relay_bottleneck_snr(const Instance& in) {
  return std::min(gamma_pt_ap(in), gamma_pt_pr(in) + gamma_ap_pr(in));
}

double iot_effective_gain(const Instance& in, std::size_t k) {
  return in.channels.g_iot[k] *
         std::pow(in.geometry.d_iot[k], -in.system.eta4);
}

// ---------------------------------------------------------------------------
// rates

double relay_rate(const Instance& in, double tau_r) {
  return tau_r * in.system.B_w / 2.0 * log2_1p(relay_bottleneck_snr(in));
}

double direct_rate(const Instance& in) {
  return in.system.T * in.system.B_w * log2_1p(gamma_pt_pr(in));
}

double local_bits(const Instance& in, std::size_t k, double t_loc) {
  return t_loc * in.nodes.cpu_hz[k] / in.nodes.cycles_per_bit[k];
}

double offload_capacity(const Instance& in, std::size_t k, double t_off,
                        double e_off) {
  if (t_off <= 0 || e_off <= 0) return 0.0;
  const double gt = iot_effective_gain(in, k);
  if (gt <= 0) return 0.0;
  return t_off * in.system.B_w * log2_1p(e_off * gt / (t_off * in.system.sigma2));
}

double objective(const Instance& in, const PrimalSolution& sol) {
  double comp = 0;
  for (std::size_t k = 0; k < in.M; ++k) comp += sol.r_local[k] + sol.r_mec[k];
  const double a = in.system.alpha;
  return a * sol.r_relay + (1.0 - a) * comp;
}

double tau_r_lower_bound(const Instance& in) {
  const double bottleneck = relay_bottleneck_snr(in);
  if (bottleneck <= 0) throw RelayPathDegenerate();
  const double num = std::log1p(gamma_pt_pr(in));
  if (num == 0) return 0.0;
  return 2.0 * in.system.T * num / std::log1p(bottleneck);
}

// ---------------------------------------------------------------------------
// constraint audit

namespace {

ConstraintCheck make_check(std::string id, double slack, double rhs, double tol) {
  ConstraintCheck c;
  c.id = std::move(id);
  c.slack = slack;
  c.scale = rhs != 0 ? std::abs(rhs) : 1.0;
  c.violated = !(slack >= -tol * c.scale);  // NaN counts as violated
  return c;
}

}  // namespace

std::vector<ConstraintCheck> check_constraints(const Instance& in,
                                               const PrimalSolution& sol,
                                               double tol) {
  const std::size_t M = in.M;
  const double T = in.system.T;
  std::vector<ConstraintCheck> out;
  out.reserve(3 * M + 4);

  double t_off_sum = 0;
  for (std::size_t k = 0; k < M; ++k) t_off_sum += sol.t_off[k];

  // offloaded bits cannot exceed the uplink capacity
  for (std::size_t k = 0; k < M; ++k) {
    const double cap = offload_capacity(in, k, sol.t_off[k], sol.e_off[k]);
    out.push_back(
        make_check("offload_capacity[" + std::to_string(k) + "]",
                   cap - sol.r_mec[k], cap, tol));
  }

  // relaying must leave the primary pair no worse than the direct link
  {
    const double direct = direct_rate(in);
    out.push_back(make_check("primary_rate", relay_rate(in, sol.tau_r) - direct,
                             direct, tol));
  }

  // local compute fits the frame
  for (std::size_t k = 0; k < M; ++k) {
    out.push_back(make_check("local_time[" + std::to_string(k) + "]",
                             T - sol.t_loc[k], T, tol));
  }

  // remote compute finishes inside the frame after relaying and offloading
  for (std::size_t k = 0; k < M; ++k) {
    double remote = 0;
    if (sol.r_mec[k] > 0) {
      remote = sol.f_mec[k] > 0
                   ? sol.r_mec[k] * in.nodes.cycles_per_bit[k] / sol.f_mec[k]
                   : kInf;
    }
    out.push_back(make_check("server_time[" + std::to_string(k) + "]",
                             T - sol.tau_r - t_off_sum - remote, T, tol));
  }

  // per-node energy budget
  for (std::size_t k = 0; k < M; ++k) {
    const double spent = in.nodes.chip_coeff[k] * sol.t_loc[k] *
                             std::pow(in.nodes.cpu_hz[k], 3) /
                             in.nodes.cycles_per_bit[k] +
                         sol.e_off[k];
    out.push_back(make_check("energy[" + std::to_string(k) + "]",
                             in.nodes.battery_j[k] - spent,
                             in.nodes.battery_j[k], tol));
  }

  // server CPU split
  {
    double f_sum = 0;
    for (std::size_t k = 0; k < M; ++k) f_sum += sol.f_mec[k];
    out.push_back(make_check("server_cpu", in.system.f_mec_max - f_sum,
                             in.system.f_mec_max, tol));
  }

  // everything nonnegative
  {
    double worst = sol.tau_r;
    for (std::size_t k = 0; k < M; ++k) {
      worst = std::min({worst, sol.t_loc[k], sol.t_off[k], sol.e_off[k],
                        sol.r_mec[k], sol.f_mec[k]});
    }
    out.push_back(make_check("nonneg", worst, 0.0, tol));
  }

  return out;
}

bool all_satisfied(const std::vector<ConstraintCheck>& checks) {
  return std::none_of(checks.begin(), checks.end(),
                      [](const ConstraintCheck& c) { return c.violated; });
}

std::vector<ConstraintCheck> violations(const std::vector<ConstraintCheck>& checks) {
  std::vector<ConstraintCheck> bad;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(bad),
               [](const ConstraintCheck& c) { return c.violated; });
  return bad;
}

double solver_cycles_per_bit(const Instance& in) {
  const double C = in.nodes.cycles_per_bit.at(0);
  for (double c : in.nodes.cycles_per_bit) {
    if (c != C) {
      throw std::invalid_argument(
          "solver path requires identical cycles_per_bit across nodes");
    }
  }
  return C;
}

}  // namespace relaymec
