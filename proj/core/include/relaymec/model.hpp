#pragma once

#include <string>
#include <vector>

#include "relaymec/errors.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// ---------------------------------------------------------------------------
// link budget

// gamma = power * gain * distance^(-exponent) / sigma2
double link_snr(double power, double gain, double distance, double exponent,
                double sigma2);

double gamma_pt_pr(const Instance&);
double gamma_pt_ap(const Instance&);
double gamma_ap_pr(const Instance&);

// min(gamma_pt_ap, gamma_pt_pr + gamma_ap_pr): decode-and-forward bottleneck.
double relay_bottleneck_snr(const Instance&);

// g_k * d_k^(-eta4): uplink gain with path loss folded in.
double iot_effective_gain(const Instance&, std::size_t k);

// ---------------------------------------------------------------------------
// rates

// Primary bits delivered via the relay in a phase of length tau_r.
// Linear and nondecreasing in tau_r.
double relay_rate(const Instance&, double tau_r);

// Primary bits over the frame without relay assistance.
double direct_rate(const Instance&);

// Bits node k computes locally in t_loc seconds.
double local_bits(const Instance&, std::size_t k, double t_loc);

// Upper bound on bits node k can push to the AP with t_off seconds and e_off
// joules. Perspective form: 0 at t_off = 0; jointly concave in (t_off, e_off).
double offload_capacity(const Instance&, std::size_t k, double t_off,
                        double e_off);

// alpha * r_relay + (1 - alpha) * sum_k (r_local + r_mec)
double objective(const Instance&, const PrimalSolution&);

// Smallest relay duration that keeps the primary link at least as good as the
// unassisted one. Throws RelayPathDegenerate when the bottleneck SNR is zero.
// The instance is infeasible when the result exceeds T.
double tau_r_lower_bound(const Instance&);

// ---------------------------------------------------------------------------
// constraint audit

struct ConstraintCheck {
  std::string id;  // e.g. "energy[3]"
  double slack;    // >= 0 when satisfied, in the constraint's native units
  double scale;    // normalizer: right-hand magnitude, or 1 when that is zero
  bool violated;   // slack < -tol * scale
};

// Evaluates every constraint of the joint problem for the given solution.
// Ids: offload_capacity[k], primary_rate, local_time[k], server_time[k],
// energy[k], server_cpu, nonneg.
std::vector<ConstraintCheck> check_constraints(const Instance&,
                                               const PrimalSolution&,
                                               double tol);

bool all_satisfied(const std::vector<ConstraintCheck>&);
std::vector<ConstraintCheck> violations(const std::vector<ConstraintCheck>&);

// Common cycles-per-bit used by the solver path; throws std::invalid_argument
// when nodes disagree (rate evaluation above has no such restriction).
double solver_cycles_per_bit(const Instance&);

}  // namespace relaymec
