#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "relaymec/types.hpp"

namespace relaymec::oracle {

// =============================================================
// Brute-force certifiers. Exponential in M by design; they exist
// to cross-check the production solver on tiny instances, so they
// share none of its machinery beyond the model formulas.
// =============================================================

// Completes a point (tau_r, t_off, e_off) into a full solution:
//   t_loc,k  = min(T, (E_k - e_off,k) * C_k / (w_k f_k^3))   energy/time capped
//   r_mec    totals min(sum of capacities, window * f_mec_max / C), filled
//            capacity-first in ascending cycles-per-bit order
//   f_mec,k  proportional to r_mec,k * C_k (equalizes remote times)
// Returns nullopt when the offload slots overrun the frame or some
// e_off,k exceeds the battery. tau_r >= tau_r_lower_bound is the
// caller's responsibility; the searchers below enforce it.
std::optional<PrimalSolution> fill_in(const Instance& in, double tau_r,
                                      const std::vector<double>& t_off,
                                      const std::vector<double>& e_off);

// Exhaustive search over tau_r in [tau_r_lb, T], t_off,k in [0, T] and
// energy fractions phi_k in [0, 1] (e_off,k = phi_k * E_k) on a regular
// grid, with the analytic fill-in above for the remaining variables.
// grid_points_per_axis <= 0 picks the default: 480 for M = 1, 25 for M = 2.
// Throws std::invalid_argument for M > 2 and InfeasibleInstance when the
// relay constraint cannot be met within the frame.
PrimalSolution grid_solve(const Instance& in, int grid_points_per_axis = 0);

// Projected coordinate ascent over (tau_r, t_off, e_off) from seeded
// starts, sharing fill_in. Each coordinate slice is concave, so a ternary
// search nails it; pairwise budget transfers (t_i <-> t_j, tau_r <-> t_k)
// un-jam points where single-coordinate moves stall on the time budget.
// Handles M <= 4 (std::invalid_argument beyond), InfeasibleInstance as above.
// If ascent_trace is given, the best objective after every sweep of every
// start is appended (nondecreasing within a start).
PrimalSolution multistart_solve(const Instance& in, int starts = 24,
                                int local_steps = 60,
                                std::uint64_t seed = 1234,
                                std::vector<double>* ascent_trace = nullptr);

}  // namespace relaymec::oracle
