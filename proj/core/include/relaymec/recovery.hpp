#pragma once

#include <string>
#include <vector>

#include "relaymec/dual.hpp"
#include "relaymec/lp.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// =============================================================
// Primal recovery: the duration/bits linear program at a fixed
// per-node power density, processor allocation, and the
// end-to-end solve that ties the pipeline together.
// =============================================================

enum class Feasibility { feasible, infeasible };

struct SolveSettings {
  double tolerance = 1e-3;       // target relative duality gap
  double dual_tolerance = 1e-6;  // ellipsoid certificate tolerance
  long max_iterations = 0;       // dual iteration budget; 0 -> solver default
  long check_every = 0;          // gap-check cadence in iterations; 0 -> max(100, dim)
  bool keep_trace = false;
};

struct SolveReport {
  std::string method = "optimal";  // "optimal" | "equal"
  Feasibility feasibility = Feasibility::feasible;
  double tau_r_lb = 0.0;    // relay duration floor [s]; +inf when degenerate
  double direct_rate = 0.0; // unassisted primary bits over the frame
  PrimalSolution solution;
  DualPoint dual;
  double dual_value = 0.0;   // certified upper bound [bits]
  double primal_value = 0.0; // objective of the recovered solution [bits]
  double gap = 0.0;          // (dual_value - primal_value)/max(1, |dual_value|)
  long iterations = 0;
  std::vector<DualTraceRow> trace;  // populated when keep_trace is set
};

// Durations-and-bits LP at fixed power densities: variables
// (tau_r; t_loc_1..M; t_off_1..M; r_mec_1..M), offload energy substituted as
// rho_star_k * t_off_k. The frame-sharing row is an equality: leftover time
// parks in tau_r, which never hurts the objective. Throws InfeasibleInstance
// when the relay floor exceeds the frame, std::invalid_argument on negative
// densities, DimensionMismatch on a wrong-size rho_star.
lp::LinearProgram build_p3(const Instance& in, const std::vector<double>& rho_star);

// Server CPU proportional to offloaded bits; equalizes per-node remote
// compute times. All zeros when nothing is offloaded.
std::vector<double> allocate_processors(const std::vector<double>& r_mec,
                                        double f_mec_max);

// Full pipeline: feasibility gate, dual descent with periodic primal
// recovery (stops once the duality gap closes below settings.tolerance),
// density extraction from the best multipliers, the LP above, processor
// allocation, and a constraint audit of the result. Throws
// InfeasibleInstance when the relay cannot fit the frame and
// MaxIterationsExceeded when the budget runs out with the gap still open.
SolveReport solve_instance(const Instance& in, const SolveSettings& settings = {});

}  // namespace relaymec
