#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "relaymec/errors.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// =============================================================
// Dual machinery: multipliers, closed-form switching rules,
// Lagrangian evaluation, and ellipsoid-based dual descent.
// =============================================================

// Multipliers for the relaxed coupling constraints. zeta prices the shared
// frame (relay + offload slots + server time); per node, mu prices the local
// compute window, lambda the battery, eta the offloaded-bits capacity link.
struct DualPoint {
  double zeta = 0.0;
  std::vector<double> mu;      // one per node
  std::vector<double> lambda;  // one per node
  std::vector<double> eta;     // one per node
};

// Closed-form switching quantities at a dual point. rho_k is the offload
// power density (J/s) from the energy first-order condition; the s/u/v
// values are the bang-bang coefficients for the offload slot, local compute
// window, offloaded bits, and relay slot respectively.
struct SwitchValues {
  std::vector<double> rho;    // >= 0, clamped
  std::vector<double> s_off;  // offload-slot switch
  std::vector<double> u;      // local-compute switch
  std::vector<double> v;      // offloaded-bits switch
  double s_relay = 0.0;       // relay-slot switch
};

SwitchValues switch_values(const Instance& in, const DualPoint& dual);

// Bang-bang primal candidate read off the switching signs. Ties (a switch
// exactly zero) take the lower endpoint and raise the flag; the recovery LP
// redistributes whatever the tie left on the table.
struct PrimalCandidate {
  PrimalSolution solution;
  SwitchValues switches;
  bool tied = false;
};

PrimalCandidate primal_from_dual(const Instance& in, const DualPoint& dual);

// The relaxation value: objective minus multiplier-weighted constraint
// residuals, evaluated exactly as written (no feasibility assumed).
double lagrangian_value(const Instance& in, const DualPoint& dual,
                        const PrimalSolution& primal);

// Constraint residuals at a primal point, in dual-vector order (zeta; mu_1..;
// lambda_1..; eta_1..). These are ascent directions of the concave inner
// problem; the minimizing solver cuts along their negation. The eta component
// follows the candidate's ray form: R_MEC,k - t_off,k B_w log2(1 + rho_k
// g_eff/sigma^2), with rho from switch_values, and expects a primal produced
// by primal_from_dual at the same dual point.
DualPoint subgradient(const Instance& in, const DualPoint& dual,
                      const PrimalSolution& primal);

// Exact evaluation of the dual function: the inner maximum is taken over the
// true box domain (offload bits in [0, capacity] held hard), which keeps
// every value a certified upper bound on the primal optimum. The maximizer
// is generally infeasible for the original problem; subgrad holds the
// residuals at it (same sign convention as subgradient()).
struct DualEvaluation {
  double value = 0.0;
  DualPoint subgrad;
  PrimalSolution maximizer;
};

DualEvaluation evaluate_dual(const Instance& in, const DualPoint& dual);

// Ellipsoid iterate snapshot. shape is symmetric positive definite;
// log_volume tracks 0.5 * log det(shape) and must fall every iteration.
struct EllipsoidState {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  long iteration = 0;
  double best_dual_value = 0.0;
  double log_volume = 0.0;
};

struct DualTraceRow {
  long iteration = 0;
  double best_value = 0.0;  // best dual value seen so far (nonincreasing)
  double log_volume = 0.0;
};

struct DualSolveSettings {
  double tolerance = 1e-6;  // relative, on the dual-value uncertainty bound
  long max_iterations = 0;  // 0 -> 20 * (1 + 3M)^2
  bool keep_trace = false;
  bool require_convergence = false;
  // Called at every feasible center evaluation; return true to stop early
  // (the caller owns the stopping rule, e.g. a primal-dual gap check).
  std::function<bool(const EllipsoidState&, const DualPoint& best,
                     double best_value)>
      progress;
};

struct DualSolveResult {
  DualPoint best;
  double value = 0.0;  // dual value at best (upper bound on the optimum)
  long iterations = 0;
  bool converged = false;
  std::vector<DualTraceRow> trace;
  EllipsoidState final_state;
};

// Thrown by solve_dual only when settings.require_convergence is set and the
// iteration budget runs out; carries the best point found.
class MaxIterationsExceeded : public SolverError {
 public:
  MaxIterationsExceeded(DualPoint best_point, double best_value, long iterations)
      : SolverError("dual solve exhausted its iteration budget before converging"),
        best(std::move(best_point)),
        value(best_value),
        iterations(iterations) {}
  DualPoint best;
  double value;
  long iterations;
};

// Minimizes the dual upper bound over the nonnegative orthant by the central
// cut ellipsoid method: feasibility cuts for negative multipliers, objective
// cuts from the exact evaluator otherwise. Initial shape is diagonal with
// per-block radii matched to each multiplier's natural scale; radii double
// and the solve restarts (up to 3 times) if the best point presses the
// boundary. Throws InfeasibleInstance when the relay constraint cannot fit
// the frame.
DualSolveResult solve_dual(const Instance& in, const DualSolveSettings& settings = {});

}  // namespace relaymec
