#pragma once

#include <Eigen/Dense>
#include <vector>

#include "relaymec/errors.hpp"

namespace relaymec::lp {

// Dense linear program:
//   maximize    c . x
//   subject to  A_ub x <= b_ub
//               A_eq x  = b_eq
//               lower <= x <= upper   (upper entries may be +inf)
// Empty (0x0) matrices mean "no rows of that kind".
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// n variables, no rows, bounds [0, +inf).
LinearProgram make_lp(int n);

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  Eigen::VectorXd x;
  double value = 0;
  LpStatus status = LpStatus::infeasible;
  // Basic-variable ids in the final tableau: j < n are structural variables,
  // n + i is the slack of internal row i (inequality rows first, then the
  // rows synthesized from finite upper bounds, then equalities).
  std::vector<int> basis;
};

// Two-phase primal simplex with Bland's entering rule; ratio-test ties break
// toward the smallest basic-variable id. Rows are equilibrated by their
// max-abs coefficient before phase 1. Throws DimensionMismatch on
// inconsistent shapes; infeasible/unbounded are reported via status.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace relaymec::lp
