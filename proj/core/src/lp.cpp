#include "relaymec/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relaymec::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-9;

struct Tableau {
  Eigen::MatrixXd A;         // m x nc, basic columns kept as unit vectors
  Eigen::VectorXd b;         // m, nonnegative throughout
  Eigen::RowVectorXd r;      // reduced costs, length nc
  std::vector<int> basis;    // m basic column ids
  int n_art_start = 0;       // first artificial column id

  void pivot(int row, int col) {
    const double p = A(row, col);
    A.row(row) /= p;
    b(row) /= p;
    for (int i = 0; i < A.rows(); ++i) {
      if (i == row) continue;
      const double f = A(i, col);
      if (f != 0.0) {
        A.row(i) -= f * A.row(row);
        b(i) -= f * b(row);
        if (b(i) < 0 && b(i) > -1e-13) b(i) = 0;  // shave rounding dust
      }
    }
    const double fr = r(col);
    if (fr != 0.0) r -= fr * A.row(row);
    basis[row] = col;
  }
};

// Bland: entering = smallest column id with improving reduced cost.
// allow(col) filters columns that may enter.
template <typename Allow>
int entering_column(const Tableau& t, Allow allow) {
  for (int j = 0; j < t.r.size(); ++j) {
    if (allow(j) && t.r(j) > kCostTol) return j;
  }
  return -1;
}

// Min-ratio row; ties resolved toward the smallest basic-variable id.
int leaving_row(const Tableau& t, int col) {
  int best = -1;
  double best_ratio = kInf;
  for (int i = 0; i < t.A.rows(); ++i) {
    const double a = t.A(i, col);
    if (a <= kPivotTol) continue;
    const double ratio = std::max(t.b(i), 0.0) / a;
    if (best < 0 || ratio < best_ratio ||
        (ratio == best_ratio && t.basis[i] < t.basis[best])) {
      best_ratio = ratio;
      best = i;
    }
  }
  return best;
}

// Runs simplex until no entering column remains. Returns false on unbounded.
template <typename Allow>
bool run_simplex(Tableau& t, Allow allow) {
  const long cap = 200000;
  for (long it = 0; it < cap; ++it) {
    const int col = entering_column(t, allow);
    if (col < 0) return true;
    const int row = leaving_row(t, col);
    if (row < 0) return false;  // unbounded direction
    t.pivot(row, col);
  }
  throw SolverError("simplex failed to terminate within the iteration cap");
}

}  // namespace

LinearProgram make_lp(int n) {
  LinearProgram p;
  p.c = Eigen::VectorXd::Zero(n);
  p.lower = Eigen::VectorXd::Zero(n);
  p.upper = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

LpSolution solve_lp(const LinearProgram& in) {
  const int n = static_cast<int>(in.c.size());
  if (n < 1) throw DimensionMismatch("lp: objective has no variables");

  const int m_ub = static_cast<int>(in.b_ub.size());
  const int m_eq = static_cast<int>(in.b_eq.size());
  if (m_ub > 0 && (in.A_ub.rows() != m_ub || in.A_ub.cols() != n))
    throw DimensionMismatch("lp: A_ub shape disagrees with b_ub/c");
  if (m_ub == 0 && in.A_ub.size() != 0)
    throw DimensionMismatch("lp: A_ub rows without b_ub");
  if (m_eq > 0 && (in.A_eq.rows() != m_eq || in.A_eq.cols() != n))
    throw DimensionMismatch("lp: A_eq shape disagrees with b_eq/c");
  if (m_eq == 0 && in.A_eq.size() != 0)
    throw DimensionMismatch("lp: A_eq rows without b_eq");
  if (in.lower.size() != n || in.upper.size() != n)
    throw DimensionMismatch("lp: bounds length disagrees with c");

  LpSolution sol;
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(in.lower(j)))
      throw DimensionMismatch("lp: lower bounds must be finite");
    if (in.upper(j) < in.lower(j)) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
  }

  // Shift to y = x - lower >= 0 and turn finite upper bounds into rows.
  std::vector<int> ub_var;
  for (int j = 0; j < n; ++j)
    if (std::isfinite(in.upper(j))) ub_var.push_back(j);
  const int m = m_ub + static_cast<int>(ub_var.size()) + m_eq;

  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  std::vector<bool> is_eq(m, false);
  for (int i = 0; i < m_ub; ++i) {
    rows.row(i) = in.A_ub.row(i);
    rhs(i) = in.b_ub(i) - in.A_ub.row(i).dot(in.lower);
  }
  for (int t = 0; t < static_cast<int>(ub_var.size()); ++t) {
    const int i = m_ub + t;
    rows(i, ub_var[t]) = 1.0;
    rhs(i) = in.upper(ub_var[t]) - in.lower(ub_var[t]);
  }
  for (int i = 0; i < m_eq; ++i) {
    const int r = m_ub + static_cast<int>(ub_var.size()) + i;
    rows.row(r) = in.A_eq.row(i);
    rhs(r) = in.b_eq(i) - in.A_eq.row(i).dot(in.lower);
    is_eq[r] = true;
  }

  // Row equilibration, then sign-normalize so rhs >= 0.
  std::vector<double> row_sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    const double s = rows.row(i).cwiseAbs().maxCoeff();
    if (s > 0) {
      rows.row(i) /= s;
      rhs(i) /= s;
    }
    if (rhs(i) < 0) {
      rows.row(i) = -rows.row(i);
      rhs(i) = -rhs(i);
      row_sign[i] = -1.0;
    }
  }

  // Columns: structural | one slack per row | artificials where needed.
  // A slack is usable as a starting basic variable only for a non-negated
  // inequality row; negated inequalities carry a surplus (-1) instead.
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i)
    if (is_eq[i] || row_sign[i] < 0) art_rows.push_back(i);
  const int n_art = static_cast<int>(art_rows.size());
  const int nc = n + m + n_art;

  Tableau t;
  t.A = Eigen::MatrixXd::Zero(m, nc);
  t.A.leftCols(n) = rows;
  for (int i = 0; i < m; ++i)
    if (!is_eq[i]) t.A(i, n + i) = row_sign[i];
  for (int a = 0; a < n_art; ++a) t.A(art_rows[a], n + m + a) = 1.0;
  t.b = rhs;
  t.basis.assign(m, -1);
  t.n_art_start = n + m;

  for (int a = 0; a < n_art; ++a) t.basis[art_rows[a]] = n + m + a;
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < 0) t.basis[i] = n + i;

  // Phase 1: maximize -sum(artificials).
  if (n_art > 0) {
    t.r = Eigen::RowVectorXd::Zero(nc);
    for (int a = 0; a < n_art; ++a) t.r(n + m + a) = -1.0;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= t.n_art_start) t.r += t.A.row(i);
    }
    run_simplex(t, [](int) { return true; });  // bounded by construction
    double infeas = 0;
    for (int i = 0; i < m; ++i)
      if (t.basis[i] >= t.n_art_start) infeas += t.b(i);
    if (infeas > 1e-8 * (1.0 + rhs.lpNorm<1>())) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Drive leftover artificials out; zero truly redundant rows.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < t.n_art_start) continue;
      int piv = -1;
      for (int j = 0; j < t.n_art_start; ++j) {
        if (std::abs(t.A(i, j)) > kPivotTol) {
          piv = j;
          break;
        }
      }
      if (piv >= 0) {
        t.pivot(i, piv);
      } else {
        t.A.row(i).setZero();
        t.b(i) = 0;
      }
    }
  }

  // Phase 2: the real objective over non-artificial columns.
  t.r = Eigen::RowVectorXd::Zero(nc);
  t.r.head(n) = in.c.transpose();
  for (int i = 0; i < m; ++i) {
    const int j = t.basis[i];
    if (j < n && in.c(j) != 0.0) t.r -= in.c(j) * t.A.row(i);
  }
  const int art_start = t.n_art_start;
  const bool bounded =
      run_simplex(t, [art_start](int j) { return j < art_start; });
  if (!bounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < n) y(t.basis[i]) = std::max(0.0, t.b(i));
  }
  sol.x = y + in.lower;
  for (int j = 0; j < n; ++j) sol.x(j) = std::min(sol.x(j), in.upper(j));
  sol.value = in.c.dot(sol.x);
  sol.status = LpStatus::optimal;
  sol.basis = t.basis;
  return sol;
}

}  // namespace relaymec::lp
