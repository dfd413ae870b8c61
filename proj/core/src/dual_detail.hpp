#pragma once

// Internal helpers for the dual solver. Not installed.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "relaymec/dual.hpp"
#include "relaymec/model.hpp"

namespace relaymec::detail {

inline constexpr double kLambdaClamp = 1e-12;

// ---------------------------------------------------------------------------
// dual vector packing: order is (zeta; mu_1..M; lambda_1..M; eta_1..M)

inline Eigen::VectorXd pack_dual(const DualPoint& d) {
  const std::size_t m = d.mu.size();
  Eigen::VectorXd x(1 + 3 * static_cast<Eigen::Index>(m));
  x[0] = d.zeta;
  for (std::size_t k = 0; k < m; ++k) {
    x[1 + static_cast<Eigen::Index>(k)] = d.mu[k];
    x[1 + static_cast<Eigen::Index>(m + k)] = d.lambda[k];
    x[1 + static_cast<Eigen::Index>(2 * m + k)] = d.eta[k];
  }
  return x;
}

inline DualPoint unpack_dual(const Eigen::VectorXd& x, std::size_t m) {
  DualPoint d;
  d.zeta = x[0];
  d.mu.resize(m);
  d.lambda.resize(m);
  d.eta.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    d.mu[k] = x[1 + static_cast<Eigen::Index>(k)];
    d.lambda[k] = x[1 + static_cast<Eigen::Index>(m + k)];
    d.eta[k] = x[1 + static_cast<Eigen::Index>(2 * m + k)];
  }
  return d;
}

// ---------------------------------------------------------------------------
// exact per-node (t_off, e_off) block
//
// Maximizes  G(t, e) = -time_price * t - lambda * e + weight * cap(t, e)
// over [0, t_max] x [0, e_max], where cap(t, e) = t B log2(1 + e g / (t s2)).
// For fixed t the optimal energy is min(rho_hat * t, e_max) with rho_hat from
// the energy first-order condition; along that path G is concave in t (linear
// on the ray, concave on the battery-capped branch, C^1 at the junction), so
// the maximum sits at an endpoint, the kink, or the single interior root of
// the capped-branch derivative.

struct NodeBlockResult {
  double value = 0.0;
  double t = 0.0;
  double e = 0.0;
  double cap = 0.0;  // cap(t, e) at the maximizer
};

// h(x) = ln(1+x) - x/(1+x): the (scaled) d/dt of cap on the capped branch.
inline double capped_slope_h(double x) {
  return std::log1p(x) - x / (1.0 + x);
}

inline NodeBlockResult node_block_max(double time_price, double lambda,
                                      double weight, double B_w, double sigma2,
                                      double g_eff, double t_max, double e_max) {
  NodeBlockResult best;  // (0, 0) is always admissible, value 0
  if (t_max <= 0.0) return best;
  const double wB = weight * B_w;
  if (!(wB > 0.0) || !(g_eff > 0.0)) return best;  // capacity term dead

  const double lam_c = std::max(lambda, kLambdaClamp);
  const double kLn2 = std::log(2.0);
  const double rho_hat = std::max(0.0, wB / (lam_c * kLn2) - sigma2 / g_eff);

  const auto eval = [&](double t, double e) {
    if (t <= 0.0) return 0.0;
    const double c = t * B_w * std::log2(1.0 + e * g_eff / (t * sigma2));
    return -time_price * t - lambda * e + weight * c;
  };
  const auto consider = [&](double t, double e) {
    const double v = eval(t, e);
    if (v > best.value) best = {v, t, e, 0.0};
  };

  if (rho_hat > 0.0 && e_max > 0.0) {
    const double t_kink = e_max / rho_hat;
    const double ray_slope = -time_price - lambda * rho_hat +
                             wB * std::log2(1.0 + rho_hat * g_eff / sigma2);
    if (t_kink >= t_max) {
      // battery never binds inside the box: ray only
      if (ray_slope > 0.0) consider(t_max, rho_hat * t_max);
    } else {
      if (ray_slope > 0.0) consider(t_kink, e_max);
      // capped branch on [t_kink, t_max], e = e_max:
      // dG/dt = -time_price + (wB/ln2) h(x), x = e_max g / (t s2), h increasing
      // in x hence dG/dt decreasing in t.
      const double K = e_max * g_eff / sigma2;  // x = K / t
      const double target = time_price * kLn2 / wB;
      const double slope_hi = capped_slope_h(K / t_max) - target;  // at t_max
      const double slope_lo = capped_slope_h(K / t_kink) - target;  // at t_kink
      if (slope_hi >= 0.0) {
        consider(t_max, e_max);
      } else if (slope_lo <= 0.0) {
        consider(t_kink, e_max);
      } else {
        // bracketed root of h(K/t) = target; Newton on u = ln x with bisection
        // safeguard (h' (x) = x/(1+x)^2, d h(e^u)/du = x^2/(1+x)^2)
        double ulo = std::log(K / t_max);   // h - target < 0 here
        double uhi = std::log(K / t_kink);  // h - target > 0 here
        double u = 0.5 * (ulo + uhi);
        for (int it = 0; it < 80; ++it) {
          const double x = std::exp(u);
          const double f = capped_slope_h(x) - target;
          if (f > 0.0) uhi = u; else ulo = u;
          const double xo = x / (1.0 + x);
          const double df = xo * xo;
          double un = (df > 0.0) ? u - f / df : u;
          if (!(un > ulo && un < uhi)) un = 0.5 * (ulo + uhi);
          if (std::abs(un - u) < 1e-15 * std::max(1.0, std::abs(u))) { u = un; break; }
          u = un;
        }
        consider(K / std::exp(u), e_max);
      }
    }
  }
  // rho_hat == 0 or e_max == 0: optimal energy is 0, cap = 0, G = -tp * t,
  // so (0,0) already covers it.

  if (best.t > 0.0) {
    best.cap = best.t * B_w * std::log2(1.0 + best.e * g_eff / (best.t * sigma2));
  }
  return best;
}

// ---------------------------------------------------------------------------
// central-cut ellipsoid over the nonnegative orthant

struct EllipsoidSettings {
  double tolerance = 1e-6;
  long max_iterations = 1000;  // cumulative across restarts
  int max_restarts = 3;
  bool keep_trace = false;
  // Called after each feasible-center evaluation; return true to stop.
  std::function<bool(const EllipsoidState&, const Eigen::VectorXd& best_x,
                     double best_value)>
      on_feasible;
};

struct EllipsoidResult {
  Eigen::VectorXd best_x;
  double best_value = 0.0;
  long iterations = 0;
  bool converged = false;
  bool stopped_by_callback = false;
  std::vector<DualTraceRow> trace;
  EllipsoidState final_state;
};

// Minimizes a convex function over {x >= 0}. eval(x, g) returns the value and
// fills g with a subgradient; it is called only at nonnegative centers.
// Feasibility cuts drop the half-space behind the most violated coordinate
// (scaled by its initial radius). The shape starts as diag(radii^2); if the
// best point lands within 10% of the initial radius of the boundary, the
// offending radii double and the search restarts, keeping the incumbent.
// Trace: one row per completed cut, so log_volume falls strictly row to row
// within an attempt (it jumps back up when a restart re-inflates the shape).
inline EllipsoidResult ellipsoid_minimize(
    const Eigen::VectorXd& x0, Eigen::VectorXd radii,
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& eval,
    const EllipsoidSettings& settings) {
  const Eigen::Index n = x0.size();
  const double nn = static_cast<double>(n);
  // per-iteration log det change of the shape update (constant, negative)
  const double logdet_step =
      nn * std::log(nn * nn / (nn * nn - 1.0)) + std::log((nn - 1.0) / (nn + 1.0));

  EllipsoidResult out;
  out.best_value = std::numeric_limits<double>::infinity();
  long iter = 0;

  for (int attempt = 0; attempt <= settings.max_restarts; ++attempt) {
    Eigen::VectorXd x = x0;
    Eigen::MatrixXd P = radii.array().square().matrix().asDiagonal();
    double logdet = 2.0 * radii.array().log().sum();
    bool degenerate = false;
    Eigen::VectorXd g(n);

    const auto snapshot = [&] {
      out.final_state.center = x;
      out.final_state.shape = P;
      out.final_state.iteration = iter;
      out.final_state.best_dual_value = out.best_value;
      out.final_state.log_volume = 0.5 * logdet;
    };

    while (iter < settings.max_iterations) {
      ++iter;
      // most violated nonnegativity, scaled by the initial radius
      Eigen::Index worst = -1;
      double worst_score = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double score = x[i] / radii[i];
        if (score < worst_score) { worst_score = score; worst = i; }
      }

      Eigen::VectorXd a(n);
      if (worst >= 0) {
        a.setZero();
        a[worst] = -1.0;  // keep {y_i >= x_i}, a superset of {y_i >= 0}
      } else {
        const double value = eval(x, g);
        if (value < out.best_value) {
          out.best_value = value;
          out.best_x = x;
        }
        const double gap_bound = std::sqrt(std::max(0.0, g.dot(P * g)));
        const double scale = std::max(1.0, std::abs(out.best_value));
        snapshot();
        if (settings.on_feasible &&
            settings.on_feasible(out.final_state, out.best_x, out.best_value)) {
          out.stopped_by_callback = true;
          out.iterations = iter;
          return out;
        }
        if (gap_bound <= settings.tolerance * scale) {
          out.converged = true;
          out.iterations = iter;
          return out;
        }
        a = g;
      }

      const double aPa = a.dot(P * a);
      if (!(aPa > 0.0)) { degenerate = true; break; }  // numerical collapse
      const Eigen::VectorXd b = (P * a) / std::sqrt(aPa);
      x -= b / (nn + 1.0);
      P = (nn * nn / (nn * nn - 1.0)) *
          (P - (2.0 / (nn + 1.0)) * (b * b.transpose()));
      P = 0.5 * (P + P.transpose());
      logdet += logdet_step;

      if (settings.keep_trace && std::isfinite(out.best_value)) {
        out.trace.push_back({iter, out.best_value, 0.5 * logdet});
      }
    }

    out.iterations = iter;
    snapshot();

    bool hit_boundary = false;
    if (out.best_x.size() == n) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(out.best_x[i] - x0[i]) > 0.9 * radii[i]) {
          radii[i] *= 2.0;
          hit_boundary = true;
        }
      }
    }
    if (degenerate && !hit_boundary) break;
    if (!hit_boundary || iter >= settings.max_iterations) break;
  }
  return out;
}

}  // namespace relaymec::detail
