#pragma once

#include <stdexcept>
#include <string>

namespace relaymec {

// Base for everything the solver pipeline throws on purpose.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The decode-and-forward bottleneck SNR is zero: the relay leg cannot carry
// the primary message at any duration, so the feasibility bound is undefined.
struct RelayPathDegenerate : SolverError {
  RelayPathDegenerate()
      : SolverError("relay path SNR is zero; tau_r lower bound undefined") {}
};

// No relay duration inside one frame satisfies the primary-rate guarantee.
struct InfeasibleInstance : SolverError {
  double tau_r_lb;     // smallest admissible relay duration [s]; may be +inf
  double direct_rate;  // unassisted primary bits over the frame
  InfeasibleInstance(double tau_r_lb_, double direct_rate_)
      : SolverError("infeasible: tau_r lower bound " + std::to_string(tau_r_lb_) +
                    " s exceeds the frame"),
        tau_r_lb(tau_r_lb_),
        direct_rate(direct_rate_) {}
};

// primary_gain with a zero direct rate: the ratio is undefined.
struct DegenerateDirectLink : SolverError {
  DegenerateDirectLink()
      : SolverError("direct primary rate is zero; primary gain undefined") {}
};

// LP inputs whose shapes disagree.
struct DimensionMismatch : SolverError {
  using SolverError::SolverError;
};

// Config file problems, pointing at the offending line and field.
struct ConfigError : SolverError {
  int line;           // 1-based; 0 when not tied to a line
  std::string field;  // "section.key" when known
  ConfigError(const std::string& msg, int line_ = 0, std::string field_ = {})
      : SolverError(msg), line(line_), field(std::move(field_)) {}
};

}  // namespace relaymec
