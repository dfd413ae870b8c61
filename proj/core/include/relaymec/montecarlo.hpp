#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaymec/recovery.hpp"
#include "relaymec/types.hpp"

namespace relaymec {

// ---------------------------------------------------------------- sampling

// Position in the deterministic draw space: gains come from pure hashes of
// (seed, trial, link), independent of evaluation order.
struct TrialRng {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

// One Rayleigh-faded realization: independent exponential squared gains with
// the configured means, M gains for the IoT uplinks.
ChannelGains sample_channels(const TrialRng& rng, const ChannelMeans& means,
                             std::size_t M);

// ----------------------------------------------------------------- metrics

// Relaying bits over unassisted direct bits. Throws DegenerateDirectLink
// when the direct link carries nothing.
double primary_gain(const Instance& in, const PrimalSolution& sol);

// Computed bits over the local-only closed form: each node running its CPU
// for min(T, battery-limited time) with zero offloading.
double iot_gain(const Instance& in, const PrimalSolution& sol);

// ------------------------------------------------------------------ sweeps

struct SweepConfig {
  InstanceTemplate base = default_template();  // incl. channel means
  std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9};
  std::vector<double> placements = {20.0, 50.0, 80.0};  // d_pt_ap [m]
  std::vector<double> energy_levels = {0.5, 1.0};       // battery [J]
  long trials = 200;         // per cell; trial index keys the channel draw
  std::uint64_t seed = 1234;
  SolveSettings solver;
  int threads = 1;           // 0 -> hardware concurrency

  void validate() const;  // throws std::invalid_argument
};

// Per-trial observables. Rates are bits per second over the frame; gains
// and utilities follow the objective's own units (utility = objective / T).
struct TrialMetrics {
  double relay_rate = 0.0;     // [bits/s]
  double comp_rate = 0.0;      // local + offloaded [bits/s]
  double primary_gain = 0.0;   // relay bits / direct bits
  double iot_gain = 0.0;       // computed bits / local-only bits
  double utility_opt = 0.0;    // [bits/s]
  double utility_equal = 0.0;  // [bits/s]
};

// CSV row order for the metric block of each cell.
inline constexpr std::array<const char*, 6> kMetricNames = {
    "relay_rate", "comp_rate",   "primary_gain",
    "iot_gain",   "utility_opt", "utility_equal"};

double metric_value(const TrialMetrics& m, std::size_t index);

struct TrialRecord {
  long trial = 0;
  bool feasible = false;
  std::string error;     // solver failure text; empty for clean or infeasible
  TrialMetrics metrics;  // meaningful only when feasible
  // certified distance to optimality, (dual - primal)/T clipped at zero:
  // trend assertions between two approximate solves are exact only up to
  // these certificates
  double opt_slack = 0.0;    // [bits/s]
  double equal_slack = 0.0;  // [bits/s]
};

// One (alpha, placement, energy) cell. Mean and stddev are over feasible
// trials only (sample stddev, zero when fewer than two); NaN when none.
struct SweepCell {
  double alpha = 0.0;
  double d_pt_ap = 0.0;  // [m]
  double energy = 0.0;   // [J]
  long n_total = 0;
  long n_feasible = 0;
  TrialMetrics mean;
  TrialMetrics stddev;
  std::vector<TrialRecord> records;  // indexed by trial
};

struct SweepReport {
  std::vector<SweepCell> cells;
};

// Paired-sample sweep: cell (d, E, alpha) at trial t always sees the draw
// keyed by (seed, t), so curves across alpha, placement, and energy share
// channel realizations trial by trial. d_ap_pr is derived as
// d_pt_pr - d_pt_ap for every placement. Infeasible draws and solver
// failures become per-trial records; they never abort the sweep.
SweepReport run_sweep(const SweepConfig& cfg);

// Fixed-header CSV (one row per cell and metric); numbers are shortest
// round-trip, so re-parsing reproduces the doubles exactly.
void write_csv(std::ostream& os, const SweepReport& report);

}  // namespace relaymec
