#include "relaymec/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "relaymec/baseline.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/model.hpp"
#include "relaymec/rng.hpp"

namespace relaymec {

namespace {

constexpr std::uint64_t kLinkApPr = 0;
constexpr std::uint64_t kLinkPtPr = 1;
constexpr std::uint64_t kLinkPtAp = 2;
constexpr std::uint64_t kLinkIotBase = 3;

double draw(const TrialRng& rng, std::uint64_t link, double mean) {
  return rng::exponential(rng::stream(rng.seed, rng.trial, link), mean);
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

ChannelGains sample_channels(const TrialRng& rng, const ChannelMeans& means,
                             std::size_t M) {
  if (!(means.ap_pr > 0.0) || !(means.pt_pr > 0.0) || !(means.pt_ap > 0.0) ||
      !(means.iot > 0.0)) {
    throw std::invalid_argument("channel means must be positive");
  }
  ChannelGains g;
  g.g_ap_pr = draw(rng, kLinkApPr, means.ap_pr);
  g.g_pt_pr = draw(rng, kLinkPtPr, means.pt_pr);
  g.g_pt_ap = draw(rng, kLinkPtAp, means.pt_ap);
  g.g_iot.resize(M);
  for (std::size_t k = 0; k < M; ++k) {
    g.g_iot[k] = draw(rng, kLinkIotBase + k, means.iot);
  }
  return g;
}

double primary_gain(const Instance& in, const PrimalSolution& sol) {
  const double direct = direct_rate(in);
  if (!(direct > 0.0)) throw DegenerateDirectLink();
  return sol.r_relay / direct;
}

double iot_gain(const Instance& in, const PrimalSolution& sol) {
  double computed = 0.0;
  double local_only = 0.0;
  for (std::size_t k = 0; k < in.M; ++k) {
    computed += sol.r_local[k] + sol.r_mec[k];
    const double f = in.nodes.cpu_hz[k];
    const double energy_cap = in.nodes.battery_j[k] * in.nodes.cycles_per_bit[k] /
                              (in.nodes.chip_coeff[k] * f * f * f);
    local_only += local_bits(in, k, std::min(in.system.T, energy_cap));
  }
  return computed / local_only;
}

void SweepConfig::validate() const {
  if (alpha_grid.empty()) throw std::invalid_argument("alpha_grid is empty");
  for (double a : alpha_grid) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw std::invalid_argument("alpha_grid values must lie in [0, 1]");
    }
  }
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (placements.empty()) throw std::invalid_argument("placements is empty");
  for (double d : placements) {
    if (!(d > 0.0 && d < base.d_pt_pr)) {
      throw std::invalid_argument(
          "placements must lie strictly between 0 and d_pt_pr");
    }
  }
  if (energy_levels.empty()) {
    throw std::invalid_argument("energy_levels is empty");
  }
  for (double e : energy_levels) {
    if (!(e > 0.0)) throw std::invalid_argument("energy_levels must be > 0");
  }
  if (!(base.means.ap_pr > 0.0) || !(base.means.pt_pr > 0.0) ||
      !(base.means.pt_ap > 0.0) || !(base.means.iot > 0.0)) {
    throw std::invalid_argument("channel means must be positive");
  }
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

double metric_value(const TrialMetrics& m, std::size_t index) {
  switch (index) {
    case 0: return m.relay_rate;
    case 1: return m.comp_rate;
    case 2: return m.primary_gain;
    case 3: return m.iot_gain;
    case 4: return m.utility_opt;
    case 5: return m.utility_equal;
    default: throw std::out_of_range("metric index");
  }
}

namespace {

double& metric_slot(TrialMetrics& m, std::size_t index) {
  switch (index) {
    case 0: return m.relay_rate;
    case 1: return m.comp_rate;
    case 2: return m.primary_gain;
    case 3: return m.iot_gain;
    case 4: return m.utility_opt;
    case 5: return m.utility_equal;
    default: throw std::out_of_range("metric index");
  }
}

TrialRecord solve_trial(const SweepConfig& cfg, const SweepCell& cell,
                        long trial) {
  TrialRecord rec;
  rec.trial = trial;
  InstanceTemplate tpl = cfg.base;
  tpl.system.alpha = cell.alpha;
  tpl.d_pt_ap = cell.d_pt_ap;
  tpl.d_ap_pr = -1.0;  // back on the PT-PR line for every placement
  tpl.battery_j = cell.energy;
  const auto gains = sample_channels({cfg.seed, static_cast<std::uint64_t>(trial)},
                                     tpl.means, tpl.M);
  try {
    const Instance in = tpl.make(gains);
    const SolveReport opt = solve_instance(in, cfg.solver);
    const SolveReport equal = solve_equal_allocation(in, cfg.solver);
    const double T = in.system.T;
    double computed = 0.0;
    for (std::size_t k = 0; k < in.M; ++k) {
      computed += opt.solution.r_local[k] + opt.solution.r_mec[k];
    }
    rec.metrics.relay_rate = opt.solution.r_relay / T;
    rec.metrics.comp_rate = computed / T;
    rec.metrics.primary_gain = primary_gain(in, opt.solution);
    rec.metrics.iot_gain = iot_gain(in, opt.solution);
    rec.metrics.utility_opt = opt.primal_value / T;
    rec.metrics.utility_equal = equal.primal_value / T;
    rec.opt_slack = std::max(0.0, opt.dual_value - opt.primal_value) / T;
    rec.equal_slack = std::max(0.0, equal.dual_value - equal.primal_value) / T;
    rec.feasible = true;
  } catch (const InfeasibleInstance&) {
    // counted, not resampled: the feasible fraction is part of the result
  } catch (const std::exception& ex) {
    rec.error = ex.what();
  }
  return rec;
}

void aggregate(SweepCell& cell) {
  cell.n_total = static_cast<long>(cell.records.size());
  cell.n_feasible = 0;
  for (const auto& rec : cell.records) {
    if (rec.feasible) ++cell.n_feasible;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    if (cell.n_feasible == 0) {
      metric_slot(cell.mean, m) = nan;
      metric_slot(cell.stddev, m) = nan;
      continue;
    }
    double sum = 0.0;
    for (const auto& rec : cell.records) {
      if (rec.feasible) sum += metric_value(rec.metrics, m);
    }
    const double mean = sum / static_cast<double>(cell.n_feasible);
    double sq = 0.0;
    for (const auto& rec : cell.records) {
      if (!rec.feasible) continue;
      const double d = metric_value(rec.metrics, m) - mean;
      sq += d * d;
    }
    metric_slot(cell.mean, m) = mean;
    metric_slot(cell.stddev, m) =
        cell.n_feasible > 1
            ? std::sqrt(sq / static_cast<double>(cell.n_feasible - 1))
            : 0.0;
  }
}

}  // namespace

SweepReport run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepReport report;
  for (double d : cfg.placements) {
    for (double e : cfg.energy_levels) {
      for (double a : cfg.alpha_grid) {
        SweepCell cell;
        cell.alpha = a;
        cell.d_pt_ap = d;
        cell.energy = e;
        cell.records.resize(static_cast<std::size_t>(cfg.trials));
        report.cells.push_back(std::move(cell));
      }
    }
  }

  // flat (cell, trial) work list; records land at fixed indices, so the
  // aggregation below is identical however the chunks get scheduled
  const std::size_t per_cell = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = report.cells.size() * per_cell;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      SweepCell& cell = report.cells[i / per_cell];
      const long trial = static_cast<long>(i % per_cell);
      cell.records[static_cast<std::size_t>(trial)] =
          solve_trial(cfg, cell, trial);
    }
  };

  unsigned n_threads = cfg.threads > 0
                           ? static_cast<unsigned>(cfg.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(total));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& cell : report.cells) aggregate(cell);
  return report;
}

void write_csv(std::ostream& os, const SweepReport& report) {
  std::string out = "alpha,d_pt_ap,energy,metric,mean,std,n_feasible,n_total\n";
  for (const auto& cell : report.cells) {
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      append_double(out, cell.alpha);
      out.push_back(',');
      append_double(out, cell.d_pt_ap);
      out.push_back(',');
      append_double(out, cell.energy);
      out.push_back(',');
      out += kMetricNames[m];
      out.push_back(',');
      append_double(out, metric_value(cell.mean, m));
      out.push_back(',');
      append_double(out, metric_value(cell.stddev, m));
      out.push_back(',');
      out += std::to_string(cell.n_feasible);
      out.push_back(',');
      out += std::to_string(cell.n_total);
      out.push_back('\n');
    }
  }
  os << out;
}

}  // namespace relaymec
