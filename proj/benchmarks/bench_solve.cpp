// Microbenchmarks for the solver stack. Fixed seeds keep every iteration on
// the same instances, so numbers are comparable across runs and machines.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "relaymec/baseline.hpp"
#include "relaymec/errors.hpp"
#include "relaymec/lp.hpp"
#include "relaymec/model.hpp"
#include "relaymec/montecarlo.hpp"
#include "relaymec/oracle.hpp"
#include "relaymec/recovery.hpp"

using namespace relaymec;

namespace {

// first feasible draw at the template's geometry for the given node count
Instance feasible_instance(std::size_t M, std::uint64_t seed) {
  InstanceTemplate tpl = default_template();
  tpl.M = M;
  for (std::uint64_t trial = 0;; ++trial) {
    const Instance in = tpl.make(sample_channels({seed, trial}, tpl.means, M));
    try {
      if (tau_r_lower_bound(in) <= in.system.T) return in;
    } catch (const RelayPathDegenerate&) {
    }
  }
}

void bm_solve(benchmark::State& state) {
  const Instance in =
      feasible_instance(static_cast<std::size_t>(state.range(0)), 1234);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_instance(in).primal_value);
  }
}

void bm_equal_allocation(benchmark::State& state) {
  const Instance in =
      feasible_instance(static_cast<std::size_t>(state.range(0)), 1234);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_equal_allocation(in).primal_value);
  }
}

void bm_grid_oracle_m1(benchmark::State& state) {
  const Instance in = feasible_instance(1, 1234);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        oracle::grid_solve(in, static_cast<int>(state.range(0))).objective);
  }
}

void bm_relay_floor(benchmark::State& state) {
  const Instance in = feasible_instance(20, 1234);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tau_r_lower_bound(in));
  }
}

lp::LinearProgram random_lp(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  lp::LinearProgram p = lp::make_lp(n);
  for (int j = 0; j < n; ++j) {
    p.c(j) = coef(rng);
    p.lower(j) = -2.0 * u01(rng);
    p.upper(j) = p.lower(j) + 0.5 + 2.0 * u01(rng);
  }
  const int m = n / 2 + 1;
  p.A_ub = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return coef(rng); });
  p.b_ub = Eigen::VectorXd(m);
  for (int i = 0; i < m; ++i) p.b_ub(i) = 0.5 + u01(rng);
  return p;
}

void bm_lp_solve(benchmark::State& state) {
  std::vector<lp::LinearProgram> programs;
  std::mt19937_64 rng(7);
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < 16; ++i) programs.push_back(random_lp(rng, n));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lp::solve_lp(programs[i]).status);
    i = (i + 1) % programs.size();
  }
}

BENCHMARK(bm_solve)->Arg(1)->Arg(2)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_equal_allocation)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_grid_oracle_m1)->Arg(60)->Arg(480)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_relay_floor);
BENCHMARK(bm_lp_solve)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
