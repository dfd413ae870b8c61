#pragma once

// Shared scenario builders for the test binaries. Everything here is
// deterministic; random draws take explicit seeds.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "relaymec/errors.hpp"
#include "relaymec/model.hpp"
#include "relaymec/types.hpp"

namespace testutil {

// Single-node fixture with a weak direct link and strong relay legs: feasible,
// with a tight leftover window (tau_r_lb ~ 0.081 s against T = 0.1 s).
inline relaymec::Instance fixed_m1(double alpha = 0.5) {
  relaymec::InstanceTemplate t = relaymec::default_template();
  t.M = 1;
  t.d_pt_ap = 50.0;
  t.d_ap_pr = -1.0;
  t.system.alpha = alpha;
  relaymec::ChannelGains g;
  g.g_pt_pr = 2e-6;
  g.g_pt_ap = 1.0;
  g.g_ap_pr = 1.0;
  g.g_iot = {5.0};
  return t.make(g);
}

// Template at the reference scales with overridable knobs.
inline relaymec::Instance make_instance(std::size_t M, double d_pt_ap,
                                        double battery, double alpha,
                                        const relaymec::ChannelGains& g) {
  relaymec::InstanceTemplate t = relaymec::default_template();
  t.M = M;
  t.d_pt_ap = d_pt_ap;
  t.battery_j = battery;
  t.system.alpha = alpha;
  return t.make(g);
}

// Rayleigh-faded gain draw at the reference means. Test-side RNG only; the
// library's own stream lives elsewhere and is covered by its own tests.
inline relaymec::ChannelGains draw_gains(std::mt19937_64& rng, std::size_t M,
                                         const relaymec::ChannelMeans& m = {}) {
  std::exponential_distribution<double> unit(1.0);
  relaymec::ChannelGains g;
  g.g_ap_pr = m.ap_pr * unit(rng);
  g.g_pt_pr = m.pt_pr * unit(rng);
  g.g_pt_ap = m.pt_ap * unit(rng);
  g.g_iot.resize(M);
  for (std::size_t k = 0; k < M; ++k) g.g_iot[k] = m.iot * unit(rng);
  return g;
}

// Rejection-samples channel draws until the relay constraint fits the frame.
// Feasible fractions at the reference scales are a few percent, so expect
// on the order of a hundred draws per hit.
inline relaymec::Instance random_feasible(std::mt19937_64& rng, std::size_t M,
                                          double d_pt_ap = 50.0,
                                          double battery = 1.0,
                                          double alpha = 0.5,
                                          int max_tries = 200000) {
  for (int i = 0; i < max_tries; ++i) {
    relaymec::Instance in = make_instance(M, d_pt_ap, battery, alpha, draw_gains(rng, M));
    try {
      if (relaymec::tau_r_lower_bound(in) <= in.system.T) return in;
    } catch (const relaymec::RelayPathDegenerate&) {
    }
  }
  throw std::runtime_error("random_feasible: no feasible draw within budget");
}

}  // namespace testutil
