#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace relaymec {

// Units are SI throughout: seconds, hertz, watts, joules, meters, bits, cycles.
// dBm inputs are converted at the configuration boundary, never inside formulas.

struct SystemParams {
  double T = 0;          // frame duration [s]
  double B_w = 0;        // bandwidth [Hz]
  double sigma2 = 0;     // total in-band noise power [W]
  double P_PT = 0;       // primary transmitter power [W]
  double P_AP = 0;       // access-point relay power [W]
  double f_mec_max = 0;  // MEC server CPU rate [cycles/s]
  double alpha = 0;      // objective weight, in [0,1]
  // path-loss exponents: PT-PR, PT-AP, AP-PR, IoT uplink
  double eta1 = 0;
  double eta2 = 0;
  double eta3 = 0;
  double eta4 = 0;
};

struct Geometry {
  double d_pt_pr = 0;         // [m]
  double d_pt_ap = 0;         // [m]
  double d_ap_pr = 0;         // [m]
  std::vector<double> d_iot;  // node-to-AP distance [m], length M
};

struct NodeParams {
  std::vector<double> cycles_per_bit;  // C_k [cycles/bit]
  std::vector<double> cpu_hz;          // f_k [cycles/s]
  std::vector<double> chip_coeff;      // w_k [J s^2 / cycle^3]
  std::vector<double> battery_j;       // E_k [J] per frame
};

struct ChannelGains {
  double g_pt_pr = 0;         // squared channel magnitudes, dimensionless
  double g_pt_ap = 0;
  double g_ap_pr = 0;
  std::vector<double> g_iot;  // length M
};

struct Instance {
  SystemParams system;
  Geometry geometry;
  NodeParams nodes;
  ChannelGains channels;
  std::size_t M = 0;

  // Throws std::invalid_argument on shape or sign problems.
  void validate() const;
};

struct PrimalSolution {
  double tau_r = 0;             // relay phase duration [s]
  std::vector<double> t_loc;    // local compute durations [s]
  std::vector<double> t_off;    // offload durations [s]
  std::vector<double> e_off;    // offload energies [J]
  std::vector<double> r_mec;    // offloaded bits
  std::vector<double> f_mec;    // allotted server CPU rate [cycles/s]
  std::vector<double> r_local;  // locally computed bits
  double r_relay = 0;           // relayed primary bits
  double objective = 0;         // weighted utility [bits]
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Mean squared channel magnitudes for the exponential fading draws.
struct ChannelMeans {
  double ap_pr = 1.0;
  double pt_pr = 1e-3;
  double pt_ap = 1.0;
  double iot = 5.0;
};

// Scenario template: scalar node/geometry values broadcast over M nodes.
// The stock defaults describe the reference scenario used by the sweeps.
struct InstanceTemplate {
  SystemParams system;
  double d_pt_pr = 100.0;  // [m]
  double d_pt_ap = 80.0;   // [m]
  double d_ap_pr = -1.0;   // [m]; negative means "derive as d_pt_pr - d_pt_ap"
  double d_iot = 10.0;     // [m]
  std::size_t M = 20;
  double cycles_per_bit = 1e4;
  double cpu_hz = 1e10;
  double chip_coeff = 1e-28;
  double battery_j = 1.0;
  ChannelMeans means;

  Instance make(const ChannelGains& gains) const;
};

SystemParams default_system();
InstanceTemplate default_template();

}  // namespace relaymec
