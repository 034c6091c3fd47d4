#pragma once

// Reference apparatus: 80 MHz pump split into four bins 3 ns apart, two pump
// passes through the crystal, two delay loops (1T, 2T) and a herald chain of
// an amplifier deadtime followed by the FPGA idle time.

#include <string>
#include <vector>

#include "muxsim/mux.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim::apparatus {

inline constexpr double kRepRateHz = 80e6;
inline constexpr double kBinSpacingS = 3e-9;
inline constexpr int kBinsPerPass = 4;
inline constexpr double kAmplifierDeadtimeS = 1e-7;
inline constexpr double kIdleTimeS = 2e-6;
inline constexpr double kMeasurementAsymmetry = 0.96;
inline constexpr double kPass2PumpScale = 0.5;
// Back-reflected clicks are ~20% of all idler counts on the return pass.
inline constexpr double kBackReflectionFraction = 0.25;

inline constexpr double kPumpFractions[kBinsPerPass] = {0.2375, 0.2693, 0.2258, 0.2586};

struct FittedSource {
  const char* name;
  int pass;
  int delay;
  double eta_i;
  double eta_s;
  double p_seed_mw;
};

// Fitted per-source parameters of the forward (pass 1) and return (pass 2) sources.
inline constexpr FittedSource kFittedSources[] = {
    {"P1D0", 1, 0, 0.015, 0.0019, 5.2}, {"P1D1", 1, 1, 0.015, 0.0019, 6.8},
    {"P1D2", 1, 2, 0.016, 0.0021, 5.6}, {"P1D3", 1, 3, 0.017, 0.0018, 4.6},
    {"P2D0", 2, 0, 0.018, 0.0024, 6.3}, {"P2D1", 2, 1, 0.017, 0.0021, 6.7},
    {"P2D2", 2, 2, 0.016, 0.0023, 6.8}, {"P2D3", 2, 3, 0.015, 0.0020, 6.9},
};

inline SourceParams source_params(const FittedSource& s) {
  return {s.eta_i, s.eta_s, s.p_seed_mw, s.pass == 2 ? kBackReflectionFraction : 0.0};
}

inline SwitchNetwork switch_network() { return {}; }

/// Eight-bin hybrid topology in priority order P1D0..P1D3, P2D0..P2D3.
inline MuxTopology topology() {
  MuxTopology t;
  t.rep_rate_hz = kRepRateHz;
  t.bin_spacing_s = kBinSpacingS;
  t.pass2_pump_scale = kPass2PumpScale;
  t.extrinsic_transmission = kMeasurementAsymmetry;
  for (const auto& s : kFittedSources) {
    MuxBin b;
    b.name = s.name;
    b.pass = s.pass;
    b.delay = s.delay;
    b.source = source_params(s);
    b.pump_fraction = kPumpFractions[s.delay];
    t.bins.push_back(b);
  }
  assign_switch_paths(t, switch_network(), kBinsPerPass);
  return t;
}

inline DeadtimeChain herald_chain() { return DeadtimeChain{kAmplifierDeadtimeS, kIdleTimeS}; }

}  // namespace muxsim::apparatus
