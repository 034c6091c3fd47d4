#pragma once

// Derived comparisons between the multiplexed output and the individual
// sources: rate curves, trigger enhancement, and coincidence rate at matched CAR.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "muxsim/mux.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim {

// A topology together with the herald deadtime chain it is evaluated with.
struct Setup {
  MuxTopology topology;
  DeadtimeChain chain;
};

/// Extrinsic-loss-removed variant: no measurement asymmetry, no deadtime/idle saturation.
inline Setup without_extrinsic_loss(Setup s) {
  s.topology = apply_loss_mask(s.topology, LossMask::extrinsic_removed);
  s.chain = DeadtimeChain{};
  return s;
}

/// A bin operated as a stand-alone source (own pump fraction, no switch network).
inline RateReport single_source_rates(const Setup& s, const MuxBin& bin, double reference_power_mw) {
  return saturated_rates(bin.source, s.topology.bin_power_mw(bin, reference_power_mw), s.topology.rep_rate_hz, s.chain);
}

inline RateReport mux_output_rates(const Setup& s, double reference_power_mw) {
  return mux_rates(s.topology, reference_power_mw, s.chain);
}

/// Ratio of the MUX trigger rate to the best stand-alone trigger rate among
/// bins of `pass` (0: all bins).
inline double trigger_enhancement(const Setup& s, double reference_power_mw, int pass = 0) {
  double best = 0.0;
  for (const auto& b : s.topology.bins)
    if (pass == 0 || b.pass == pass) best = std::max(best, single_source_rates(s, b, reference_power_mw).r_trig_hz);
  if (!(best > 0.0)) throw domain_error("no single-source trigger rate at this power");
  return mux_output_rates(s, reference_power_mw).r_trig_hz / best;
}

/// Coincidence rate of a stand-alone bin at the pump power where its CAR
/// equals `car`. CAR falls monotonically with power, so the power is found by
/// bisection in log space over [1e-4, 1e4] x reference mW. Empty when the CAR
/// is out of reach.
inline std::optional<double> coincidence_at_car(const Setup& s, const MuxBin& bin, double car) {
  auto car_at = [&](double p) {
    const auto r = single_source_rates(s, bin, p);
    return r.car.value_or(std::numeric_limits<double>::infinity());
  };
  double lo = 1e-4, hi = 1e4;
  if (!(car_at(lo) >= car) || !(car_at(hi) <= car)) return std::nullopt;
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-13; ++i) {
    const double mid = std::sqrt(lo * hi);
    (car_at(mid) > car ? lo : hi) = mid;
  }
  return single_source_rates(s, bin, std::sqrt(lo * hi)).r_coincidence_hz;
}

struct MatchedCarPoint {
  double reference_power_mw = 0.0;
  double car = 0.0;
  double mux_r_c_hz = 0.0;
  double best_single_r_c_hz = 0.0;
  double mean_single_r_c_hz = 0.0;

  double ratio_to_best() const { return mux_r_c_hz / best_single_r_c_hz; }
  double ratio_to_mean() const { return mux_r_c_hz / mean_single_r_c_hz; }
};

/// MUX coincidence rate against stand-alone bins of `pass` tuned to the same CAR.
inline MatchedCarPoint matched_car_point(const Setup& s, double reference_power_mw, int pass = 1) {
  const RateReport m = mux_output_rates(s, reference_power_mw);
  if (!m.car) throw domain_error("MUX CAR undefined at zero power");
  MatchedCarPoint pt{reference_power_mw, *m.car, m.r_coincidence_hz, 0.0, 0.0};
  int n = 0;
  for (const auto& b : s.topology.bins) {
    if (pass != 0 && b.pass != pass) continue;
    const auto rc = coincidence_at_car(s, b, *m.car);
    if (!rc) continue;
    pt.best_single_r_c_hz = std::max(pt.best_single_r_c_hz, *rc);
    pt.mean_single_r_c_hz += *rc;
    ++n;
  }
  if (n == 0) throw domain_error("no single source reaches the MUX CAR");
  pt.mean_single_r_c_hz /= n;
  return pt;
}

}  // namespace muxsim
