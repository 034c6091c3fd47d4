#pragma once

#include <optional>

namespace muxsim {

// Standard errors attached to Monte Carlo derived rates.
struct RateErrors {
  double r_trig_hz = 0.0;
  double r_coincidence_hz = 0.0;
  double r_accidental_hz = 0.0;
  std::optional<double> car;
};

// Trigger / coincidence / accidental rates of a (possibly multiplexed) source.
// `car` is absent when the accidental rate is zero.
struct RateReport {
  double r_trig_hz = 0.0;
  double r_coincidence_hz = 0.0;
  double r_accidental_hz = 0.0;
  std::optional<double> car;
  std::optional<RateErrors> errors;
};

inline std::optional<double> car_of(double r_coincidence, double r_accidental) {
  if (r_accidental > 0.0) return r_coincidence / r_accidental;
  return std::nullopt;
}

inline RateReport make_report(double rep_rate_hz, double p_trig, double p_c, double p_a) {
  RateReport r;
  r.r_trig_hz = rep_rate_hz * p_trig;
  r.r_coincidence_hz = rep_rate_hz * p_c;
  r.r_accidental_hz = rep_rate_hz * p_a;
  r.car = car_of(r.r_coincidence_hz, r.r_accidental_hz);
  return r;
}

}  // namespace muxsim
