#pragma once

// Nonparalyzable deadtime corrections. Each stage maps a true rate T to a
// detected rate D = T / (d T + 1); stages are applied in signal-path order
// (APD -> amplifiers -> FPGA idle time). Note that 1/D = 1/T + sum(d), so the
// composed map does not depend on the stage order.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <vector>

#include "muxsim/errors.hpp"
#include "muxsim/hsps.hpp"

namespace muxsim {

class DeadtimeChain {
 public:
  DeadtimeChain() = default;
  explicit DeadtimeChain(std::vector<double> stages_s) : stages_(std::move(stages_s)) {
    for (double d : stages_)
      if (!(d >= 0.0)) throw domain_error("deadtime stages must be >= 0, got " + std::to_string(d));
  }
  DeadtimeChain(std::initializer_list<double> stages_s) : DeadtimeChain(std::vector<double>(stages_s)) {}

  const std::vector<double>& stages() const noexcept { return stages_; }
  bool empty() const noexcept { return stages_.empty(); }
  double longest() const noexcept { return stages_.empty() ? 0.0 : *std::max_element(stages_.begin(), stages_.end()); }

  DeadtimeChain then(double stage_s) const {
    auto s = stages_;
    s.push_back(stage_s);
    return DeadtimeChain(std::move(s));
  }

 private:
  std::vector<double> stages_;
};

inline double detected_from_true(double true_rate_hz, const DeadtimeChain& chain) {
  if (!(true_rate_hz >= 0.0)) throw domain_error("true rate must be >= 0");
  double rate = true_rate_hz;
  for (double d : chain.stages()) rate = rate / (d * rate + 1.0);
  return rate;
}

inline double true_from_detected(double detected_rate_hz, const DeadtimeChain& chain) {
  if (!(detected_rate_hz >= 0.0)) throw domain_error("detected rate must be >= 0");
  double rate = detected_rate_hz;
  const auto& st = chain.stages();
  for (auto it = st.rbegin(); it != st.rend(); ++it) {
    const double dead_fraction = rate * *it;
    if (dead_fraction >= 1.0)
      throw saturation_error("detected rate " + std::to_string(rate) + " Hz is at or above 1/d for d = " +
                             std::to_string(*it) + " s");
    rate = rate / (1.0 - dead_fraction);
  }
  return rate;
}

// Fraction of true events that survive the chain.
inline double throughput(double true_rate_hz, const DeadtimeChain& chain) {
  if (true_rate_hz <= 0.0) return 1.0;
  return detected_from_true(true_rate_hz, chain) / true_rate_hz;
}

/// Idler transmission that reproduces the saturated trigger probability
/// through the unsaturated closed form. Always <= source.eta_i.
inline double effective_eta_i(const SourceParams& source, double xi, double rep_rate_hz, const DeadtimeChain& chain) {
  validate(source);
  detail::check_xi(xi);
  if (!(rep_rate_hz > 0.0)) throw domain_error("repetition rate must be positive");
  if (chain.empty() || xi == 0.0 || source.eta_i == 0.0) return source.eta_i;

  const double f = source.back_reflection_fraction;
  const double p = pass2_trigger_split(xi, source.eta_i, f).p_total;
  const double p_sat = detected_from_true(rep_rate_hz * p, chain) / rep_rate_hz;

  double eta = 0.0;
  if (f == 0.0) {
    const double x = xi * xi;
    eta = p_sat * (1.0 - x) / (x * (1.0 - p_sat));
  } else {
    // p_total is increasing in eta_i; bisect on [0, eta_i].
    double lo = 0.0;
    double hi = source.eta_i;
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (pass2_trigger_split(xi, mid, f).p_total < p_sat)
        lo = mid;
      else
        hi = mid;
    }
    eta = 0.5 * (lo + hi);
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw consistency_error("effective eta_i outside [0, 1]: " + std::to_string(eta));
  return std::min(eta, source.eta_i);
}

/// Single-source rates with the herald stream passed through `chain`.
inline RateReport saturated_rates(const SourceParams& source, double p_mw, double rep_rate_hz,
                                  const DeadtimeChain& chain) {
  validate(source);
  const double xi = squeezing_for(source, p_mw);
  SourceParams eff = source;
  eff.eta_i = effective_eta_i(source, xi, rep_rate_hz, chain);
  return rates(eff, p_mw, rep_rate_hz);
}

}  // namespace muxsim
