#pragma once

// Closed-form per-pulse statistics of a single heralded single-photon source
// (two-mode squeezed vacuum, threshold detectors on both arms), including the
// back-reflection contaminated variant used for the return pump pass.
//
// Throughout, x = xi^2 and r = 1 - eta is the loss of an arm.

#include <cmath>
#include <string>

#include "muxsim/errors.hpp"
#include "muxsim/rate_report.hpp"

namespace muxsim {

// Pair probability defining the power seed: P(n = 1) = (1 - xi^2) xi^2 at P = P_seed.
inline constexpr double kSeedPairProbability = 0.1;

// Slack tolerated when a difference of probabilities comes out slightly negative.
inline constexpr double kNegativeSlack = 1e-12;

struct SqueezingPoint {
  double xi = 0.0;
  double power_mw = 0.0;
  double coupling_c = 0.0;
};

struct SourceParams {
  double eta_i = 0.0;
  double eta_s = 0.0;
  double p_seed_mw = 1.0;
  double back_reflection_fraction = 0.0;  // 0 for forward-pass sources
};

struct EmissionProbs {
  double p_trig_idler = 0.0;
  double p_single_signal = 0.0;
  double p_multi_signal = 0.0;
  double p_trig_signal = 0.0;
};

struct TriggerSplit {
  double p_correct = 0.0;
  double p_incorrect = 0.0;
  double p_total = 0.0;
};

struct NoTriggerProbs {
  double p_single = 0.0;
  double p_multi = 0.0;
};

namespace detail {

inline void check_xi(double xi) {
  if (!(xi >= 0.0 && xi < 1.0)) throw domain_error("squeezing xi must lie in [0, 1), got " + std::to_string(xi));
}

inline void check_eta(double eta, const char* name) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw domain_error(std::string(name) + " must lie in [0, 1], got " + std::to_string(eta));
}

inline double clamp_probability(double p, const char* what) {
  if (p < -kNegativeSlack) throw consistency_error(std::string(what) + " evaluated negative: " + std::to_string(p));
  if (p < 0.0) return 0.0;
  if (p > 1.0 + kNegativeSlack) throw consistency_error(std::string(what) + " evaluated above one: " + std::to_string(p));
  return p > 1.0 ? 1.0 : p;
}

}  // namespace detail

inline void validate(const SourceParams& s) {
  detail::check_eta(s.eta_i, "eta_i");
  detail::check_eta(s.eta_s, "eta_s");
  if (!(s.p_seed_mw > 0.0)) throw domain_error("p_seed_mw must be positive");
  if (!(s.back_reflection_fraction >= 0.0)) throw domain_error("back_reflection_fraction must be >= 0");
}

/// Root of (1 - xi^2) xi^2 = 0.1 on (0, 1/sqrt 2), found by bisection.
/// Computed once; precision is limited only by double rounding (~1e-16).
inline double seed_squeezing() {
  static const double root = [] {
    double lo = 0.0;
    double hi = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double x = mid * mid;
      if ((1.0 - x) * x < kSeedPairProbability)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return root;
}

/// Coupling constant c (mW^-1/2) such that tanh(c sqrt(P_seed)) = xi_seed.
inline double calibrate_coupling(double p_seed_mw) {
  if (!(p_seed_mw > 0.0)) throw domain_error("seed power must be positive");
  return std::atanh(seed_squeezing()) / std::sqrt(p_seed_mw);
}

inline SqueezingPoint squeezing_from_power(double coupling_c, double p_mw) {
  if (!(p_mw >= 0.0)) throw domain_error("pump power must be non-negative");
  if (!(coupling_c > 0.0)) throw domain_error("coupling constant must be positive");
  return {std::tanh(coupling_c * std::sqrt(p_mw)), p_mw, coupling_c};
}

inline double squeezing_for(const SourceParams& s, double p_mw) {
  return squeezing_from_power(calibrate_coupling(s.p_seed_mw), p_mw).xi;
}

// Probability that an arm with transmission eta clicks on a thermal marginal.
inline double p_trig_idler(double xi, double eta_i) {
  detail::check_xi(xi);
  detail::check_eta(eta_i, "eta_i");
  const double x = xi * xi;
  return x * eta_i / (1.0 - x * (1.0 - eta_i));
}

// Unheralded signal click probability; same form as the idler trigger.
inline double p_trig_signal(double xi, double eta_s) {
  detail::check_xi(xi);
  detail::check_eta(eta_s, "eta_s");
  const double x = xi * xi;
  return x * eta_s / (1.0 - x * (1.0 - eta_s));
}

/// Probability that exactly one signal photon survives, given a herald click.
inline double p_single_signal(double xi, double eta_i, double eta_s) {
  detail::check_xi(xi);
  detail::check_eta(eta_i, "eta_i");
  detail::check_eta(eta_s, "eta_s");
  const double x = xi * xi;
  const double ri = 1.0 - eta_i;
  const double a = x * (1.0 - eta_s);  // x r_s
  const double b = a * ri;             // x r_s r_i
  const double num = (1.0 - x) * eta_s * (1.0 - a * a * ri) * (1.0 - x * ri);
  const double den = (1.0 - a) * (1.0 - b);
  return detail::clamp_probability(num / (den * den), "p_single_signal");
}

/// P(signal click | herald click) = p_single + p_multi.
inline double p_signal_click_given_trigger(double xi, double eta_i, double eta_s) {
  detail::check_xi(xi);
  detail::check_eta(eta_i, "eta_i");
  detail::check_eta(eta_s, "eta_s");
  const double x = xi * xi;
  const double ri = 1.0 - eta_i;
  const double rs = 1.0 - eta_s;
  const double miss = (1.0 - x) * (1.0 - x * ri) * rs / ((1.0 - x * rs) * (1.0 - x * ri * rs));
  return detail::clamp_probability(1.0 - miss, "p_signal_click_given_trigger");
}

/// Probability that two or more signal photons survive (and so click), given a herald click.
inline double p_multi_signal(double xi, double eta_i, double eta_s) {
  const double diff = p_signal_click_given_trigger(xi, eta_i, eta_s) - p_single_signal(xi, eta_i, eta_s);
  return detail::clamp_probability(diff, "p_multi_signal");
}

inline EmissionProbs emission_probs(double xi, double eta_i, double eta_s) {
  return {p_trig_idler(xi, eta_i), p_single_signal(xi, eta_i, eta_s), p_multi_signal(xi, eta_i, eta_s),
          p_trig_signal(xi, eta_s)};
}

/// Split of the herald probability of a back-reflection contaminated source.
/// Back-reflected clicks are independent of the true ones with probability f p_true.
inline TriggerSplit pass2_trigger_split(double xi, double eta_i, double f) {
  if (!(f >= 0.0)) throw domain_error("back-reflection fraction must be >= 0");
  const double p_true = p_trig_idler(xi, eta_i);
  const double p_back = p_true * f;
  if (p_back > 1.0) throw domain_error("f * p_trig exceeds one");
  TriggerSplit s;
  s.p_correct = p_true;
  s.p_incorrect = p_back * (1.0 - p_true);
  s.p_total = s.p_correct + s.p_incorrect;
  return s;
}

/// f such that back-reflected clicks make up `idler_fraction` of all herald clicks.
inline double back_reflection_fraction_for(double p_true, double idler_fraction) {
  if (!(p_true >= 0.0 && p_true < 1.0)) throw domain_error("p_true must lie in [0, 1)");
  if (!(idler_fraction >= 0.0 && idler_fraction < 1.0)) throw domain_error("idler_fraction must lie in [0, 1)");
  return idler_fraction / ((1.0 - idler_fraction) * (1.0 - p_true));
}

/// Signal statistics conditioned on the paired idler NOT clicking.
inline NoTriggerProbs p_signal_given_no_pair_trigger(double xi, double eta_i, double eta_s) {
  detail::check_xi(xi);
  detail::check_eta(eta_i, "eta_i");
  detail::check_eta(eta_s, "eta_s");
  const double x = xi * xi;
  const double ri = 1.0 - eta_i;
  const double b = x * ri * (1.0 - eta_s);
  NoTriggerProbs out;
  out.p_single = detail::clamp_probability((1.0 - x * ri) * eta_s * ri * x / ((1.0 - b) * (1.0 - b)),
                                           "p_single_no_trigger");
  const double any = x * ri * eta_s / (1.0 - b);
  out.p_multi = detail::clamp_probability(any - out.p_single, "p_multi_no_trigger");
  return out;
}

/// Coincidence probability per pulse; includes the incorrectly-heralded branch when f > 0.
inline double coincidence_prob(double xi, double eta_i, double eta_s, double f = 0.0) {
  const TriggerSplit split = pass2_trigger_split(xi, eta_i, f);
  double pc = split.p_correct * p_signal_click_given_trigger(xi, eta_i, eta_s);
  if (split.p_incorrect > 0.0) {
    const NoTriggerProbs nt = p_signal_given_no_pair_trigger(xi, eta_i, eta_s);
    pc += split.p_incorrect * (nt.p_single + nt.p_multi);
  }
  return pc;
}

inline double accidental_prob(double xi, double eta_i, double eta_s, double f = 0.0) {
  return pass2_trigger_split(xi, eta_i, f).p_total * p_trig_signal(xi, eta_s);
}

inline double pass2_coincidence_prob(const SourceParams& source, double xi) {
  validate(source);
  return coincidence_prob(xi, source.eta_i, source.eta_s, source.back_reflection_fraction);
}

/// Expected rates of one source pumped at p_mw. Back-reflection is included when f > 0.
inline RateReport rates(const SourceParams& source, double p_mw, double rep_rate_hz) {
  validate(source);
  if (!(rep_rate_hz > 0.0)) throw domain_error("repetition rate must be positive");
  const double xi = squeezing_for(source, p_mw);
  const double f = source.back_reflection_fraction;
  return make_report(rep_rate_hz, pass2_trigger_split(xi, source.eta_i, f).p_total,
                     coincidence_prob(xi, source.eta_i, source.eta_s, f),
                     accidental_prob(xi, source.eta_i, source.eta_s, f));
}

}  // namespace muxsim
