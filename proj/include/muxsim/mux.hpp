#pragma once

// Analytic composition of per-bin heralded sources into a multiplexed source.
// Bins are listed in priority order: the first heralded bin is routed to the
// output and every later bin is discarded, so bin k contributes only when all
// bins before it failed to herald.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "muxsim/errors.hpp"
#include "muxsim/hsps.hpp"
#include "muxsim/rate_report.hpp"
#include "muxsim/routing.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim {

inline double db_to_transmission(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

// Component losses of the feed-forward switching network.
struct SwitchNetwork {
  double loss_db_per_switch = 1.0;
  int switches_per_path = 4;
  double loop_transmission = 0.95;
  std::optional<double> path_loss_db;  // flat per-path override

  double path_transmission(const Route& route) const {
    if (path_loss_db) return db_to_transmission(*path_loss_db);
    return db_to_transmission(loss_db_per_switch * switches_per_path) *
           std::pow(loop_transmission, route.loops_used());
  }
};

struct MuxBin {
  std::string name;
  int pass = 1;
  int delay = 0;
  SourceParams source;
  double pump_fraction = 0.25;
  double eta_sw = 1.0;
};

struct MuxTopology {
  std::vector<MuxBin> bins;
  double rep_rate_hz = 80e6;
  double bin_spacing_s = 3e-9;
  double pass2_pump_scale = 0.5;
  // Extra loss seen only by the multiplexed output (measurement switch asymmetry).
  double extrinsic_transmission = 0.96;

  double bin_power_mw(const MuxBin& bin, double reference_power_mw) const {
    return reference_power_mw * bin.pump_fraction * (bin.pass == 2 ? pass2_pump_scale : 1.0);
  }
};

inline void validate(const MuxTopology& t) {
  if (!(t.rep_rate_hz > 0.0)) throw config_error("rep_rate_hz must be positive");
  if (!(t.bin_spacing_s > 0.0)) throw config_error("bin_spacing_s must be positive");
  if (!(t.pass2_pump_scale >= 0.0 && t.pass2_pump_scale <= 1.0)) throw config_error("pass2_pump_scale must lie in [0, 1]");
  if (!(t.extrinsic_transmission > 0.0 && t.extrinsic_transmission <= 1.0))
    throw config_error("extrinsic_transmission must lie in (0, 1]");
  double fraction_sum[3] = {0.0, 0.0, 0.0};
  for (const auto& b : t.bins) {
    validate(b.source);
    if (b.pass != 1 && b.pass != 2) throw config_error("bin pass must be 1 or 2");
    if (!(b.pump_fraction >= 0.0 && b.pump_fraction <= 1.0)) throw config_error("pump_fraction must lie in [0, 1]");
    if (!(b.eta_sw > 0.0 && b.eta_sw <= 1.0)) throw config_error("eta_sw must lie in (0, 1]");
    fraction_sum[b.pass] += b.pump_fraction;
  }
  if (fraction_sum[1] > 1.0 + 1e-9 || fraction_sum[2] > 1.0 + 1e-9)
    throw config_error("pump fractions of one pass sum above 1");
}

// Per-pulse statistics of one bin as seen at the multiplexed output.
struct BinProbs {
  double p_trig = 0.0;    // any herald click (true or back-reflected)
  double p_c = 0.0;       // herald and output click
  double p_a = 0.0;       // herald times unheralded output click
  double p_single = 0.0;  // herald and exactly one photon delivered
  double p_multi = 0.0;   // herald and two or more photons delivered
};

struct MuxProbs {
  double p_trig = 0.0;
  double p_c = 0.0;
  double p_a = 0.0;
  double p_single = 0.0;
  double p_multi = 0.0;
};

/// Statistics of a source with signal-path transmission `eta_path` applied on top of eta_s.
inline BinProbs source_probs(const SourceParams& s, double xi, double eta_path) {
  const double eta_s = s.eta_s * eta_path;
  const double f = s.back_reflection_fraction;
  const TriggerSplit split = pass2_trigger_split(xi, s.eta_i, f);
  BinProbs p;
  p.p_trig = split.p_total;
  p.p_c = coincidence_prob(xi, s.eta_i, eta_s, f);
  p.p_a = accidental_prob(xi, s.eta_i, eta_s, f);
  p.p_single = split.p_correct * p_single_signal(xi, s.eta_i, eta_s);
  p.p_multi = split.p_correct * p_multi_signal(xi, s.eta_i, eta_s);
  if (split.p_incorrect > 0.0) {
    const NoTriggerProbs nt = p_signal_given_no_pair_trigger(xi, s.eta_i, eta_s);
    p.p_single += split.p_incorrect * nt.p_single;
    p.p_multi += split.p_incorrect * nt.p_multi;
  }
  return p;
}

inline BinProbs bin_probs(const MuxTopology& t, const MuxBin& bin, double reference_power_mw) {
  const double xi = squeezing_for(bin.source, t.bin_power_mw(bin, reference_power_mw));
  return source_probs(bin.source, xi, bin.eta_sw * t.extrinsic_transmission);
}

/// Priority nesting: P = P_0 + (1 - p_0)(P_1 + (1 - p_1)(P_2 + ...)).
inline MuxProbs compose_priority(const std::vector<BinProbs>& bins) {
  MuxProbs m;
  double none_before = 1.0;
  for (const auto& b : bins) {
    m.p_c += none_before * b.p_c;
    m.p_a += none_before * b.p_a;
    m.p_single += none_before * b.p_single;
    m.p_multi += none_before * b.p_multi;
    none_before *= 1.0 - b.p_trig;
  }
  m.p_trig = 1.0 - none_before;
  return m;
}

inline MuxProbs mux_probs(const MuxTopology& t, double reference_power_mw) {
  validate(t);
  std::vector<BinProbs> bp;
  bp.reserve(t.bins.size());
  for (const auto& b : t.bins) bp.push_back(bin_probs(t, b, reference_power_mw));
  return compose_priority(bp);
}

inline double mux_trigger_prob(const MuxTopology& t, double reference_power_mw) {
  return mux_probs(t, reference_power_mw).p_trig;
}

inline double mux_coincidence_prob(const MuxTopology& t, double reference_power_mw) {
  return mux_probs(t, reference_power_mw).p_c;
}

inline double mux_accidental_prob(const MuxTopology& t, double reference_power_mw) {
  return mux_probs(t, reference_power_mw).p_a;
}

/// First pass has priority over the second.
inline MuxProbs hybrid_combine(const MuxProbs& pass1, const MuxProbs& pass2) {
  const double w = 1.0 - pass1.p_trig;
  MuxProbs m;
  m.p_trig = 1.0 - (1.0 - pass1.p_trig) * (1.0 - pass2.p_trig);
  m.p_c = pass1.p_c + w * pass2.p_c;
  m.p_a = pass1.p_a + w * pass2.p_a;
  m.p_single = pass1.p_single + w * pass2.p_single;
  m.p_multi = pass1.p_multi + w * pass2.p_multi;
  return m;
}

inline MuxTopology pass_subset(const MuxTopology& t, int pass) {
  MuxTopology out = t;
  out.bins.clear();
  for (const auto& b : t.bins)
    if (b.pass == pass) out.bins.push_back(b);
  return out;
}

inline RateReport to_report(const MuxProbs& m, double rep_rate_hz, double throughput_factor = 1.0) {
  return make_report(rep_rate_hz, throughput_factor * m.p_trig, throughput_factor * m.p_c,
                     throughput_factor * m.p_a);
}

/// MUX rates with the merged herald stream passed through `chain`.
inline RateReport mux_rates(const MuxTopology& t, double reference_power_mw, const DeadtimeChain& chain) {
  const MuxProbs m = mux_probs(t, reference_power_mw);
  const double s = throughput(t.rep_rate_hz * m.p_trig, chain);
  return to_report(m, t.rep_rate_hz, s);
}

/// Idealized multiplexed single-photon probability for N identical bins.
inline double simple_mux_single_prob(double p_trig, int n_bins, double p_single) {
  if (!(p_trig >= 0.0 && p_trig <= 1.0)) throw domain_error("p_trig must lie in [0, 1]");
  if (!(p_single >= 0.0 && p_single <= 1.0)) throw domain_error("p_single must lie in [0, 1]");
  if (n_bins < 1) throw domain_error("n_bins must be >= 1");
  return (1.0 - std::pow(1.0 - p_trig, n_bins)) * p_single;
}

/// Assign eta_sw to every bin from its routed path through `network`.
inline void assign_switch_paths(MuxTopology& t, const SwitchNetwork& network, int bins_per_pass) {
  for (auto& b : t.bins) b.eta_sw = network.path_transmission(route_bin(b.delay, bins_per_pass));
}

// ---------------------------------------------------------------------------
// Single-photon vs multi-photon emission tradeoff.

enum class LossMask {
  as_built,               // every loss, including saturation and measurement asymmetry
  extrinsic_removed,      // no deadtime chain, no measurement asymmetry
  switch_and_power_only,  // additionally eta_i = eta_s = 1; keeps switch loss and the reduced return-pass pump
};

struct EmissionPoint {
  double reference_power_mw = 0.0;
  double p_single = 0.0;
  double p_multi = 0.0;
};

struct TradeoffCurves {
  std::vector<EmissionPoint> mux;
  std::vector<std::string> single_names;
  std::vector<std::vector<EmissionPoint>> singles;
};

inline MuxTopology apply_loss_mask(MuxTopology t, LossMask mask) {
  if (mask == LossMask::as_built) return t;
  t.extrinsic_transmission = 1.0;
  if (mask == LossMask::switch_and_power_only)
    for (auto& b : t.bins) b.source.eta_i = b.source.eta_s = 1.0;
  return t;
}

/// Per-clock (p_single, p_multi) over `power_grid` for the MUX and for each
/// bin operated alone (no switch network, own pump fraction).
inline TradeoffCurves emission_tradeoff_curve(const MuxTopology& topology, LossMask mask,
                                              const std::vector<double>& power_grid, const DeadtimeChain& chain) {
  const MuxTopology t = apply_loss_mask(topology, mask);
  const DeadtimeChain eff_chain = mask == LossMask::as_built ? chain : DeadtimeChain{};
  validate(t);
  TradeoffCurves out;
  out.singles.resize(t.bins.size());
  for (const auto& b : t.bins) out.single_names.push_back(b.name);

  for (double p : power_grid) {
    const MuxProbs m = mux_probs(t, p);
    const double s = throughput(t.rep_rate_hz * m.p_trig, eff_chain);
    out.mux.push_back({p, s * m.p_single, s * m.p_multi});
    for (std::size_t i = 0; i < t.bins.size(); ++i) {
      const MuxBin& b = t.bins[i];
      const double xi = squeezing_for(b.source, t.bin_power_mw(b, p));
      SourceParams src = b.source;
      src.eta_i = effective_eta_i(src, xi, t.rep_rate_hz, eff_chain);
      const BinProbs bp = source_probs(src, xi, 1.0);
      out.singles[i].push_back({p, bp.p_single, bp.p_multi});
    }
  }
  return out;
}

/// Linear interpolation of p_single at a given p_multi along a curve whose
/// p_multi increases with power. Empty if p_multi is outside the curve.
inline std::optional<double> p_single_at_multi(const std::vector<EmissionPoint>& curve, double p_multi) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    if (p_multi >= a.p_multi && p_multi <= b.p_multi && b.p_multi > a.p_multi) {
      const double w = (p_multi - a.p_multi) / (b.p_multi - a.p_multi);
      return a.p_single + w * (b.p_single - a.p_single);
    }
  }
  return std::nullopt;
}

inline std::optional<double> best_single_at_multi(const TradeoffCurves& c, double p_multi) {
  std::optional<double> best;
  for (const auto& curve : c.singles)
    if (auto v = p_single_at_multi(curve, p_multi); v && (!best || *v > *best)) best = v;
  return best;
}

}  // namespace muxsim
