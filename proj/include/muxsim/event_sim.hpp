#pragma once

// Pulse-level Monte Carlo of the multiplexed source.
//
// Every clock cycle each bin's crystal emits n pairs (thermal law); idler
// photons are thinned by eta_i and clicked on a threshold detector, return-pass
// bins additionally see unpaired back-reflected clicks. The first heralded bin
// in priority order configures the switch network, its signal photons are
// thinned by eta_s and the routed path, and every other bin is discarded.
// Herald events pass through the deadtime chain and the FPGA idle time;
// only accepted heralds gate the output detector. Accidentals are counted
// against the output slot of the following clock cycle.
//
// The per-cycle sampling is embarrassingly parallel (counter-based streams);
// the deadtime gating is a sequential pass over the cycle records.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "muxsim/errors.hpp"
#include "muxsim/hsps.hpp"
#include "muxsim/mux.hpp"
#include "muxsim/rate_report.hpp"
#include "muxsim/rng.hpp"
#include "muxsim/routing.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim {

struct PulseTrainConfig {
  std::uint64_t n_clock_cycles = 1'000'000;
  int bins_per_cycle = 4;  // per pass
  MuxTopology topology;
  double reference_power_mw = 5.0;
  DeadtimeChain deadtime_chain;  // amplifier stages, applied before the idle time
  double idle_time_s = 2e-6;
  std::uint64_t rng_seed = 1;
  unsigned threads = 0;  // 0: MUXSIM_THREADS or hardware concurrency
  std::uint64_t batch_cycles = 1u << 16;

  DeadtimeChain full_chain() const { return idle_time_s > 0.0 ? deadtime_chain.then(idle_time_s) : deadtime_chain; }
};

inline void validate(const PulseTrainConfig& c) {
  if (c.n_clock_cycles == 0) throw config_error("n_clock_cycles must be >= 1");
  if (c.bins_per_cycle < 1 || c.bins_per_cycle > 64) throw config_error("bins_per_cycle must lie in [1, 64]");
  if (c.batch_cycles == 0) throw config_error("batch_cycles must be >= 1");
  if (!(c.reference_power_mw >= 0.0)) throw config_error("reference_power_mw must be >= 0");
  if (!(c.idle_time_s >= 0.0)) throw config_error("idle_time_s must be >= 0");
  validate(c.topology);
  if (c.topology.bins.empty()) throw config_error("topology has no bins");
  if (c.topology.bins.size() > 127) throw config_error("at most 127 bins supported");
  if (!(c.bins_per_cycle * c.topology.bin_spacing_s < 1.0 / c.topology.rep_rate_hz))
    throw config_error("bins do not fit in one clock period");
  for (const auto& b : c.topology.bins)
    if (b.delay < 0 || b.delay >= c.bins_per_cycle)
      throw config_error("bin " + b.name + " has delay outside the cycle");
}

struct CycleRecord {
  static constexpr std::uint8_t kBackReflection = 1;  // herald came from a back-reflected photon only
  static constexpr std::uint8_t kAccepted = 2;        // herald survived the deadtime chain
  static constexpr std::uint8_t kSignalClick = 4;     // routed output slot clicked
  static constexpr std::uint8_t kShiftedClick = 8;    // output slot of the next cycle clicked

  std::int8_t herald_bin = -1;
  std::uint8_t flags = 0;
  std::uint8_t loop_mask = 0;
  std::uint8_t output_photons = 0;

  bool heralded() const noexcept { return herald_bin >= 0; }
  bool has(std::uint8_t f) const noexcept { return (flags & f) != 0; }
  bool accepted() const noexcept { return has(kAccepted); }
  bool coincidence() const noexcept { return accepted() && has(kSignalClick); }
  bool accidental() const noexcept { return accepted() && has(kShiftedClick); }
};

struct SimCounts {
  std::uint64_t cycles = 0;
  std::uint64_t heralds = 0;  // before deadtimes
  std::uint64_t accepted = 0;
  std::uint64_t coincidences = 0;
  std::uint64_t accidentals = 0;
  std::uint64_t single_photon = 0;  // accepted and exactly one photon at the output
  std::uint64_t multi_photon = 0;   // accepted and two or more photons at the output
  std::uint64_t back_reflection_heralds = 0;
  std::vector<std::uint64_t> accepted_per_bin;
};

struct EventTrace {
  std::vector<CycleRecord> cycles;
  SimCounts counts;
  double rep_rate_hz = 0.0;
};

struct SimResult {
  EventTrace trace;
  RateReport report;
};

inline unsigned default_threads() {
  if (const char* env = std::getenv("MUXSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {

enum StreamPurpose : std::uint32_t { kPairs = 0, kIdler = 1, kBack = 2, kSignal = 3, kShifted = 4 };

struct BinPlan {
  double xi = 0.0;
  double eta_i = 0.0;
  double eta_s = 0.0;
  double eta_path = 1.0;
  double p_back = 0.0;
  std::uint8_t loop_mask = 0;
};

inline std::vector<BinPlan> plan_bins(const PulseTrainConfig& c) {
  std::vector<BinPlan> plan;
  for (const auto& b : c.topology.bins) {
    BinPlan p;
    p.xi = squeezing_for(b.source, c.topology.bin_power_mw(b, c.reference_power_mw));
    p.eta_i = b.source.eta_i;
    p.eta_s = b.source.eta_s;
    p.eta_path = b.eta_sw * c.topology.extrinsic_transmission;
    p.p_back = b.source.back_reflection_fraction * p_trig_idler(p.xi, p.eta_i);
    p.loop_mask = static_cast<std::uint8_t>(route_bin(b.delay, c.bins_per_cycle).loop_mask);
    plan.push_back(p);
  }
  return plan;
}

inline std::uint32_t delivered_photons(std::uint32_t n, const BinPlan& p, CounterRng& rng) {
  return thin(thin(n, p.eta_s, rng), p.eta_path, rng);
}

inline CycleRecord sample_cycle(std::uint64_t seed, std::uint64_t t, const std::vector<BinPlan>& plan) {
  CycleRecord rec;
  for (std::size_t b = 0; b < plan.size(); ++b) {
    const BinPlan& p = plan[b];
    const auto lane = static_cast<std::uint32_t>(b);
    CounterRng pairs(seed, t, lane, kPairs);
    const std::uint32_t n = sample_pair_count(p.xi, pairs);
    CounterRng idler(seed, t, lane, kIdler);
    const bool true_click = thin(n, p.eta_i, idler) > 0;
    CounterRng back(seed, t, lane, kBack);
    const bool back_click = bernoulli(p.p_back, back);
    if (!true_click && !back_click) continue;

    rec.herald_bin = static_cast<std::int8_t>(b);
    rec.loop_mask = p.loop_mask;
    if (!true_click) rec.flags |= CycleRecord::kBackReflection;
    CounterRng signal(seed, t, lane, kSignal);
    const std::uint32_t out = delivered_photons(n, p, signal);
    rec.output_photons = static_cast<std::uint8_t>(std::min<std::uint32_t>(out, 255));
    if (out > 0) rec.flags |= CycleRecord::kSignalClick;

    // Same switch setting, gate shifted by one clock cycle: photons of this bin in cycle t + 1.
    CounterRng next_pairs(seed, t + 1, lane, kPairs);
    const std::uint32_t n_next = sample_pair_count(p.xi, next_pairs);
    CounterRng shifted(seed, t + 1, lane, kShifted);
    if (delivered_photons(n_next, p, shifted) > 0) rec.flags |= CycleRecord::kShiftedClick;
    break;  // lower-priority bins are discarded
  }
  return rec;
}

// Nonparalyzable stages in series, evaluated at clock-cycle resolution.
class HeraldGate {
 public:
  HeraldGate(const DeadtimeChain& chain, double rep_rate_hz) {
    for (double d : chain.stages()) dead_cycles_.push_back(static_cast<std::int64_t>(std::llround(d * rep_rate_hz)));
    last_.assign(dead_cycles_.size(), kNever);
  }

  bool offer(std::int64_t t) {
    for (std::size_t j = 0; j < dead_cycles_.size(); ++j) {
      if (last_[j] != kNever && t - last_[j] <= dead_cycles_[j]) return false;
      last_[j] = t;
    }
    return true;
  }

 private:
  static constexpr std::int64_t kNever = INT64_MIN;
  std::vector<std::int64_t> dead_cycles_;
  std::vector<std::int64_t> last_;
};

}  // namespace detail

inline RateReport report_from_counts(const SimCounts& c, double rep_rate_hz) {
  const double n = static_cast<double>(c.cycles);
  auto se = [&](std::uint64_t k) {
    const double p = static_cast<double>(k) / n;
    return rep_rate_hz * std::sqrt(p * (1.0 - p) / n);
  };
  RateReport r = make_report(rep_rate_hz, c.accepted / n, c.coincidences / n, c.accidentals / n);
  RateErrors e;
  e.r_trig_hz = se(c.accepted);
  e.r_coincidence_hz = se(c.coincidences);
  e.r_accidental_hz = se(c.accidentals);
  if (c.coincidences > 0 && c.accidentals > 0) {
    const double car = static_cast<double>(c.coincidences) / static_cast<double>(c.accidentals);
    e.car = car * std::sqrt(1.0 / c.coincidences + 1.0 / c.accidentals);
  }
  r.errors = e;
  return r;
}

/// Run the pulse train. Identical config and seed give a bit-identical trace for any thread count.
inline SimResult run_pulse_train(const PulseTrainConfig& config) {
  validate(config);
  const auto plan = detail::plan_bins(config);
  const std::uint64_t n = config.n_clock_cycles;

  EventTrace trace;
  trace.rep_rate_hz = config.topology.rep_rate_hz;
  trace.cycles.resize(n);

  const std::uint64_t n_batches = (n + config.batch_cycles - 1) / config.batch_cycles;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(config.threads ? config.threads : default_threads(), n_batches));
  std::atomic<std::uint64_t> next_batch{0};
  auto work = [&] {
    for (std::uint64_t k; (k = next_batch.fetch_add(1)) < n_batches;) {
      const std::uint64_t begin = k * config.batch_cycles;
      const std::uint64_t end = std::min(n, begin + config.batch_cycles);
      for (std::uint64_t t = begin; t < end; ++t) trace.cycles[t] = detail::sample_cycle(config.rng_seed, t, plan);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  SimCounts& c = trace.counts;
  c.cycles = n;
  c.accepted_per_bin.assign(plan.size(), 0);
  detail::HeraldGate gate(config.full_chain(), config.topology.rep_rate_hz);
  for (std::uint64_t t = 0; t < n; ++t) {
    CycleRecord& rec = trace.cycles[t];
    if (!rec.heralded()) continue;
    ++c.heralds;
    if (!gate.offer(static_cast<std::int64_t>(t))) continue;
    rec.flags |= CycleRecord::kAccepted;
    ++c.accepted;
    ++c.accepted_per_bin[static_cast<std::size_t>(rec.herald_bin)];
    if (rec.has(CycleRecord::kBackReflection)) ++c.back_reflection_heralds;
    if (rec.coincidence()) ++c.coincidences;
    if (rec.accidental()) ++c.accidentals;
    if (rec.output_photons == 1) ++c.single_photon;
    if (rec.output_photons >= 2) ++c.multi_photon;
  }
  return {std::move(trace), report_from_counts(c, config.topology.rep_rate_hz)};
}

struct EstimatedRate {
  double rate_hz = 0.0;
  double stderr_hz = 0.0;
};

/// Accidental rate from herald clicks against the output gate one clock cycle later.
inline EstimatedRate accidental_estimator(const EventTrace& trace) {
  if (trace.cycles.size() < 2) throw config_error("accidental estimation needs at least two cycles");
  std::uint64_t k = 0;
  for (const auto& rec : trace.cycles) k += rec.accidental();
  const double n = static_cast<double>(trace.cycles.size());
  const double p = k / n;
  return {trace.rep_rate_hz * p, trace.rep_rate_hz * std::sqrt(p * (1.0 - p) / n)};
}

/// One row per clock cycle.
inline void write_trace_csv(std::ostream& os, const EventTrace& trace, const MuxTopology& topology) {
  os << "cycle,herald_bin,pass,delay,back_reflection,accepted,loop_mask,output_photons,coincidence,accidental\n";
  for (std::size_t t = 0; t < trace.cycles.size(); ++t) {
    const auto& r = trace.cycles[t];
    os << t << ',' << int{r.herald_bin} << ',';
    if (r.heralded()) {
      const auto& b = topology.bins[static_cast<std::size_t>(r.herald_bin)];
      os << b.pass << ',' << b.delay << ',';
    } else {
      os << ",,";
    }
    os << int{r.has(CycleRecord::kBackReflection)} << ',' << int{r.accepted()} << ',' << int{r.loop_mask} << ','
       << int{r.output_photons} << ',' << int{r.coincidence()} << ',' << int{r.accidental()} << '\n';
  }
}

}  // namespace muxsim
