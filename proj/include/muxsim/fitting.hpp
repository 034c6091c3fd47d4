#pragma once

// Recovery of per-source parameters (eta_i, eta_s, P_seed and, for return-pass
// sources, the back-reflection fraction f) from trigger / coincidence /
// accidental rates over a power sweep, by maximizing the mean R^2 of the three
// series. The deadtime chain is applied to predicted herald rates inside the
// objective.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "muxsim/errors.hpp"
#include "muxsim/event_sim.hpp"
#include "muxsim/hsps.hpp"
#include "muxsim/nelder_mead.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim {

struct Observation {
  double reference_power_mw = 0.0;
  double r_trig_hz = 0.0;
  double r_c_hz = 0.0;
  double r_a_hz = 0.0;
};

enum class ModelKind { pass1, pass2 };

struct FitBounds {
  double eta_lo = 1e-4, eta_hi = 0.5;
  double p_seed_lo = 0.5, p_seed_hi = 50.0;
  double f_lo = 0.0, f_hi = 1.0;
};

struct FitOptions {
  ModelKind kind = ModelKind::pass1;
  DeadtimeChain chain;
  double rep_rate_hz = 80e6;
  double pump_fraction = 1.0;  // source power = reference power x pump_fraction
  int n_starts = 16;
  std::uint64_t seed = 20151;
  FitBounds bounds;
  int max_iterations = 4000;
  unsigned threads = 0;
  // Pass-2 only: hold f at a known value instead of fitting it.
  std::optional<double> fixed_back_reflection;
};

struct FitResult {
  SourceParams params;
  double r2_trig = 0.0;
  double r2_c = 0.0;
  double r2_a = 0.0;
  double r2_mean = 0.0;
  double objective = 0.0;  // mean R^2 in the space the fit was run in
  bool converged = false;
  int iterations = 0;
  std::size_t best_start = 0;
  std::vector<double> start_objectives;
};

/// Coefficient of determination 1 - SS_res / SS_tot (negative for fits worse than the mean).
inline double r_squared(const std::vector<double>& predicted, const std::vector<double>& observed) {
  if (predicted.size() != observed.size()) throw domain_error("r_squared: length mismatch");
  if (observed.size() < 2) throw domain_error("r_squared: need at least two points");
  const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / observed.size();
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
    ss_res += (predicted[i] - observed[i]) * (predicted[i] - observed[i]);
  }
  if (!(ss_tot > 0.0)) throw domain_error("r_squared: observed values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

/// Model prediction for one observation power.
inline RateReport predict_rates(const SourceParams& p, double reference_power_mw, const FitOptions& opt) {
  return saturated_rates(p, reference_power_mw * opt.pump_fraction, opt.rep_rate_hz, opt.chain);
}

namespace detail {

struct Series {
  std::vector<double> obs[3];
  bool log_space[3] = {false, false, false};
};

inline Series make_series(const std::vector<Observation>& data) {
  Series s;
  for (const auto& o : data) {
    s.obs[0].push_back(o.r_trig_hz);
    s.obs[1].push_back(o.r_c_hz);
    s.obs[2].push_back(o.r_a_hz);
  }
  for (int k = 0; k < 3; ++k) {
    s.log_space[k] = std::all_of(s.obs[k].begin(), s.obs[k].end(), [](double v) { return v > 0.0; });
    if (s.log_space[k])
      for (auto& v : s.obs[k]) v = std::log(v);
  }
  return s;
}

inline double reflect(double v, double lo, double hi) {
  const double w = hi - lo;
  if (w <= 0.0) return lo;
  double u = std::fmod(v - lo, 2.0 * w);
  if (u < 0.0) u += 2.0 * w;
  if (u > w) u = 2.0 * w - u;
  return lo + u;
}

struct Space {
  std::vector<double> lo, hi;
  double fixed_f = 0.0;
};

inline Space search_space(const FitOptions& opt) {
  const auto& b = opt.bounds;
  Space s;
  s.lo = {std::log(b.eta_lo), std::log(b.eta_lo), std::log(b.p_seed_lo)};
  s.hi = {std::log(b.eta_hi), std::log(b.eta_hi), std::log(b.p_seed_hi)};
  if (opt.kind == ModelKind::pass2 && !opt.fixed_back_reflection) {
    s.lo.push_back(b.f_lo);
    s.hi.push_back(b.f_hi);
  }
  s.fixed_f = opt.kind == ModelKind::pass2 ? opt.fixed_back_reflection.value_or(0.0) : 0.0;
  return s;
}

inline SourceParams decode(const std::vector<double>& z, const Space& sp) {
  SourceParams p;
  p.eta_i = std::exp(reflect(z[0], sp.lo[0], sp.hi[0]));
  p.eta_s = std::exp(reflect(z[1], sp.lo[1], sp.hi[1]));
  p.p_seed_mw = std::exp(reflect(z[2], sp.lo[2], sp.hi[2]));
  p.back_reflection_fraction = z.size() > 3 ? reflect(z[3], sp.lo[3], sp.hi[3]) : sp.fixed_f;
  return p;
}

// Per-series R^2 in fit space; NaN-free (-inf on invalid predictions).
inline std::array<double, 3> series_r2(const SourceParams& p, const std::vector<Observation>& data, const Series& s,
                                       const FitOptions& opt, bool fit_space) {
  std::vector<double> pred[3];
  for (const auto& o : data) {
    RateReport r;
    try {
      r = predict_rates(p, o.reference_power_mw, opt);
    } catch (const std::exception&) {
      return {-INFINITY, -INFINITY, -INFINITY};
    }
    pred[0].push_back(r.r_trig_hz);
    pred[1].push_back(r.r_coincidence_hz);
    pred[2].push_back(r.r_accidental_hz);
  }
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    std::vector<double> obs = s.obs[k];
    if (fit_space && s.log_space[k]) {
      for (auto& v : pred[k]) {
        if (!(v > 0.0)) return {-INFINITY, -INFINITY, -INFINITY};
        v = std::log(v);
      }
    } else if (s.log_space[k]) {
      for (auto& v : obs) v = std::exp(v);
    }
    out[k] = r_squared(pred[k], obs);
  }
  return out;
}

inline double mean3(const std::array<double, 3>& a) { return (a[0] + a[1] + a[2]) / 3.0; }

struct StartOutcome {
  std::vector<double> z;
  double objective = -INFINITY;
  double start_objective = -INFINITY;
  bool converged = false;
  int iterations = 0;
};

}  // namespace detail

/// Multi-start simplex fit. Deterministic for a fixed options.seed.
inline FitResult fit_source(const std::vector<Observation>& data, const FitOptions& opt) {
  std::set<double> powers;
  for (const auto& o : data) {
    if (!(o.r_trig_hz >= 0.0 && o.r_c_hz >= 0.0 && o.r_a_hz >= 0.0) || !(o.reference_power_mw >= 0.0))
      throw fit_error("observations must have non-negative powers and rates");
    powers.insert(o.reference_power_mw);
  }
  if (data.size() < 4 || powers.size() < 3) throw fit_error("need >= 4 observations spanning >= 3 distinct powers");
  if (opt.n_starts < 1) throw fit_error("need at least one start");
  if (opt.fixed_back_reflection && !(*opt.fixed_back_reflection >= 0.0)) throw fit_error("fixed f must be >= 0");

  const detail::Series series = detail::make_series(data);
  for (int k = 0; k < 3; ++k) {
    const auto& v = series.obs[k];
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }))
      throw fit_error("an observed rate series has zero variance");
  }
  const detail::Space space = detail::search_space(opt);
  const std::size_t dim = space.lo.size();

  auto neg_objective = [&](const std::vector<double>& z) {
    return -detail::mean3(detail::series_r2(detail::decode(z, space), data, series, opt, true));
  };

  // Latin hypercube over the (log) box.
  std::mt19937_64 rng(opt.seed);
  std::vector<std::vector<double>> starts(static_cast<std::size_t>(opt.n_starts), std::vector<double>(dim));
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<int> strata(static_cast<std::size_t>(opt.n_starts));
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k < starts.size(); ++k)
      starts[k][d] = space.lo[d] + (strata[k] + u(rng)) / opt.n_starts * (space.hi[d] - space.lo[d]);
  }

  std::vector<detail::StartOutcome> outcomes(starts.size());
  auto run_start = [&](std::size_t k) {
    detail::StartOutcome& out = outcomes[k];
    out.start_objective = -neg_objective(starts[k]);
    NelderMeadOptions nm;
    nm.max_iterations = opt.max_iterations;
    nm.x_tolerance = 1e-10;
    nm.f_tolerance = 1e-14;
    nm.initial_step.assign(dim, 0.25);
    std::vector<double> z = starts[k];
    double best = -out.start_objective;
    for (int round = 0; round < 6; ++round) {
      const auto r = nelder_mead(neg_objective, z, nm);
      out.iterations += r.iterations;
      const bool improved = r.value < best - 1e-15 * std::abs(best);
      if (r.value <= best) {
        best = r.value;
        z = r.x;
      }
      out.converged = r.converged;
      if (!improved && round > 0) break;
      nm.initial_step.assign(dim, 0.02);
    }
    for (std::size_t d = 0; d < dim; ++d) z[d] = detail::reflect(z[d], space.lo[d], space.hi[d]);
    out.z = z;
    out.objective = -best;
  };

  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(opt.threads ? opt.threads : default_threads(), starts.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < starts.size();) run_start(k);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  // Best objective, ties broken by start index.
  std::size_t best = 0;
  for (std::size_t k = 1; k < outcomes.size(); ++k)
    if (outcomes[k].objective > outcomes[best].objective) best = k;
  if (!std::isfinite(outcomes[best].objective)) throw fit_error("no start reached a finite objective");

  FitResult res;
  res.params = detail::decode(outcomes[best].z, space);
  res.objective = outcomes[best].objective;
  res.converged = outcomes[best].converged;
  res.best_start = best;
  for (const auto& o : outcomes) {
    res.iterations += o.iterations;
    res.start_objectives.push_back(o.start_objective);
  }
  const auto r2 = detail::series_r2(res.params, data, series, opt, false);
  res.r2_trig = r2[0];
  res.r2_c = r2[1];
  res.r2_a = r2[2];
  res.r2_mean = detail::mean3(r2);
  return res;
}

struct SourceObservations {
  std::string name;
  std::vector<Observation> observations;
  double pump_fraction = 1.0;
};

struct FitRow {
  std::string name;
  std::optional<FitResult> result;
  std::string error;
};

/// Independent fits per source; a failing source yields a row with `error` set.
inline std::vector<FitRow> fit_all(const std::vector<SourceObservations>& table, const FitOptions& opt) {
  std::vector<FitRow> rows;
  for (const auto& src : table) {
    FitRow row;
    row.name = src.name;
    FitOptions o = opt;
    o.pump_fraction = src.pump_fraction;
    try {
      row.result = fit_source(src.observations, o);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace muxsim
