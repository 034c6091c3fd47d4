#pragma once

// The five muxsim commands. Each writes its files into `out_dir` and returns
// the paths written. CSV is the authoritative output; SVG files are views.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "muxsim/csv.hpp"
#include "muxsim/event_sim.hpp"
#include "muxsim/figures.hpp"
#include "muxsim/fitting.hpp"
#include "muxsim/scenario.hpp"
#include "muxsim/spectral.hpp"
#include "muxsim/svg.hpp"

namespace muxsim {

using Files = std::vector<std::filesystem::path>;

namespace detail {

inline std::filesystem::path prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

inline std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline void save(const CsvWriter& w, const std::filesystem::path& p, Files& files) {
  w.save(p.string());
  files.push_back(p);
}

inline void save(const std::string& svg_path, const ChartSpec& spec, const std::vector<ChartSeries>& s, Files& files) {
  save_line_chart(svg_path, spec, s);
  files.emplace_back(svg_path);
}

// Named curve families drawn by `model` and `car`: MUX-8, MUX-4 (forward pass only) and every bin alone.
struct Curve {
  std::string series;
  std::string variant;
  std::vector<double> power;
  std::vector<RateReport> rates;
};

inline std::vector<Curve> rate_curves(const Scenario& sc) {
  const Setup built{sc.topology, sc.herald_chain()};
  const Setup clean = without_extrinsic_loss(built);
  const auto powers = sc.sweep.powers();
  std::vector<Curve> out;
  for (const auto& [setup, variant] : {std::pair{built, "saturated"}, std::pair{clean, "extrinsic_removed"}}) {
    const Setup mux4{pass_subset(setup.topology, 1), setup.chain};
    Curve c8{"mux8", variant, powers, {}}, c4{"mux4", variant, powers, {}};
    for (double p : powers) {
      c8.rates.push_back(mux_output_rates(setup, p));
      if (!mux4.topology.bins.empty()) c4.rates.push_back(mux_output_rates(mux4, p));
    }
    out.push_back(std::move(c8));
    if (!mux4.topology.bins.empty()) out.push_back(std::move(c4));
    for (const auto& b : setup.topology.bins) {
      Curve c{b.name, variant, powers, {}};
      for (double p : powers) c.rates.push_back(single_source_rates(setup, b, p));
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace detail

/// Rates vs pump power for MUX-8, MUX-4 and each source, with and without
/// extrinsic loss; emission tradeoff; trigger enhancement.
inline Files cmd_model(const Scenario& sc, const std::filesystem::path& out_dir) {
  validate(sc);
  const auto dir = detail::prepare_out_dir(out_dir);
  Files files;
  const auto curves = detail::rate_curves(sc);

  // Curves come as two equal halves: saturated, then extrinsic_removed, same series order.
  const std::size_t half = curves.size() / 2;
  CsvWriter rates({"series", "reference_power_mw", "r_trig_hz", "r_coincidence_hz", "r_accidental_hz", "car",
                   "r_trig_hz_extrinsic_removed", "r_coincidence_hz_extrinsic_removed",
                   "r_accidental_hz_extrinsic_removed", "car_extrinsic_removed"});
  for (std::size_t k = 0; k < half; ++k) {
    const auto& c = curves[k];
    const auto& x = curves[k + half];
    for (std::size_t i = 0; i < c.power.size(); ++i) {
      const auto& r = c.rates[i];
      const auto& q = x.rates[i];
      rates.row({c.series, format_double(c.power[i]), format_double(r.r_trig_hz), format_double(r.r_coincidence_hz),
                 format_double(r.r_accidental_hz), detail::opt_cell(r.car), format_double(q.r_trig_hz),
                 format_double(q.r_coincidence_hz), format_double(q.r_accidental_hz), detail::opt_cell(q.car)});
    }
  }
  detail::save(rates, dir / "rates_vs_power.csv", files);

  std::vector<ChartSeries> trig, coinc;
  for (const auto& c : curves) {
    const bool dashed = c.variant != "saturated";
    if (dashed && c.series != "mux8" && c.series != "mux4") continue;
    ChartSeries t{c.series + (dashed ? " (no extrinsic loss)" : ""), c.power, {}, dashed};
    ChartSeries k = t;
    for (const auto& r : c.rates) {
      t.y.push_back(r.r_trig_hz);
      k.y.push_back(r.r_coincidence_hz);
    }
    trig.push_back(std::move(t));
    coinc.push_back(std::move(k));
  }
  detail::save((dir / "rates_vs_power.svg").string(),
               {"Trigger rate vs pump power", "reference pump power (mW)", "trigger rate (Hz)", true}, trig, files);
  detail::save((dir / "coincidences_vs_power.svg").string(),
               {"Coincidence rate vs pump power", "reference pump power (mW)", "coincidence rate (Hz)", true}, coinc,
               files);

  const Setup built{sc.topology, sc.herald_chain()};
  const Setup clean = without_extrinsic_loss(built);
  CsvWriter enh({"reference_power_mw", "trigger_enhancement", "trigger_enhancement_extrinsic_removed"});
  for (double p : sc.sweep.powers()) {
    if (!(p > 0.0)) continue;
    enh.row({format_double(p), format_double(trigger_enhancement(built, p)), format_double(trigger_enhancement(clean, p))});
  }
  detail::save(enh, dir / "trigger_enhancement.csv", files);

  CsvWriter trade({"series", "variant", "reference_power_mw", "p_single", "p_multi"});
  for (const auto& [mask, variant] : {std::pair{LossMask::as_built, "saturated"},
                                      std::pair{LossMask::extrinsic_removed, "extrinsic_removed"}}) {
    const auto tc = emission_tradeoff_curve(sc.topology, mask, sc.sweep.powers(), sc.herald_chain());
    for (const auto& pt : tc.mux)
      trade.row({"mux8", variant, format_double(pt.reference_power_mw), format_double(pt.p_single),
                 format_double(pt.p_multi)});
    for (std::size_t i = 0; i < tc.singles.size(); ++i)
      for (const auto& pt : tc.singles[i])
        trade.row({tc.single_names[i], variant, format_double(pt.reference_power_mw), format_double(pt.p_single),
                   format_double(pt.p_multi)});
  }
  detail::save(trade, dir / "emission_tradeoff.csv", files);
  return files;
}

struct SimulateOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cycles;
  std::optional<bool> write_trace;
  unsigned threads = 0;
};

struct SimulationSummary {
  RateReport simulated;
  RateReport analytic;
  double z_trig = 0.0, z_coincidence = 0.0, z_accidental = 0.0;
};

inline PulseTrainConfig pulse_train_config(const Scenario& sc, const SimulateOptions& opt = {}) {
  PulseTrainConfig c;
  c.n_clock_cycles = opt.cycles.value_or(sc.simulation.cycles);
  c.bins_per_cycle = sc.bins_per_pass;
  c.topology = sc.topology;
  c.reference_power_mw = sc.simulation.reference_power_mw;
  c.deadtime_chain = sc.amplifier_chain();
  c.idle_time_s = sc.idle_time_s;
  c.rng_seed = opt.seed.value_or(sc.simulation.seed);
  c.threads = opt.threads;
  return c;
}

/// Pulse-train simulation at the scenario's reference power, compared with
/// the analytic model. z = (simulated - analytic) / binomial standard error of the analytic rate.
inline Files cmd_simulate(const Scenario& sc, const std::filesystem::path& out_dir, const SimulateOptions& opt = {},
                          SimulationSummary* summary = nullptr, std::ostream* log = nullptr) {
  validate(sc);
  const PulseTrainConfig cfg = pulse_train_config(sc, opt);
  validate(cfg);
  const auto dir = detail::prepare_out_dir(out_dir);
  Files files;

  const SimResult sim = run_pulse_train(cfg);
  const RateReport an = mux_rates(cfg.topology, cfg.reference_power_mw, cfg.full_chain());
  const RateErrors& se = *sim.report.errors;
  // Binomial standard error under the analytic model, so z stays finite when no events were seen.
  const double n = static_cast<double>(cfg.n_clock_cycles), rep = cfg.topology.rep_rate_hz;
  auto z = [&](double mc, double model) {
    const double p = std::clamp(model / rep, 0.0, 1.0);
    const double err = rep * std::sqrt(p * (1.0 - p) / n);
    return err > 0.0 ? (mc - model) / err : (mc == model ? 0.0 : std::copysign(INFINITY, mc - model));
  };
  SimulationSummary s{sim.report, an, z(sim.report.r_trig_hz, an.r_trig_hz),
                      z(sim.report.r_coincidence_hz, an.r_coincidence_hz),
                      z(sim.report.r_accidental_hz, an.r_accidental_hz)};

  CsvWriter w({"quantity", "simulated", "stderr", "analytic", "z"});
  w.row({"r_trig_hz", format_double(sim.report.r_trig_hz), format_double(se.r_trig_hz), format_double(an.r_trig_hz),
         format_double(s.z_trig)});
  w.row({"r_coincidence_hz", format_double(sim.report.r_coincidence_hz), format_double(se.r_coincidence_hz),
         format_double(an.r_coincidence_hz), format_double(s.z_coincidence)});
  w.row({"r_accidental_hz", format_double(sim.report.r_accidental_hz), format_double(se.r_accidental_hz),
         format_double(an.r_accidental_hz), format_double(s.z_accidental)});
  w.row({"car", detail::opt_cell(sim.report.car), detail::opt_cell(se.car), detail::opt_cell(an.car), ""});
  detail::save(w, dir / "simulation_report.csv", files);

  CsvWriter bins({"bin", "pass", "delay", "accepted_heralds"});
  for (std::size_t i = 0; i < cfg.topology.bins.size(); ++i) {
    const auto& b = cfg.topology.bins[i];
    bins.row({b.name, std::to_string(b.pass), std::to_string(b.delay),
              std::to_string(sim.trace.counts.accepted_per_bin[i])});
  }
  detail::save(bins, dir / "simulation_bins.csv", files);

  if (opt.write_trace.value_or(sc.simulation.write_trace)) {
    const auto p = dir / "trace.csv";
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    write_trace_csv(f, sim.trace, cfg.topology);
    if (!f.flush()) throw std::runtime_error("write failed: " + p.string());
    files.push_back(p);
  }

  if (log) {
    *log << "z-scores (simulated vs analytic): trig " << s.z_trig << ", coincidence " << s.z_coincidence
         << ", accidental " << s.z_accidental << "\n";
  }
  if (summary) *summary = s;
  return files;
}

/// Observations grouped by source, in order of first appearance.
/// Columns: [source,] power_mw, r_trig, r_c, r_a.
inline std::vector<SourceObservations> read_observations(const CsvTable& t) {
  const auto src = t.column("source");
  std::ptrdiff_t col[4];
  const char* names[4] = {"power_mw", "r_trig", "r_c", "r_a"};
  for (int k = 0; k < 4; ++k) {
    col[k] = t.column(names[k]);
    if (col[k] < 0) throw parse_error(std::string("missing column ") + names[k], 1);
  }
  std::vector<SourceObservations> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::size_t line = t.row_lines[i];
    const std::string name = src >= 0 ? r[static_cast<std::size_t>(src)] : std::string("source");
    if (name.empty()) throw parse_error("empty source name", line);
    Observation o;
    o.reference_power_mw = parse_double(r[static_cast<std::size_t>(col[0])], line);
    o.r_trig_hz = parse_double(r[static_cast<std::size_t>(col[1])], line);
    o.r_c_hz = parse_double(r[static_cast<std::size_t>(col[2])], line);
    o.r_a_hz = parse_double(r[static_cast<std::size_t>(col[3])], line);
    auto [it, fresh] = index.emplace(name, out.size());
    if (fresh) out.push_back({name, {}, 1.0});
    out[it->second].observations.push_back(o);
  }
  return out;
}

inline CsvWriter observations_csv(const std::vector<SourceObservations>& table) {
  CsvWriter w({"source", "power_mw", "r_trig", "r_c", "r_a"});
  for (const auto& s : table)
    for (const auto& o : s.observations)
      w.row({s.name, format_double(o.reference_power_mw), format_double(o.r_trig_hz), format_double(o.r_c_hz),
             format_double(o.r_a_hz)});
  return w;
}

struct FitCommandOptions {
  ModelKind kind = ModelKind::pass1;
  std::optional<double> fixed_back_reflection;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

/// Fit each source of an observations file. A source whose name matches a
/// scenario bin uses that bin's pump fraction (power column is the reference
/// power); otherwise the power column is taken as the source's own pump power.
inline Files cmd_fit(const std::filesystem::path& observations_csv, const Scenario& sc,
                     const std::filesystem::path& out_dir, const FitCommandOptions& opt = {},
                     std::vector<FitRow>* rows_out = nullptr) {
  validate(sc);
  auto table = read_observations(read_csv_file(observations_csv.string()));
  for (auto& s : table)
    for (const auto& b : sc.topology.bins)
      if (b.name == s.name) s.pump_fraction = sc.topology.bin_power_mw(b, 1.0);
  const auto dir = detail::prepare_out_dir(out_dir);

  FitOptions fo;
  fo.kind = opt.kind;
  fo.chain = sc.herald_chain();
  fo.rep_rate_hz = sc.topology.rep_rate_hz;
  fo.threads = opt.threads;
  fo.fixed_back_reflection = opt.fixed_back_reflection;
  if (opt.seed) fo.seed = *opt.seed;
  const auto rows = fit_all(table, fo);

  Files files;
  CsvWriter w({"source", "eta_i", "eta_s", "p_seed_mw", "back_reflection_fraction", "r2_trig", "r2_c", "r2_a", "r2_mean",
               "converged", "error"});
  for (const auto& r : rows) {
    if (!r.result) {
      std::string msg = r.error;
      std::replace_if(msg.begin(), msg.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; }, ';');
      w.row({r.name, "", "", "", "", "", "", "", "", "0", msg});
      continue;
    }
    const auto& f = *r.result;
    w.row({r.name, format_double(f.params.eta_i), format_double(f.params.eta_s), format_double(f.params.p_seed_mw),
           format_double(f.params.back_reflection_fraction), format_double(f.r2_trig), format_double(f.r2_c),
           format_double(f.r2_a), format_double(f.r2_mean), f.converged ? "1" : "0", ""});
  }
  detail::save(w, dir / "fit_results.csv", files);
  if (rows_out) *rows_out = rows;
  return files;
}

/// Coincidence rate vs CAR with pump power as the parameter, and the MUX
/// enhancement over stand-alone sources at matched CAR.
inline Files cmd_car(const Scenario& sc, const std::filesystem::path& out_dir) {
  validate(sc);
  const auto dir = detail::prepare_out_dir(out_dir);
  Files files;
  const auto curves = detail::rate_curves(sc);

  CsvWriter w({"series", "variant", "reference_power_mw", "car", "r_coincidence_hz"});
  std::vector<ChartSeries> chart;
  for (const auto& c : curves) {
    ChartSeries s{c.series + (c.variant == "saturated" ? "" : " (no extrinsic loss)"), {}, {}, c.variant != "saturated"};
    for (std::size_t i = 0; i < c.power.size(); ++i) {
      const auto& r = c.rates[i];
      w.row({c.series, c.variant, format_double(c.power[i]), detail::opt_cell(r.car), format_double(r.r_coincidence_hz)});
      if (r.car) {
        s.x.push_back(*r.car);
        s.y.push_back(r.r_coincidence_hz);
      }
    }
    if (c.variant == "saturated" || c.series == "mux8") chart.push_back(std::move(s));
  }
  detail::save(w, dir / "car_curves.csv", files);
  detail::save((dir / "car_curves.svg").string(), {"Coincidence rate vs CAR", "CAR", "coincidence rate (Hz)", true},
               chart, files);

  const Setup built{sc.topology, sc.herald_chain()};
  const Setup clean = without_extrinsic_loss(built);
  CsvWriter m({"variant", "reference_power_mw", "car", "mux_r_c_hz", "best_single_r_c_hz", "mean_single_r_c_hz",
               "ratio_to_best", "ratio_to_mean"});
  for (const auto& [setup, variant] : {std::pair{built, "saturated"}, std::pair{clean, "extrinsic_removed"}})
    for (double p : sc.car_window.powers()) {
      if (!(p > 0.0)) continue;
      const auto pt = matched_car_point(setup, p, 1);
      m.row({variant, format_double(p), format_double(pt.car), format_double(pt.mux_r_c_hz),
             format_double(pt.best_single_r_c_hz), format_double(pt.mean_single_r_c_hz),
             format_double(pt.ratio_to_best()), format_double(pt.ratio_to_mean())});
    }
  detail::save(m, dir / "matched_car.csv", files);
  return files;
}

inline std::vector<SpectrumSample> read_spectrum(const CsvTable& t) {
  const auto wl = t.column("wavelength_nm");
  const auto ct = t.column("counts");
  if (wl < 0 || ct < 0) throw parse_error("spectrum needs columns wavelength_nm and counts", 1);
  std::vector<SpectrumSample> s;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    s.push_back({parse_double(t.rows[i][static_cast<std::size_t>(wl)], t.row_lines[i]),
                 parse_double(t.rows[i][static_cast<std::size_t>(ct)], t.row_lines[i])});
  return s;
}

/// Fit every *.csv spectrum in `spectra_dir` (sorted by file name) and write
/// the fits and the pairwise overlap matrix.
inline Files cmd_spectra(const std::filesystem::path& spectra_dir, const std::filesystem::path& out_dir) {
  if (!std::filesystem::is_directory(spectra_dir)) throw std::runtime_error("no such directory " + spectra_dir.string());
  std::vector<std::filesystem::path> inputs;
  for (const auto& e : std::filesystem::directory_iterator(spectra_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") inputs.push_back(e.path());
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) throw std::runtime_error("no spectrum files (*.csv) in " + spectra_dir.string());

  std::vector<std::string> names;
  std::vector<SpectrumFit> fits;
  for (const auto& p : inputs) {
    names.push_back(p.stem().string());
    if (names.back().find_first_of(",\"") != std::string::npos)
      throw std::runtime_error("spectrum file name contains ',' or quotes: " + p.string());
    try {
      fits.push_back(fit_gaussian(read_spectrum(read_csv_file(p.string()))));
    } catch (const parse_error& e) {
      throw parse_error(p.filename().string() + ": " + e.what(), e.line());
    } catch (const fit_error& e) {
      throw fit_error(p.filename().string() + ": " + e.what());
    }
  }
  const auto dir = detail::prepare_out_dir(out_dir);
  Files files;

  CsvWriter f({"spectrum", "center_nm", "fwhm_nm", "amplitude", "residual_norm"});
  std::vector<SpectrumModel> models;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& m = fits[i].model;
    models.push_back(m);
    f.row({names[i], format_double(m.center_nm), format_double(m.fwhm_nm), format_double(m.amplitude),
           format_double(fits[i].residual_norm)});
  }
  detail::save(f, dir / "spectral_fits.csv", files);

  const auto g = indistinguishability_table(models);
  std::vector<std::string> header{"spectrum"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter gm(header);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<std::string> row{names[i]};
    for (double v : g[i]) row.push_back(format_double(v));
    gm.row(row);
  }
  detail::save(gm, dir / "gamma_matrix.csv", files);
  return files;
}

}  // namespace muxsim
