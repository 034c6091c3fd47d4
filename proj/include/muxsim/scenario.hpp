#pragma once

// JSON scenario files. Every key carries its unit in the name; every key is
// optional and defaults to the reference apparatus; unknown keys are errors.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <json.hpp>

#include "muxsim/apparatus.hpp"
#include "muxsim/errors.hpp"
#include "muxsim/mux.hpp"
#include "muxsim/saturation.hpp"

namespace muxsim {

struct PowerSweep {
  double start_mw = 2.5;
  double stop_mw = 50.5;
  int steps = 25;

  std::vector<double> powers() const {
    std::vector<double> p;
    for (int i = 0; i < steps; ++i)
      p.push_back(steps == 1 ? start_mw : start_mw + (stop_mw - start_mw) * i / (steps - 1));
    return p;
  }
};

struct SimulationSettings {
  std::uint64_t cycles = 1'000'000;
  std::uint64_t seed = 1;
  double reference_power_mw = 5.0;
  bool write_trace = false;
};

struct Scenario {
  MuxTopology topology;
  SwitchNetwork network;
  int bins_per_pass = apparatus::kBinsPerPass;
  std::vector<double> deadtimes_s{apparatus::kAmplifierDeadtimeS};
  double idle_time_s = apparatus::kIdleTimeS;
  PowerSweep sweep;
  PowerSweep car_window{2.5, 10.5, 9};
  SimulationSettings simulation;
  std::optional<std::string> output_dir;

  DeadtimeChain amplifier_chain() const { return DeadtimeChain(deadtimes_s); }
  DeadtimeChain herald_chain() const {
    return idle_time_s > 0.0 ? amplifier_chain().then(idle_time_s) : amplifier_chain();
  }
};

inline void validate(const PowerSweep& s, const char* what) {
  const std::string w(what);
  if (s.steps < 1) throw config_error(w + ": steps must be >= 1");
  if (!(s.start_mw >= 0.0)) throw config_error(w + ": start_power_mw must be >= 0");
  if (s.steps > 1 && !(s.stop_mw > s.start_mw)) throw config_error(w + ": power sweep must be strictly increasing");
}

inline void validate(const Scenario& s) {
  try {
    validate(s.topology);
    (void)s.amplifier_chain();
  } catch (const domain_error& e) {
    throw config_error(e.what());
  }
  if (s.topology.bins.empty()) throw config_error("scenario has no sources");
  std::set<std::string> names;
  for (const auto& b : s.topology.bins) {
    if (b.name.empty()) throw config_error("source name must not be empty");
    if (b.name.find_first_of(",\n\r\"") != std::string::npos) throw config_error("source name contains ',' or quotes");
    if (!names.insert(b.name).second) throw config_error("duplicate source name " + b.name);
  }
  if (s.bins_per_pass < 1 || s.bins_per_pass > 64) throw config_error("bins_per_pass must lie in [1, 64]");
  if (!(s.idle_time_s >= 0.0)) throw config_error("idle_time_ns must be >= 0");
  validate(s.sweep, "power_sweep");
  validate(s.car_window, "car_window");
  if (s.simulation.cycles == 0) throw config_error("simulation.cycles must be >= 1");
  if (!(s.simulation.reference_power_mw >= 0.0)) throw config_error("simulation.reference_power_mw must be >= 0");
}

/// Reference apparatus: 80 MHz clock, 4 bins x 3 ns per pass, fitted sources,
/// 100 ns amplifier deadtime followed by a 2 us idle time.
inline Scenario default_scenario() {
  Scenario s;
  s.topology = apparatus::topology();
  s.network = apparatus::switch_network();
  return s;
}

namespace detail {

// Wraps a JSON object and records which keys were consumed.
class JsonObject {
 public:
  JsonObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_ + " must be a JSON object");
  }

  const nlohmann::json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (auto v = find(key)) {
      if (!v->is_number()) throw config_error(where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = find(key)) {
      if (!v->is_number_integer()) throw config_error(where(key) + " must be an integer");
      if (v->is_number_unsigned()) {
        out = static_cast<Int>(v->get<std::uint64_t>());
      } else {
        const auto x = v->get<std::int64_t>();
        if (std::is_unsigned_v<Int> && x < 0) throw config_error(where(key) + " must be >= 0");
        out = static_cast<Int>(x);
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto v = find(key)) {
      if (!v->is_boolean()) throw config_error(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (auto v = find(key)) {
      if (!v->is_string()) throw config_error(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error("unknown key " + where(it.key()));
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline PowerSweep parse_sweep(const nlohmann::json& j, const std::string& path, PowerSweep s) {
  JsonObject o(j, path);
  o.number("start_power_mw", s.start_mw);
  o.number("stop_power_mw", s.stop_mw);
  o.integer("steps", s.steps);
  o.reject_unknown();
  return s;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario s = default_scenario();
  detail::JsonObject root(j, "");

  double clock_mhz = s.topology.rep_rate_hz * 1e-6;
  double spacing_ns = s.topology.bin_spacing_s * 1e9;
  root.number("clock_rate_mhz", clock_mhz);
  root.number("bin_spacing_ns", spacing_ns);
  s.topology.rep_rate_hz = clock_mhz * 1e6;
  s.topology.bin_spacing_s = spacing_ns * 1e-9;
  root.integer("bins_per_pass", s.bins_per_pass);
  root.number("pass2_pump_scale", s.topology.pass2_pump_scale);
  root.number("extrinsic_transmission", s.topology.extrinsic_transmission);

  if (auto v = root.find("switch_network")) {
    detail::JsonObject o(*v, "switch_network");
    o.number("loss_db_per_switch", s.network.loss_db_per_switch);
    o.integer("switches_per_path", s.network.switches_per_path);
    o.number("loop_transmission", s.network.loop_transmission);
    if (auto p = o.find("path_loss_db"); p && !p->is_null()) {
      if (!p->is_number()) throw config_error("switch_network.path_loss_db must be a number or null");
      s.network.path_loss_db = p->get<double>();
    }
    o.reject_unknown();
  }

  if (auto v = root.find("sources")) {
    if (!v->is_array()) throw config_error("sources must be an array");
    s.topology.bins.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      detail::JsonObject o((*v)[i], "sources[" + std::to_string(i) + "]");
      MuxBin b;
      o.string("name", b.name);
      o.integer("pass", b.pass);
      o.integer("delay", b.delay);
      o.number("eta_i", b.source.eta_i);
      o.number("eta_s", b.source.eta_s);
      o.number("p_seed_mw", b.source.p_seed_mw);
      o.number("pump_fraction", b.pump_fraction);
      o.number("back_reflection_fraction", b.source.back_reflection_fraction);
      o.reject_unknown();
      s.topology.bins.push_back(b);
    }
  }

  if (auto v = root.find("deadtime_ns")) {
    if (!v->is_array()) throw config_error("deadtime_ns must be an array of numbers");
    s.deadtimes_s.clear();
    for (const auto& d : *v) {
      if (!d.is_number()) throw config_error("deadtime_ns must be an array of numbers");
      s.deadtimes_s.push_back(d.get<double>() * 1e-9);
    }
  }
  double idle_ns = s.idle_time_s * 1e9;
  root.number("idle_time_ns", idle_ns);
  s.idle_time_s = idle_ns * 1e-9;

  if (auto v = root.find("power_sweep")) s.sweep = detail::parse_sweep(*v, "power_sweep", s.sweep);
  if (auto v = root.find("car_window")) s.car_window = detail::parse_sweep(*v, "car_window", s.car_window);

  if (auto v = root.find("simulation")) {
    detail::JsonObject o(*v, "simulation");
    o.integer("cycles", s.simulation.cycles);
    o.integer("seed", s.simulation.seed);
    o.number("reference_power_mw", s.simulation.reference_power_mw);
    o.boolean("write_trace", s.simulation.write_trace);
    o.reject_unknown();
  }
  if (auto v = root.find("output_dir"); v && !v->is_null()) {
    if (!v->is_string()) throw config_error("output_dir must be a string");
    s.output_dir = v->get<std::string>();
  }
  root.reject_unknown();

  try {
    for (auto& b : s.topology.bins) b.eta_sw = s.network.path_transmission(route_bin(b.delay, s.bins_per_pass));
  } catch (const routing_error& e) {
    throw config_error(std::string("source delay not routable: ") + e.what());
  }
  validate(s);
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open scenario " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace muxsim
