#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "esvland/environment.hpp"
#include "esvland/reward.hpp"

namespace esvland {

// Everything that determines an episode's rewards and transitions.
struct RunConfig {
  Scenario scenario = make_preset(Preset::Headline);
  EpisodeConfig episode;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Shortest text that round-trips the double.
inline std::string format_real(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

// Flat `key = value` text; keys in a fixed order so the text can be hashed.
inline std::string config_to_string(const RunConfig& c) {
  const auto& r = c.scenario.reward;
  const auto& e = c.episode;
  std::ostringstream os;
  os << "# esvland run config v1\n";
  os << "preset = " << preset_name(r.preset) << '\n';
  os << "regen_uplift = " << format_real(c.scenario.regen_uplift) << '\n';
  os << "w_tree = " << format_real(r.w_tree) << '\n';
  os << "w_crop = " << format_real(r.w_crop) << '\n';
  os << "w_built = " << format_real(r.w_built) << '\n';
  os << "w_water_start = " << format_real(r.w_water.start) << '\n';
  os << "w_water_end = " << format_real(r.w_water.end) << '\n';
  os << "w_water_ramp = " << format_real(r.w_water.ramp_fraction) << '\n';
  os << "w_riparian = " << format_real(r.w_riparian) << '\n';
  os << "t_max = " << e.t_max << '\n';
  os << "delta_pixels = " << e.delta_pixels << '\n';
  os << "et_tolerance = " << format_real(e.et_tolerance) << '\n';
  os << "noop_limit = " << e.noop_limit << '\n';
  os << "min_modifiable_fraction = " << format_real(e.min_modifiable_fraction) << '\n';
  os << "min_initial_value = " << format_real(e.min_initial_value) << '\n';
  os << "water_threshold = " << e.water_threshold << '\n';
  return os.str();
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(config_to_string(c))); }

// Parses `key = value` lines. A `preset` line, wherever it appears, seeds the
// scenario before the remaining keys are applied; omitted keys keep defaults.
inline RunConfig read_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    if (kv.count(key)) throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }

  RunConfig c;
  if (auto it = kv.find("preset"); it != kv.end()) {
    c.scenario = make_preset(parse_preset(it->second));
    kv.erase(it);
  }
  auto real = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error("config key '" + key + "': bad number '" + v + "'");
  };
  auto integer = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const int d = std::stoi(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error("config key '" + key + "': bad integer '" + v + "'");
  };
  auto& r = c.scenario.reward;
  auto& e = c.episode;
  for (const auto& [key, v] : kv) {
    if (key == "regen_uplift") c.scenario.regen_uplift = real(key, v);
    else if (key == "w_tree") r.w_tree = real(key, v);
    else if (key == "w_crop") r.w_crop = real(key, v);
    else if (key == "w_built") r.w_built = real(key, v);
    else if (key == "w_water_start") r.w_water.start = real(key, v);
    else if (key == "w_water_end") r.w_water.end = real(key, v);
    else if (key == "w_water_ramp") r.w_water.ramp_fraction = real(key, v);
    else if (key == "w_riparian") r.w_riparian = real(key, v);
    else if (key == "t_max") e.t_max = integer(key, v);
    else if (key == "delta_pixels") e.delta_pixels = integer(key, v);
    else if (key == "et_tolerance") e.et_tolerance = real(key, v);
    else if (key == "noop_limit") e.noop_limit = integer(key, v);
    else if (key == "min_modifiable_fraction") e.min_modifiable_fraction = real(key, v);
    else if (key == "min_initial_value") e.min_initial_value = real(key, v);
    else if (key == "water_threshold") e.water_threshold = integer(key, v);
    else throw Error("config: unknown key '" + key + "'");
  }
  r.validate();
  e.validate();
  if (!(c.scenario.regen_uplift > 0.0)) throw Error("config: regen_uplift must be positive");
  return c;
}

inline RunConfig config_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_config(is);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  return read_config(in);
}

}  // namespace esvland
