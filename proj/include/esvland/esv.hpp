#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>

#include "esvland/grid.hpp"

namespace esvland {

// Benefit-transfer ESV coefficients in USD/ha/yr, class-id order.
inline constexpr std::array<double, kNumClasses> kDefaultRawEsv = {
    554.0,   // Water
    238.0,   // Trees
    1136.0,  // Flooded
    246.0,   // Crops (base, before uplift)
    295.0,   // BuiltArea
    0.0,     // BareGround
    0.0,     // SnowIce
    0.0,     // Clouds
    184.0,   // Rangeland
};

inline constexpr double kHeadlineRegenUplift = 1.35;

struct EsvTable {
  std::array<double, kNumClasses> raw_usd_per_ha_yr{};
  double regen_uplift = 1.0;
  std::array<double, kNumClasses> raw_effective{};
  std::array<double, kNumClasses> normalized{};
  // True when the uplifted crops value is the largest raw value, which moves the
  // normalisation denominator off Flooded.
  bool crops_set_denominator = false;

  double normalized_of(LandClass c) const { return normalized[static_cast<std::size_t>(class_id(c))]; }
  double normalized_modifiable(int k) const { return normalized_of(modifiable_class(k)); }

  std::array<double, kNumModifiable> modifiable_coefficients() const {
    std::array<double, kNumModifiable> out{};
    for (int k = 0; k < kNumModifiable; ++k) out[static_cast<std::size_t>(k)] = normalized_modifiable(k);
    return out;
  }

  // Warning text for run metadata, empty when nothing unusual happened.
  std::string warning() const {
    if (!crops_set_denominator) return {};
    return "regen uplift " + std::to_string(regen_uplift) +
           " pushes crops above every other class; normalisation denominator is now the crops value";
  }
};

// Min-max normalisation over all nine classes of the uplifted raw values.
inline EsvTable build_esv_table(double regen_uplift, const std::array<double, kNumClasses>& raw = kDefaultRawEsv) {
  if (!(regen_uplift > 0.0)) throw Error("regen uplift must be positive");
  EsvTable t;
  t.raw_usd_per_ha_yr = raw;
  t.regen_uplift = regen_uplift;
  t.raw_effective = raw;
  t.raw_effective[static_cast<std::size_t>(class_id(LandClass::Crops))] *= regen_uplift;

  double lo = t.raw_effective[0], hi = t.raw_effective[0];
  std::size_t argmax = 0;
  for (std::size_t c = 0; c < t.raw_effective.size(); ++c) {
    if (t.raw_effective[c] < 0.0) throw Error("ESV coefficients must be non-negative");
    lo = std::min(lo, t.raw_effective[c]);
    if (t.raw_effective[c] > hi) {
      hi = t.raw_effective[c];
      argmax = c;
    }
  }
  if (!(hi > lo)) throw Error("ESV coefficients are all equal; cannot normalise");
  for (std::size_t c = 0; c < t.raw_effective.size(); ++c) t.normalized[c] = (t.raw_effective[c] - lo) / (hi - lo);
  t.crops_set_denominator = argmax == static_cast<std::size_t>(class_id(LandClass::Crops));
  return t;
}

// Override file: `class_name,raw_value` per line; '#' starts a comment. Classes not
// listed keep their default value.
inline std::array<double, kNumClasses> read_esv_overrides(std::istream& is) {
  auto raw = kDefaultRawEsv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("ESV override line " + std::to_string(lineno) + ": expected name,value");
    std::string name = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(name);
    trim(value);
    if (name == "class_name") continue;  // header row
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw Error("trailing characters");
    } catch (const std::exception&) {
      throw Error("ESV override line " + std::to_string(lineno) + ": bad value '" + value + "'");
    }
    if (v < 0.0) throw Error("ESV override line " + std::to_string(lineno) + ": negative value");
    raw[static_cast<std::size_t>(class_id(parse_class_name(name)))] = v;
  }
  return raw;
}

inline std::array<double, kNumClasses> load_esv_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ESV override file: " + path);
  return read_esv_overrides(in);
}

}  // namespace esvland
