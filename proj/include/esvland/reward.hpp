#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "esvland/action.hpp"
#include "esvland/esv.hpp"
#include "esvland/grid.hpp"

namespace esvland {

// Linear ramp of the buffer-penalty weight over training progress.
struct WaterWeightSchedule {
  double start = 6.0;
  double end = 6.0;
  double ramp_fraction = 1.0;  // in (0, 1]

  static WaterWeightSchedule fixed(double w) { return {w, w, 1.0}; }

  double at(double progress) const {
    const double t = std::clamp(progress / ramp_fraction, 0.0, 1.0);
    return start + (end - start) * t;
  }

  friend bool operator==(const WaterWeightSchedule&, const WaterWeightSchedule&) = default;
};

enum class Preset { EcoOnly, SpatialNoRegen, Headline, Custom };

inline std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::EcoOnly:
      return "eco-only";
    case Preset::SpatialNoRegen:
      return "spatial-no-regen";
    case Preset::Headline:
      return "headline";
    case Preset::Custom:
      return "custom";
  }
  return "custom";
}

inline Preset parse_preset(std::string_view name) {
  if (name == "eco-only") return Preset::EcoOnly;
  if (name == "spatial-no-regen") return Preset::SpatialNoRegen;
  if (name == "headline") return Preset::Headline;
  if (name == "custom") return Preset::Custom;
  throw Error("unknown preset '" + std::string(name) + "' (expected eco-only, spatial-no-regen, headline)");
}

struct RewardConfig {
  double w_tree = 0.0;
  double w_crop = 0.0;
  double w_built = 0.0;
  WaterWeightSchedule w_water = WaterWeightSchedule::fixed(0.0);
  double w_riparian = 0.0;
  Preset preset = Preset::Custom;

  void validate() const {
    if (w_tree < 0 || w_crop < 0 || w_built < 0 || w_riparian < 0 || w_water.start < 0 || w_water.end < 0) {
      throw Error("reward weights must be non-negative");
    }
    if (!(w_water.ramp_fraction > 0.0 && w_water.ramp_fraction <= 1.0)) {
      throw Error("w_water ramp fraction must lie in (0, 1]");
    }
  }

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

// A reward configuration together with the crops uplift used to build the ESV table.
struct Scenario {
  RewardConfig reward;
  double regen_uplift = kHeadlineRegenUplift;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline RewardConfig headline_weights() {
  RewardConfig c;
  c.w_tree = 1.0;
  c.w_crop = 4.0;
  c.w_built = 2.0;
  c.w_water = {1.0, 6.0, 0.6};
  c.w_riparian = 5.0;
  c.preset = Preset::Headline;
  return c;
}

inline Scenario make_preset(Preset p) {
  Scenario s;
  switch (p) {
    case Preset::EcoOnly:
      s.reward = RewardConfig{};
      s.reward.preset = Preset::EcoOnly;
      s.regen_uplift = kHeadlineRegenUplift;
      break;
    case Preset::SpatialNoRegen:
      s.reward = headline_weights();
      s.reward.preset = Preset::SpatialNoRegen;
      s.regen_uplift = 1.0;
      break;
    case Preset::Headline:
    case Preset::Custom:
      s.reward = headline_weights();
      s.reward.preset = p;
      s.regen_uplift = kHeadlineRegenUplift;
      break;
  }
  return s;
}

struct ValueBreakdown {
  double v_eco = 0.0;
  double c_tree = 0.0;
  double c_crop = 0.0;
  double c_built = 0.0;
  double p_water = 0.0;
  double b_riparian = 0.0;
  double w_water = 0.0;  // buffer weight resolved at the evaluated progress
  double v_total = 0.0;
};

// Weighted total from components; w_water is taken from the breakdown itself.
inline double combine(const ValueBreakdown& b, const RewardConfig& cfg) {
  return b.v_eco + cfg.w_tree * b.c_tree + cfg.w_crop * b.c_crop + cfg.w_built * b.c_built - b.w_water * b.p_water +
         cfg.w_riparian * b.b_riparian;
}

// ---------------------------------------------------------------------------
// Direct evaluation from fraction fields.

inline double eco_value(const GridState& state, const EsvTable& esv) {
  const auto e = esv.modifiable_coefficients();
  const double np = state.n_pixels();
  double v = 0.0;
  for (const auto& cell : state.cells()) {
    for (int k = 0; k < kNumModifiable; ++k) v += (cell.modifiable(k) / np) * e[static_cast<std::size_t>(k)];
  }
  return v;
}

// ln(1 + sum_ij f_ij * (K * g)_ij)
inline double log_neighbor_product(const Field& f, const Field& g) {
  const Field kg = neighbor_convolve(g);
  double s = 0.0;
  for (std::size_t n = 0; n < f.values.size(); ++n) s += f.values[n] * kg.values[n];
  return std::log1p(s);
}

inline double contiguity(const GridState& state, LandClass c) {
  if (c != LandClass::Trees && c != LandClass::Crops && c != LandClass::BuiltArea) {
    throw Error("contiguity is defined for trees, crops and built area only");
  }
  const Field f = channel_field(state, modifiable_index(c));
  return log_neighbor_product(f, f);
}

inline double buffer_penalty(const GridState& state, const WaterMap& water) {
  Field high = channel_field(state, mod::kCrops);
  const Field built = channel_field(state, mod::kBuilt);
  for (std::size_t n = 0; n < high.values.size(); ++n) high.values[n] += built.values[n];
  return log_neighbor_product(high, water);
}

inline double riparian_bonus(const GridState& state, const WaterMap& water) {
  return log_neighbor_product(channel_field(state, mod::kTrees), water);
}

inline ValueBreakdown total_value(const GridState& state, const EsvTable& esv, const RewardConfig& cfg,
                                  double progress) {
  ValueBreakdown b;
  b.v_eco = eco_value(state, esv);
  b.c_tree = contiguity(state, LandClass::Trees);
  b.c_crop = contiguity(state, LandClass::Crops);
  b.c_built = contiguity(state, LandClass::BuiltArea);
  const WaterMap w = water_map(state);
  b.p_water = buffer_penalty(state, w);
  b.b_riparian = riparian_bonus(state, w);
  b.w_water = cfg.w_water.at(progress);
  b.v_total = combine(b, cfg);
  return b;
}

inline double step_reward(const GridState& before, const GridState& after, const EsvTable& esv,
                          const RewardConfig& cfg, double progress) {
  return total_value(after, esv, cfg, progress).v_total - total_value(before, esv, cfg, progress).v_total;
}

// ---------------------------------------------------------------------------
// Incremental evaluation. The spatial inner sums are kept in integer pixel^2
// units; a transfer only touches the acted cell and its 4-neighbourhood.

struct SpatialAccumulators {
  std::array<long long, kNumModifiable> class_totals{};  // pixels per modifiable class
  std::array<long long, 3> contiguity{};                 // trees, crops, built
  long long buffer = 0;
  long long riparian = 0;

  friend bool operator==(const SpatialAccumulators&, const SpatialAccumulators&) = default;
};

inline SpatialAccumulators compute_accumulators(const GridState& s) {
  SpatialAccumulators acc;
  const int m = s.m();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto& cell = s.at(i, j);
      std::array<long long, 3> nb{};
      long long nb_water = 0;
      for_each_neighbor(m, i, j, [&](int ni, int nj) {
        const auto& n = s.at(ni, nj);
        nb[0] += n.modifiable(mod::kTrees);
        nb[1] += n.modifiable(mod::kCrops);
        nb[2] += n.modifiable(mod::kBuilt);
        nb_water += n[LandClass::Water];
      });
      for (int k = 0; k < kNumModifiable; ++k) acc.class_totals[static_cast<std::size_t>(k)] += cell.modifiable(k);
      for (int c = 0; c < 3; ++c) acc.contiguity[static_cast<std::size_t>(c)] += cell.modifiable(c) * nb[static_cast<std::size_t>(c)];
      acc.buffer += static_cast<long long>(cell.modifiable(mod::kCrops) + cell.modifiable(mod::kBuilt)) * nb_water;
      acc.riparian += static_cast<long long>(cell.modifiable(mod::kTrees)) * nb_water;
    }
  }
  return acc;
}

inline ValueBreakdown value_from_accumulators(const SpatialAccumulators& acc, int n_pixels, const EsvTable& esv,
                                              const RewardConfig& cfg, double progress) {
  const double np = n_pixels;
  const double np2 = np * np;
  ValueBreakdown b;
  for (int k = 0; k < kNumModifiable; ++k) {
    b.v_eco += static_cast<double>(acc.class_totals[static_cast<std::size_t>(k)]) * esv.normalized_modifiable(k);
  }
  b.v_eco /= np;
  b.c_tree = std::log1p(static_cast<double>(acc.contiguity[0]) / np2);
  b.c_crop = std::log1p(static_cast<double>(acc.contiguity[1]) / np2);
  b.c_built = std::log1p(static_cast<double>(acc.contiguity[2]) / np2);
  b.p_water = std::log1p(static_cast<double>(acc.buffer) / np2);
  b.b_riparian = std::log1p(static_cast<double>(acc.riparian) / np2);
  b.w_water = cfg.w_water.at(progress);
  b.v_total = combine(b, cfg);
  return b;
}

// Pixels an action would move: the requested delta clamped to the source count.
inline int clamped_transfer(const GridState& s, const DecodedAction& a, int delta_pixels) {
  if (a.src == a.tgt) return 0;
  return std::clamp(s.at(a.i, a.j).modifiable(a.src), 0, delta_pixels);
}

// Accumulators after moving `moved` pixels src -> tgt at (i, j); `s` is the state before.
inline SpatialAccumulators shifted_accumulators(const SpatialAccumulators& acc, const GridState& s,
                                                const DecodedAction& a, int moved) {
  SpatialAccumulators out = acc;
  if (moved == 0 || a.src == a.tgt) return out;
  std::array<long long, kNumModifiable> delta{};
  delta[static_cast<std::size_t>(a.src)] -= moved;
  delta[static_cast<std::size_t>(a.tgt)] += moved;

  std::array<long long, 3> nb{};
  long long nb_water = 0;
  for_each_neighbor(s.m(), a.i, a.j, [&](int ni, int nj) {
    const auto& n = s.at(ni, nj);
    nb[0] += n.modifiable(mod::kTrees);
    nb[1] += n.modifiable(mod::kCrops);
    nb[2] += n.modifiable(mod::kBuilt);
    nb_water += n[LandClass::Water];
  });
  for (int k = 0; k < kNumModifiable; ++k) out.class_totals[static_cast<std::size_t>(k)] += delta[static_cast<std::size_t>(k)];
  // Each neighbour pair is counted from both ends and the kernel has no self
  // term, so a change d at one cell moves the sum by exactly 2 * d * nb.
  for (int c = 0; c < 3; ++c) out.contiguity[static_cast<std::size_t>(c)] += 2 * delta[static_cast<std::size_t>(c)] * nb[static_cast<std::size_t>(c)];
  out.buffer += (delta[mod::kCrops] + delta[mod::kBuilt]) * nb_water;
  out.riparian += delta[mod::kTrees] * nb_water;
  return out;
}

// Cached accumulators for one state snapshot; evaluates candidate actions in O(1).
class IncrementalEvaluator {
public:
  IncrementalEvaluator(const GridState& state, const EsvTable& esv, const RewardConfig& cfg, double progress)
      : state_(&state),
        esv_(&esv),
        cfg_(&cfg),
        progress_(progress),
        acc_(compute_accumulators(state)),
        base_(value_from_accumulators(acc_, state.n_pixels(), esv, cfg, progress)) {}

  const ValueBreakdown& base() const { return base_; }
  const SpatialAccumulators& accumulators() const { return acc_; }

  ValueBreakdown value_after(const DecodedAction& a, int delta_pixels) const {
    const int moved = clamped_transfer(*state_, a, delta_pixels);
    return value_from_accumulators(shifted_accumulators(acc_, *state_, a, moved), state_->n_pixels(), *esv_, *cfg_,
                                   progress_);
  }

  double delta(const DecodedAction& a, int delta_pixels) const {
    if (clamped_transfer(*state_, a, delta_pixels) == 0) return 0.0;
    return value_after(a, delta_pixels).v_total - base_.v_total;
  }

private:
  const GridState* state_;
  const EsvTable* esv_;
  const RewardConfig* cfg_;
  double progress_;
  SpatialAccumulators acc_;
  ValueBreakdown base_;
};

inline double incremental_delta(const GridState& before, const DecodedAction& a, int delta_pixels,
                                const EsvTable& esv, const RewardConfig& cfg, double progress) {
  if (!before.in_bounds(a.i, a.j) || a.src < 0 || a.src >= kNumModifiable || a.tgt < 0 || a.tgt >= kNumModifiable) {
    throw Error("action out of range");
  }
  return IncrementalEvaluator(before, esv, cfg, progress).delta(a, delta_pixels);
}

}  // namespace esvland
