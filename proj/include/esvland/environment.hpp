#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "esvland/action.hpp"
#include "esvland/esv.hpp"
#include "esvland/grid.hpp"
#include "esvland/reward.hpp"

namespace esvland {

struct EpisodeConfig {
  int t_max = 500;
  int delta_pixels = 5;
  double et_tolerance = 1.0;
  int noop_limit = 10;
  double min_modifiable_fraction = 0.10;
  double min_initial_value = 1.0;
  // A cell counts as water for the riparian mask when its Water count exceeds this.
  int water_threshold = 0;

  void validate() const {
    if (t_max <= 0 || delta_pixels <= 0 || noop_limit <= 0) throw Error("t_max, delta_pixels and noop_limit must be positive");
    if (et_tolerance < 0.0) throw Error("ET tolerance must be non-negative");
    if (min_modifiable_fraction < 0.0 || min_initial_value < 0.0) throw Error("init thresholds must be non-negative");
    if (water_threshold < 0) throw Error("water threshold must be non-negative");
  }

  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

// Annual evapotranspiration per class, kg/m^2/yr. SnowIce has no reading and is 0.
inline constexpr std::array<double, kNumClasses> kEtRates = {
    616.93,  // Water
    933.57,  // Trees
    767.62,  // Flooded
    675.66,  // Crops
    648.95,  // BuiltArea
    591.53,  // BareGround
    0.0,     // SnowIce
    845.87,  // Clouds
    745.94,  // Rangeland
};

// Grid ET in pixel-rate units; the per-pixel area factor cancels in the fractional test.
inline double grid_et(const GridState& s, const std::array<double, kNumClasses>& rates = kEtRates) {
  double et = 0.0;
  for (const auto& cell : s.cells()) {
    for (std::size_t c = 0; c < rates.size(); ++c) et += cell.counts[c] * rates[c];
  }
  return et;
}

enum class TerminationCause { StepLimit, EtViolation, Stagnation, Saturation, ExternalStop };

inline std::string_view cause_name(TerminationCause c) {
  switch (c) {
    case TerminationCause::StepLimit:
      return "step_limit";
    case TerminationCause::EtViolation:
      return "et_violation";
    case TerminationCause::Stagnation:
      return "stagnation";
    case TerminationCause::Saturation:
      return "saturation";
    case TerminationCause::ExternalStop:
      return "external_stop";
  }
  return "unknown";
}

inline TerminationCause parse_cause(std::string_view s) {
  for (auto c : {TerminationCause::StepLimit, TerminationCause::EtViolation, TerminationCause::Stagnation,
                 TerminationCause::Saturation, TerminationCause::ExternalStop}) {
    if (cause_name(c) == s) return c;
  }
  throw Error("unknown termination cause '" + std::string(s) + "'");
}

// Cells that have at least one 4-neighbour holding water above the threshold.
inline std::vector<bool> riparian_cells(const GridState& s, int water_threshold = 0) {
  const int m = s.m();
  std::vector<bool> out(s.size(), false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      bool adj = false;
      for_each_neighbor(m, i, j, [&](int ni, int nj) { adj = adj || s.at(ni, nj)[LandClass::Water] > water_threshold; });
      out[static_cast<std::size_t>(i * m + j)] = adj;
    }
  }
  return out;
}

inline bool is_high_impact(int k) { return k == mod::kCrops || k == mod::kBuilt; }

using ActionMask = std::vector<bool>;

// Joint (M, M, K, K) validity mask, flattened row-major.
inline ActionMask action_mask(const GridState& s, const std::vector<bool>& riparian) {
  const int m = s.m();
  const int np = s.n_pixels();
  ActionMask mask(static_cast<std::size_t>(action_count(m)), false);
  std::size_t idx = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto& cell = s.at(i, j);
      const bool near_water = riparian[static_cast<std::size_t>(i * m + j)];
      for (int src = 0; src < kNumModifiable; ++src) {
        for (int tgt = 0; tgt < kNumModifiable; ++tgt, ++idx) {
          mask[idx] = src != tgt && cell.modifiable(src) > 0 && cell.modifiable(tgt) < np &&
                      !(near_water && is_high_impact(tgt));
        }
      }
    }
  }
  return mask;
}

inline ActionMask action_mask(const GridState& s, int water_threshold = 0) {
  return action_mask(s, riparian_cells(s, water_threshold));
}

inline bool any_valid(const ActionMask& mask) {
  for (bool b : mask) {
    if (b) return true;
  }
  return false;
}

inline std::vector<long long> valid_actions(const ActionMask& mask) {
  std::vector<long long> out;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) out.push_back(static_cast<long long>(a));
  }
  return out;
}

// Moves min(delta_pixels, source count) pixels from src to tgt. Returns the new
// state and the number of pixels moved.
inline std::pair<GridState, int> apply_action(const GridState& s, const DecodedAction& a, int delta_pixels) {
  if (!s.in_bounds(a.i, a.j) || a.src < 0 || a.src >= kNumModifiable || a.tgt < 0 || a.tgt >= kNumModifiable) {
    throw Error("action out of range");
  }
  GridState next = s;
  const int moved = clamped_transfer(s, a, delta_pixels);
  if (moved > 0) {
    auto& cell = next.at(a.i, a.j);
    cell.modifiable(a.src) -= moved;
    cell.modifiable(a.tgt) += moved;
  }
  return {std::move(next), moved};
}

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  std::optional<TerminationCause> cause;
  ValueBreakdown info;
  int transferred = 0;
};

enum class ValueFilter {
  None,
  AtLeast,  // reject V0 < threshold (training filter)
  Above,    // reject V0 <= threshold (effective-grid filter for evaluation)
};

struct InitFilters {
  bool modifiable_fraction = true;
  ValueFilter value = ValueFilter::AtLeast;

  static InitFilters training() { return {true, ValueFilter::AtLeast}; }
  static InitFilters effective() { return {false, ValueFilter::Above}; }
  static InitFilters none() { return {false, ValueFilter::None}; }
};

struct Rejection {
  enum class Reason { ModifiableFraction, InitialValue } reason;
  double value = 0.0;
  double threshold = 0.0;

  std::string message() const {
    if (reason == Reason::ModifiableFraction) {
      return "rejected by modifiable-fraction filter: " + std::to_string(value) + " < " + std::to_string(threshold);
    }
    return "rejected by initial-value filter: V0 = " + std::to_string(value) + " vs threshold " +
           std::to_string(threshold);
  }
};

class Episode {
public:
  Episode(GridState patch, const EpisodeConfig& cfg, const EsvTable& esv, const RewardConfig& reward,
          double progress = 1.0)
      : state_(std::move(patch)),
        initial_(state_),
        cfg_(cfg),
        esv_(esv),
        reward_(reward),
        progress_(progress),
        riparian_(riparian_cells(state_, cfg.water_threshold)) {
    cfg_.validate();
    reward_.validate();
    state_.validate();
    et0_ = grid_et(state_);
    current_ = total_value(state_, esv_, reward_, progress_);
    v0_ = current_;
    if (!any_valid(mask())) finish(TerminationCause::Saturation);
  }

  const GridState& state() const { return state_; }
  const GridState& initial_state() const { return initial_; }
  const EpisodeConfig& config() const { return cfg_; }
  const EsvTable& esv() const { return esv_; }
  const RewardConfig& reward_config() const { return reward_; }
  const std::vector<bool>& riparian() const { return riparian_; }

  int t() const { return t_; }
  int noop_streak() const { return noop_streak_; }
  bool done() const { return done_; }
  std::optional<TerminationCause> cause() const { return cause_; }
  double initial_et() const { return et0_; }
  const ValueBreakdown& initial_value() const { return v0_; }
  const ValueBreakdown& current_value() const { return current_; }
  double progress() const { return progress_; }

  // Anneal progress in [0, 1] used for subsequent rewards.
  void set_progress(double p) {
    if (p == progress_) return;
    progress_ = std::clamp(p, 0.0, 1.0);
    current_ = total_value(state_, esv_, reward_, progress_);
  }

  ActionMask mask() const { return action_mask(state_, riparian_); }
  Observation observe() const { return observation(state_); }

  void stop() {
    if (!done_) finish(TerminationCause::ExternalStop);
  }

  StepResult step(long long flat_action) {
    if (done_) throw Error("step called on a finished episode");
    const DecodedAction a = decode_action(flat_action, state_.m());
    auto [next, moved] = apply_action(state_, a, cfg_.delta_pixels);
    state_ = std::move(next);
    const ValueBreakdown after = total_value(state_, esv_, reward_, progress_);

    StepResult r;
    r.reward = after.v_total - current_.v_total;
    r.transferred = moved;
    current_ = after;
    ++t_;
    noop_streak_ = moved == 0 ? noop_streak_ + 1 : 0;

    if (t_ >= cfg_.t_max) {
      finish(TerminationCause::StepLimit);
    } else if (et0_ > 0.0 && (et0_ - grid_et(state_)) / et0_ > cfg_.et_tolerance) {
      finish(TerminationCause::EtViolation);
    } else if (noop_streak_ >= cfg_.noop_limit) {
      finish(TerminationCause::Stagnation);
    } else if (!any_valid(mask())) {
      finish(TerminationCause::Saturation);
    }
    r.done = done_;
    r.cause = cause_;
    r.info = current_;
    r.observation = observation(state_);
    return r;
  }

private:
  void finish(TerminationCause c) {
    done_ = true;
    cause_ = c;
  }

  GridState state_;
  GridState initial_;
  EpisodeConfig cfg_;
  EsvTable esv_;
  RewardConfig reward_;
  double progress_ = 1.0;
  std::vector<bool> riparian_;
  double et0_ = 0.0;
  ValueBreakdown v0_;
  ValueBreakdown current_;
  int t_ = 0;
  int noop_streak_ = 0;
  bool done_ = false;
  std::optional<TerminationCause> cause_;
};

using InitOutcome = std::variant<Episode, Rejection>;

// Applies the selected init filters, then starts an episode.
inline InitOutcome init_episode(const GridState& patch, const EpisodeConfig& cfg, const EsvTable& esv,
                                const RewardConfig& reward, InitFilters filters = InitFilters::training(),
                                double progress = 1.0) {
  if (filters.modifiable_fraction) {
    const double f = patch.modifiable_fraction();
    if (f < cfg.min_modifiable_fraction) {
      return Rejection{Rejection::Reason::ModifiableFraction, f, cfg.min_modifiable_fraction};
    }
  }
  if (filters.value != ValueFilter::None) {
    const double v0 = total_value(patch, esv, reward, progress).v_total;
    const bool reject = filters.value == ValueFilter::AtLeast ? v0 < cfg.min_initial_value : v0 <= cfg.min_initial_value;
    if (reject) return Rejection{Rejection::Reason::InitialValue, v0, cfg.min_initial_value};
  }
  return Episode(patch, cfg, esv, reward, progress);
}

}  // namespace esvland
