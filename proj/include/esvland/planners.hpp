#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "esvland/config.hpp"
#include "esvland/environment.hpp"
#include "esvland/reward.hpp"

namespace esvland {

enum class PlannerKind { Random, Greedy, Beam };
enum class TieBreak { LowestIndex, RandomAmongTies };

inline std::string_view planner_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::Random:
      return "random";
    case PlannerKind::Greedy:
      return "greedy";
    case PlannerKind::Beam:
      return "beam";
  }
  return "random";
}

inline PlannerKind parse_planner(std::string_view s) {
  if (s == "random") return PlannerKind::Random;
  if (s == "greedy") return PlannerKind::Greedy;
  if (s == "beam") return PlannerKind::Beam;
  throw Error("unknown planner '" + std::string(s) + "' (expected random, greedy, beam)");
}

struct PlannerSpec {
  PlannerKind kind = PlannerKind::Greedy;
  std::uint64_t seed = 0;
  int beam_width = 1;
  int beam_horizon = 2;
  TieBreak tie_break = TieBreak::LowestIndex;

  void validate() const {
    if (beam_width < 1) throw Error("beam width must be at least 1");
    if (beam_horizon < 1) throw Error("beam horizon must be at least 1");
  }

  std::string label() const {
    if (kind == PlannerKind::Beam) {
      return "beam" + std::to_string(beam_width) + "x" + std::to_string(beam_horizon);
    }
    return std::string(planner_name(kind));
  }

  friend bool operator==(const PlannerSpec&, const PlannerSpec&) = default;
};


// Uniform draw over the mask's true entries.
inline long long random_policy(const ActionMask& mask, Rng& rng) {
  const auto valid = valid_actions(mask);
  if (valid.empty()) throw Error("random_policy: mask has no valid action");
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

// One-step lookahead: the valid action with the largest value change at
// final weights (progress = 1).
inline long long greedy_policy(const GridState& state, const ActionMask& mask, const EsvTable& esv,
                               const RewardConfig& cfg, int delta_pixels, TieBreak tie = TieBreak::LowestIndex,
                               Rng* rng = nullptr) {
  const IncrementalEvaluator eval(state, esv, cfg, 1.0);
  const int m = state.m();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<long long> ties;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    const double d = eval.delta(decode_action(static_cast<long long>(a), m), delta_pixels);
    if (d > best) {
      best = d;
      ties.assign(1, static_cast<long long>(a));
    } else if (d == best) {
      ties.push_back(static_cast<long long>(a));
    }
  }
  if (ties.empty()) throw Error("greedy_policy: mask has no valid action");
  if (tie == TieBreak::RandomAmongTies && ties.size() > 1) {
    if (rng == nullptr) throw Error("greedy_policy: RandomAmongTies needs an rng");
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(*rng)];
  }
  return ties.front();
}

// Beam lookahead over `horizon` steps keeping `width` partial plans; returns the
// first action of the best plan. Width 1 with horizon 1 is the greedy policy.
inline long long beam_policy(const GridState& state, const std::vector<bool>& riparian, const EsvTable& esv,
                             const RewardConfig& cfg, int delta_pixels, int width, int horizon) {
  struct Node {
    GridState state;
    double value = 0.0;
    long long first = -1;
    std::vector<long long> path;
  };
  struct Candidate {
    std::size_t parent;
    long long action;
    double value;
  };
  std::vector<Node> beam{Node{state, 0.0, -1, {}}};
  const int m = state.m();
  for (int depth = 0; depth < horizon; ++depth) {
    std::vector<Candidate> cands;
    std::vector<std::size_t> leaves;  // nodes with no valid action carry forward unchanged
    for (std::size_t n = 0; n < beam.size(); ++n) {
      const auto mask = action_mask(beam[n].state, riparian);
      const IncrementalEvaluator eval(beam[n].state, esv, cfg, 1.0);
      bool expanded = false;
      for (std::size_t a = 0; a < mask.size(); ++a) {
        if (!mask[a]) continue;
        expanded = true;
        cands.push_back({n, static_cast<long long>(a),
                         beam[n].value + eval.delta(decode_action(static_cast<long long>(a), m), delta_pixels)});
      }
      if (!expanded) leaves.push_back(n);
    }
    if (cands.empty()) break;
    // Enumeration order is parent-major then action index, so a stable sort
    // keeps ties in lexicographic plan order.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
    std::vector<Node> next;
    for (const auto& c : cands) {
      if (static_cast<int>(next.size()) >= width) break;
      const Node& parent = beam[c.parent];
      Node child{apply_action(parent.state, decode_action(c.action, m), delta_pixels).first, c.value,
                 parent.first < 0 ? c.action : parent.first, parent.path};
      child.path.push_back(c.action);
      next.push_back(std::move(child));
    }
    for (std::size_t n : leaves) {
      if (beam[n].first >= 0) next.push_back(beam[n]);
    }
    std::stable_sort(next.begin(), next.end(), [](const Node& a, const Node& b) {
      if (a.value != b.value) return a.value > b.value;
      return a.path < b.path;
    });
    if (static_cast<int>(next.size()) > width) next.resize(static_cast<std::size_t>(width));
    beam = std::move(next);
  }
  if (beam.empty() || beam.front().first < 0) throw Error("beam_policy: no valid action");
  return beam.front().first;
}

// ---------------------------------------------------------------------------
// Episode records and action logs.

struct StepLog {
  int t = 0;
  long long action = 0;
  int transferred = 0;
  double reward = 0.0;
};

struct EpisodeRecord {
  std::string grid_hash;
  std::string config_hash;
  PlannerSpec planner;
  ValueBreakdown initial;
  ValueBreakdown final;
  std::vector<StepLog> steps;
  TerminationCause cause = TerminationCause::StepLimit;
  GridState final_state;

  double delta_v() const { return final.v_total - initial.v_total; }
  double reward_sum() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.reward;
    return s;
  }
};

using RunOutcome = std::variant<EpisodeRecord, Rejection>;

// Picks the next action for `ep` under `spec`.
inline long long choose_action(const Episode& ep, const PlannerSpec& spec, Rng& rng) {
  const auto mask = ep.mask();
  switch (spec.kind) {
    case PlannerKind::Random:
      return random_policy(mask, rng);
    case PlannerKind::Greedy:
      return greedy_policy(ep.state(), mask, ep.esv(), ep.reward_config(), ep.config().delta_pixels, spec.tie_break,
                           &rng);
    case PlannerKind::Beam:
      return beam_policy(ep.state(), ep.riparian(), ep.esv(), ep.reward_config(), ep.config().delta_pixels,
                         spec.beam_width, spec.beam_horizon);
  }
  throw Error("unknown planner kind");
}

inline RunOutcome run_episode(const GridState& patch, const PlannerSpec& spec, const RunConfig& cfg,
                              InitFilters filters = InitFilters::training()) {
  spec.validate();
  const EsvTable esv = build_esv_table(cfg.scenario.regen_uplift);
  auto outcome = init_episode(patch, cfg.episode, esv, cfg.scenario.reward, filters);
  if (auto* rej = std::get_if<Rejection>(&outcome)) return *rej;
  Episode& ep = std::get<Episode>(outcome);

  EpisodeRecord rec;
  rec.grid_hash = grid_hash(patch);
  rec.config_hash = config_hash(cfg);
  rec.planner = spec;
  rec.initial = ep.initial_value();
  Rng rng(spec.seed);
  while (!ep.done()) {
    const long long a = choose_action(ep, spec, rng);
    const int t = ep.t();
    const auto r = ep.step(a);
    rec.steps.push_back({t, a, r.transferred, r.reward});
  }
  rec.final = ep.current_value();
  rec.cause = *ep.cause();
  rec.final_state = ep.state();
  return rec;
}

inline void write_action_log(std::ostream& os, const EpisodeRecord& rec) {
  os << "actionlog v1 grid=" << rec.grid_hash << " config=" << rec.config_hash << " planner=" << rec.planner.label()
     << " seed=" << rec.planner.seed << '\n';
  for (const auto& s : rec.steps) {
    os << s.t << ' ' << s.action << ' ' << s.transferred << ' ' << format_real(s.reward) << '\n';
  }
}

struct ActionLog {
  std::string grid_hash;
  std::string config_hash;
  std::string planner;
  std::uint64_t seed = 0;
  std::vector<StepLog> steps;
};

inline ActionLog read_action_log(std::istream& is) {
  ActionLog log;
  std::string header;
  if (!std::getline(is, header)) throw Error("action log: missing header");
  std::istringstream hs(header);
  std::string magic, version, tok;
  hs >> magic >> version;
  if (magic != "actionlog" || version != "v1") throw Error("action log: bad header '" + header + "'");
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error("action log: bad header field '" + tok + "'");
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "grid") log.grid_hash = val;
    else if (key == "config") log.config_hash = val;
    else if (key == "planner") log.planner = val;
    else if (key == "seed") log.seed = std::stoull(val);
  }
  if (log.grid_hash.empty() || log.config_hash.empty()) throw Error("action log: header lacks grid/config hash");
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    StepLog s;
    std::string reward;
    if (!(ls >> s.t >> s.action >> s.transferred >> reward)) {
      throw Error("action log line " + std::to_string(lineno) + ": expected 't action transferred reward'");
    }
    s.reward = std::stod(reward);
    log.steps.push_back(s);
  }
  return log;
}

inline ActionLog load_action_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open action log: " + path);
  return read_action_log(in);
}

// Thrown when a log is replayed against a grid or config it was not recorded with.
class HashMismatch : public Error {
public:
  using Error::Error;
};

struct ReplayVerdict {
  bool pass = true;
  std::optional<int> failed_step;
  std::string detail;
};

inline constexpr double kReplayRewardTolerance = 1e-9;

// Re-executes the logged actions; PASS iff every transfer matches exactly and
// every reward within kReplayRewardTolerance.
inline ReplayVerdict replay(const ActionLog& log, const GridState& grid, const RunConfig& cfg) {
  if (grid_hash(grid) != log.grid_hash) {
    throw HashMismatch("grid hash " + grid_hash(grid) + " does not match log grid hash " + log.grid_hash);
  }
  if (config_hash(cfg) != log.config_hash) {
    throw HashMismatch("config hash " + config_hash(cfg) + " does not match log config hash " + log.config_hash);
  }
  const EsvTable esv = build_esv_table(cfg.scenario.regen_uplift);
  Episode ep(grid, cfg.episode, esv, cfg.scenario.reward);
  ReplayVerdict v;
  for (std::size_t n = 0; n < log.steps.size(); ++n) {
    const auto& s = log.steps[n];
    auto fail = [&](std::string why) {
      v.pass = false;
      v.failed_step = s.t;
      v.detail = std::move(why);
      return v;
    };
    if (ep.done()) return fail("episode already finished before logged step");
    if (s.action < 0 || s.action >= action_count(grid.m())) return fail("action index out of range");
    const auto r = ep.step(s.action);
    if (r.transferred != s.transferred) {
      return fail("transferred " + std::to_string(r.transferred) + " != logged " + std::to_string(s.transferred));
    }
    if (!(std::abs(r.reward - s.reward) <= kReplayRewardTolerance)) {
      return fail("reward " + format_real(r.reward) + " != logged " + format_real(s.reward));
    }
  }
  v.detail = "replayed " + std::to_string(log.steps.size()) + " steps";
  return v;
}

}  // namespace esvland
