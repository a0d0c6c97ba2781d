// Acceptance checks. One PASS/FAIL line per criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "esvland/esvland.hpp"
#include "oracle.hpp"

using namespace esvland;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] %d %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

const EsvTable kEsv = build_esv_table(kHeadlineRegenUplift);

// Shared tally for criterion 7.
struct Integrity {
  long long states_checked = 0;
  long long sum_violations = 0;
  int logs = 0;
  int replay_failures = 0;

  void check_cells(const GridState& g, const GridState& start) {
    ++states_checked;
    for (int i = 0; i < g.m(); ++i) {
      for (int j = 0; j < g.m(); ++j) {
        const auto& c = g.at(i, j);
        const auto& s = start.at(i, j);
        bool bad = c.total() != g.n_pixels();
        for (auto p : kProtectedClasses) bad = bad || c[p] != s[p];
        for (int v : c.counts) bad = bad || v < 0;
        sum_violations += bad ? 1 : 0;
      }
    }
  }

  void check_replay(const EpisodeRecord& rec, const GridState& grid, const RunConfig& cfg) {
    std::stringstream ss;
    write_action_log(ss, rec);
    const auto log = read_action_log(ss);
    ++logs;
    if (!replay(log, grid, cfg).pass) ++replay_failures;
  }
} integrity;

// Re-applies a record's actions outside the environment and checks every state.
void audit_record(const EpisodeRecord& rec, const GridState& start, const RunConfig& cfg) {
  GridState g = start;
  integrity.check_cells(g, start);
  for (const auto& s : rec.steps) {
    g = apply_action(g, decode_action(s.action, g.m()), cfg.episode.delta_pixels).first;
    integrity.check_cells(g, start);
  }
  if (!(g == rec.final_state)) ++integrity.sum_violations;
  integrity.check_replay(rec, start, cfg);
}

// 1 -------------------------------------------------------------------------
void esv_normalization() {
  Timer t;
  const auto e = build_esv_table(1.35);
  const std::pair<LandClass, double> expected[] = {{LandClass::Crops, 0.29},
                                                   {LandClass::BuiltArea, 0.26},
                                                   {LandClass::Trees, 0.21},
                                                   {LandClass::Rangeland, 0.16},
                                                   {LandClass::BareGround, 0.00}};
  bool ok = true;
  std::string detail;
  for (const auto& [c, v] : expected) {
    const double got = e.normalized_of(c);
    ok = ok && std::abs(got - v) <= 0.005;
    detail += std::string(class_name(c)) + "=" + fmt("%.4f", got) + " ";
  }
  report(1, "esv-normalization", ok, detail + "tolerance 0.005", t.seconds());
}

// 2 -------------------------------------------------------------------------
void reward_oracle() {
  Timer t;
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Preset presets[] = {Preset::Headline, Preset::SpatialNoRegen, Preset::EcoOnly};
  double worst = 0.0;
  int pairs = 0;
  for (int m : {2, 3, 5, 10}) {
    for (int n = 0; n < 2500;) {
      GridState g = oracle::random_grid(m, rng);
      const auto rip = riparian_cells(g);
      const int walk = std::uniform_int_distribution<int>(0, 40)(rng);
      for (int w = 0; w < walk; ++w) {
        const auto valid = valid_actions(action_mask(g, rip));
        if (valid.empty()) break;
        const auto a = valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
        g = apply_action(g, decode_action(a, m), 5).first;
      }
      const auto valid = valid_actions(action_mask(g, rip));
      if (valid.empty()) continue;
      const auto a = decode_action(valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)], m);
      const auto scenario = make_preset(presets[n % 3]);
      const auto esv = build_esv_table(scenario.regen_uplift);
      const double progress = unit(rng);
      const double fast = incremental_delta(g, a, 5, esv, scenario.reward, progress);
      const double slow = step_reward(g, apply_action(g, a, 5).first, esv, scenario.reward, progress);
      worst = std::max(worst, std::abs(fast - slow));
      ++n;
      ++pairs;
    }
  }

  double worst_tele = 0.0;
  int episodes = 0;
  for (int e = 0; e < 200; ++e) {
    const int m = std::array<int, 4>{2, 3, 5, 10}[static_cast<std::size_t>(e % 4)];
    const auto g = oracle::random_grid(m, rng);
    RunConfig cfg;
    cfg.scenario = make_preset(presets[e % 3]);
    const PlannerSpec spec{e % 2 == 0 ? PlannerKind::Random : PlannerKind::Greedy, static_cast<std::uint64_t>(e)};
    const auto out = run_episode(g, spec, cfg, InitFilters::none());
    const auto& rec = std::get<EpisodeRecord>(out);
    worst_tele = std::max(worst_tele, std::abs(rec.reward_sum() - rec.delta_v()));
    ++episodes;
    audit_record(rec, g, cfg);
  }
  const bool ok = pairs == 10000 && worst < 1e-9 && worst_tele < 1e-9;
  report(2, "reward-oracle", ok,
         std::to_string(pairs) + " pairs max|inc-naive|=" + fmt("%.2e", worst) + ", " + std::to_string(episodes) +
             " episodes max|sum r - dV|=" + fmt("%.2e", worst_tele) + ", tolerance 1e-9",
         t.seconds());
}

// 3 -------------------------------------------------------------------------
// Grids with only a few modifiable-bearing cells, so the reachable set can be
// enumerated completely.
GridState mask_grid(int m, int modifiable_cells, std::mt19937_64& rng) {
  GridState g(m);
  std::vector<int> cells(static_cast<std::size_t>(m * m));
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  const LandClass protected_fill[] = {LandClass::Water, LandClass::Water, LandClass::Flooded, LandClass::SnowIce,
                                      LandClass::Clouds};
  for (std::size_t n = 0; n < cells.size(); ++n) {
    auto& cell = g.at(cells[n] / m, cells[n] % m);
    if (static_cast<int>(n) >= modifiable_cells) {
      cell = single_class_cell(protected_fill[std::uniform_int_distribution<int>(0, 4)(rng)]);
      continue;
    }
    int left = 25;
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
      const int w = std::uniform_int_distribution<int>(1, 15)(rng);
      cell[LandClass::Water] = w;
      left -= w;
    }
    // One or two modifiable classes.
    const auto a = kModifiableClasses[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 4)(rng))];
    const auto b = kModifiableClasses[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 4)(rng))];
    const int split = std::uniform_int_distribution<int>(0, left)(rng);
    cell[a] += split;
    cell[b] += left - split;
  }
  return g;
}

struct Enumeration {
  bool complete = true;
  std::vector<GridState> states;
};

Enumeration reachable(const GridState& start, std::size_t cap) {
  Enumeration out;
  std::unordered_set<std::string> seen;
  auto key = [](const GridState& g) {
    std::string k;
    for (const auto& c : g.cells()) {
      for (int v : c.counts) k.push_back(static_cast<char>(v));
    }
    return k;
  };
  const auto rip = riparian_cells(start);
  std::vector<GridState> frontier{start};
  seen.insert(key(start));
  while (!frontier.empty()) {
    GridState g = std::move(frontier.back());
    frontier.pop_back();
    const auto mask = action_mask(g, rip);
    for (std::size_t a = 0; a < mask.size(); ++a) {
      if (!mask[a]) continue;
      GridState next = apply_action(g, decode_action(static_cast<long long>(a), g.m()), 5).first;
      if (seen.insert(key(next)).second) {
        if (seen.size() > cap) {
          out.complete = false;
          return out;
        }
        frontier.push_back(next);
      }
    }
    out.states.push_back(std::move(g));
  }
  return out;
}

void mask_soundness() {
  Timer t;
  std::mt19937_64 rng(3003);
  const std::size_t cap = 20000;
  long long states = 0, entries = 0, mask_mismatch = 0, saturation_mismatch = 0, saturated = 0;
  int grids = 0, skipped = 0;
  const auto headline = headline_weights();
  for (int m : {2, 3}) {
    for (int made = 0; made < 20;) {
      const int k = made % 4;  // 0..3 modifiable-bearing cells
      const auto start = mask_grid(m, std::min(k, m * m), rng);
      const auto en = reachable(start, cap);
      if (!en.complete) {
        ++skipped;
        continue;
      }
      ++made;
      ++grids;
      for (const auto& g : en.states) {
        ++states;
        const auto mask = action_mask(g);
        bool any = false;
        for (std::size_t a = 0; a < mask.size(); ++a) {
          const auto d = decode_action(static_cast<long long>(a), m);
          const bool want = oracle::valid(g, d.i, d.j, d.src, d.tgt);
          any = any || want;
          mask_mismatch += mask[a] != want ? 1 : 0;
          ++entries;
        }
        const Episode ep(g, EpisodeConfig{}, kEsv, headline);
        const bool sat = ep.done() && ep.cause() == TerminationCause::Saturation;
        saturated += sat ? 1 : 0;
        saturation_mismatch += sat != !any ? 1 : 0;
      }
    }
  }
  const bool ok = mask_mismatch == 0 && saturation_mismatch == 0;
  report(3, "mask-soundness", ok,
         std::to_string(grids) + " grids (2x2 and 3x3), " + std::to_string(states) + " reachable states, " +
             std::to_string(entries) + " mask entries, " + std::to_string(mask_mismatch) + " mask mismatches, " +
             std::to_string(saturated) + " saturated states, " + std::to_string(saturation_mismatch) +
             " saturation mismatches; " + std::to_string(skipped) + " seeds over the " + std::to_string(cap) +
             "-state cap redrawn",
         t.seconds());
}

// 4 -------------------------------------------------------------------------
void riparian_invariant() {
  Timer t;
  std::mt19937_64 rng(4004);
  long long violations = 0, riparian_cells_seen = 0, steps = 0;
  const int sizes[] = {3, 5, 8, 10};
  const Preset presets[] = {Preset::Headline, Preset::SpatialNoRegen, Preset::EcoOnly};
  for (int e = 0; e < 1000; ++e) {
    const int m = sizes[e % 4];
    const auto g = oracle::random_grid(m, rng, 0.3, 0.1);
    RunConfig cfg;
    cfg.scenario = make_preset(presets[e % 3]);
    const auto rec = std::get<EpisodeRecord>(
        run_episode(g, {PlannerKind::Random, static_cast<std::uint64_t>(e)}, cfg, InitFilters::none()));
    audit_record(rec, g, cfg);

    std::vector<std::pair<int, int>> rip;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (oracle::near_water(g, i, j)) rip.emplace_back(i, j);
      }
    }
    riparian_cells_seen += static_cast<long long>(rip.size());
    GridState s = g;
    for (const auto& st : rec.steps) {
      s = apply_action(s, decode_action(st.action, m), 5).first;
      ++steps;
      for (const auto& [i, j] : rip) {
        if (s.at(i, j)[LandClass::Crops] > g.at(i, j)[LandClass::Crops] ||
            s.at(i, j)[LandClass::BuiltArea] > g.at(i, j)[LandClass::BuiltArea]) {
          ++violations;
        }
      }
    }
  }
  report(4, "riparian-invariant", violations == 0,
         "1000 random-policy episodes, " + std::to_string(steps) + " steps, " + std::to_string(riparian_cells_seen) +
             " water-adjacent cells tracked, " + std::to_string(violations) + " increases",
         t.seconds());
}

// 5 and 6 -------------------------------------------------------------------
struct EffectiveGrid {
  std::string id;
  GridState grid;
};

// Effective (V0 > 1) augmented test samples from synthetic regions, seed by seed.
std::vector<EffectiveGrid> effective_pool(std::size_t want) {
  std::vector<EffectiveGrid> out;
  const auto headline = headline_weights();
  for (std::uint64_t seed = 1; out.size() < want && seed < 100; ++seed) {
    const auto region = synth_region(50, default_composition(), seed);
    const auto d = build_dataset(region, 10, {seed});
    for (const auto& s : d.test) {
      if (out.size() == want) break;
      if (total_value(s.data.patch, kEsv, headline, 1.0).v_total <= 1.0) continue;
      out.push_back({"s" + std::to_string(seed) + "p" + std::to_string(s.patch_index) + "r" +
                         std::to_string(s.data.round),
                     s.data.patch});
    }
  }
  return out;
}

void baseline_ordering(const std::vector<EffectiveGrid>& pool) {
  Timer t;
  RunConfig cfg;  // headline preset, default episode settings
  int greedy_positive = 0, greedy_beats = 0;
  double random_sum = 0.0, greedy_sum = 0.0;
  for (std::size_t n = 0; n < pool.size(); ++n) {
    const auto& g = pool[n].grid;
    const auto gr = run_episode(g, {PlannerKind::Greedy, 0}, cfg, InitFilters::effective());
    const auto rr = run_episode(g, {PlannerKind::Random, 500 + n}, cfg, InitFilters::effective());
    const auto& greedy = std::get<EpisodeRecord>(gr);
    const auto& random = std::get<EpisodeRecord>(rr);
    audit_record(greedy, g, cfg);
    audit_record(random, g, cfg);
    greedy_positive += greedy.delta_v() > 0 ? 1 : 0;
    greedy_beats += greedy.delta_v() > random.delta_v() ? 1 : 0;
    random_sum += random.delta_v();
    greedy_sum += greedy.delta_v();
  }
  const int n = static_cast<int>(pool.size());
  const double random_mean = n > 0 ? random_sum / n : 0.0;
  const bool ok = n == 24 && greedy_positive == 24 && greedy_beats == 24 && random_mean < 0.0;
  report(5, "baseline-ordering", ok,
         std::to_string(n) + " effective grids; greedy dV>0 on " + std::to_string(greedy_positive) + "/" +
             std::to_string(n) + ", greedy > random on " + std::to_string(greedy_beats) + "/" + std::to_string(n) +
             ", mean dV greedy " + fmt("%.3f", n > 0 ? greedy_sum / n : 0.0) + " random " + fmt("%.3f", random_mean),
         t.seconds());
}

// Every water-adjacent cell holding crops or built can move it to a low-impact class.
bool restorable(const GridState& g) {
  const auto rip = riparian_cells(g);
  const auto mask = action_mask(g, rip);
  for (int i = 0; i < g.m(); ++i) {
    for (int j = 0; j < g.m(); ++j) {
      if (!rip[static_cast<std::size_t>(i * g.m() + j)]) continue;
      for (int src : {mod::kCrops, mod::kBuilt}) {
        if (g.at(i, j).modifiable(src) == 0) continue;
        bool fix = false;
        for (int tgt : {mod::kTrees, mod::kBare, mod::kRangeland}) {
          fix = fix || mask[static_cast<std::size_t>(encode_action({i, j, src, tgt}, g.m()))];
        }
        if (!fix) return false;
      }
    }
  }
  return true;
}

void buffer_cleanup(const std::vector<EffectiveGrid>& pool) {
  Timer t;
  RunConfig cfg;
  int eligible = 0, not_worse = 0, clean = 0, with_violation = 0;
  double worst_final = 0.0;
  for (const auto& e : pool) {
    if (!restorable(e.grid)) continue;
    ++eligible;
    const auto rec = std::get<EpisodeRecord>(run_episode(e.grid, {PlannerKind::Greedy, 0}, cfg, InitFilters::effective()));
    audit_record(rec, e.grid, cfg);
    with_violation += rec.initial.p_water > 0 ? 1 : 0;
    not_worse += rec.final.p_water <= rec.initial.p_water ? 1 : 0;
    clean += rec.final.p_water < 0.05 ? 1 : 0;
    worst_final = std::max(worst_final, rec.final.p_water);
  }
  const bool ok = eligible > 0 && not_worse == eligible && clean >= 0.8 * eligible;
  report(6, "greedy-buffer-cleanup", ok,
         std::to_string(eligible) + " eligible grids (" + std::to_string(with_violation) +
             " with initial violations); p_water not increased on " + std::to_string(not_worse) + "/" +
             std::to_string(eligible) + ", below 0.05 on " + std::to_string(clean) + "/" + std::to_string(eligible) +
             " (need >= 80%), worst final " + fmt("%.4f", worst_final),
         t.seconds());
}

// 7 -------------------------------------------------------------------------
void conservation_and_replay() {
  const bool ok = integrity.sum_violations == 0 && integrity.replay_failures == 0 && integrity.logs > 0;
  report(7, "conservation-and-replay", ok,
         std::to_string(integrity.states_checked) + " states audited, " + std::to_string(integrity.sum_violations) +
             " conservation violations; " + std::to_string(integrity.logs) + " action logs replayed, " +
             std::to_string(integrity.replay_failures) + " failures",
         0.0);
}

// 8 -------------------------------------------------------------------------
void dataset_counts() {
  Timer t;
  const auto region = synth_region(50, default_composition(), 8);
  const auto d = build_dataset(region, 10, {8});
  const auto aug = augment(region, d.origins.front(), 10, {8}, 0);
  const bool ok = d.origins.size() == 25 && d.split.train.size() == 17 && d.split.test.size() == 8 &&
                  aug.size() == 6 && d.test.size() == 48 && d.train.size() == 102;
  report(8, "dataset-counts", ok,
         std::to_string(d.origins.size()) + " patches, split " + std::to_string(d.split.train.size()) + "/" +
             std::to_string(d.split.test.size()) + ", augment factor " + std::to_string(aug.size()) + ", " +
             std::to_string(d.test.size()) + " augmented test samples",
         t.seconds());
}

}  // namespace

int main() {
  esv_normalization();
  reward_oracle();
  mask_soundness();
  riparian_invariant();
  const auto pool = effective_pool(24);
  baseline_ordering(pool);
  buffer_cleanup(pool);
  conservation_and_replay();
  dataset_counts();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
