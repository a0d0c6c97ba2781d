#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "esvland/config.hpp"
#include "esvland/planners.hpp"

namespace esvland {

// Published trained-policy figures, kept as report metadata only.
struct ReferenceNumbers {
  static constexpr double kPpoMeanDeltaV = 8.50;
  static constexpr double kPpoStdDeltaV = 4.56;
  static constexpr double kPpoSuccessRate = 1.0;
  static constexpr double kGreedyMeanDeltaV = 12.95;
  static constexpr double kGreedyStdDeltaV = 8.76;
  static constexpr double kRandomMeanDeltaV = -4.82;
  static constexpr double kRandomStdDeltaV = 2.49;
  static constexpr double kRandomSuccessRate = 0.04;
};

struct ComponentDeltas {
  ValueBreakdown initial;
  ValueBreakdown final;
  ValueBreakdown delta;   // final - initial, component-wise
  double weighted_sum = 0.0;  // sum of weighted component deltas; equals delta_v
  double delta_v = 0.0;
};

inline ComponentDeltas decompose(const EpisodeRecord& rec, const RewardConfig& cfg) {
  ComponentDeltas d;
  d.initial = rec.initial;
  d.final = rec.final;
  d.delta.v_eco = rec.final.v_eco - rec.initial.v_eco;
  d.delta.c_tree = rec.final.c_tree - rec.initial.c_tree;
  d.delta.c_crop = rec.final.c_crop - rec.initial.c_crop;
  d.delta.c_built = rec.final.c_built - rec.initial.c_built;
  d.delta.p_water = rec.final.p_water - rec.initial.p_water;
  d.delta.b_riparian = rec.final.b_riparian - rec.initial.b_riparian;
  d.delta.w_water = rec.final.w_water;
  d.delta.v_total = rec.final.v_total - rec.initial.v_total;
  d.weighted_sum = d.delta.v_eco + cfg.w_tree * d.delta.c_tree + cfg.w_crop * d.delta.c_crop +
                   cfg.w_built * d.delta.c_built - rec.final.w_water * d.delta.p_water +
                   cfg.w_riparian * d.delta.b_riparian;
  d.delta_v = rec.delta_v();
  return d;
}

struct ReportRow {
  std::string grid_id;
  std::string method;
  double v0 = 0.0;
  double delta_v = 0.0;
  ValueBreakdown final;
  TerminationCause cause = TerminationCause::StepLimit;
  int steps = 0;
};

struct MethodSummary {
  std::string method;
  int episodes = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double success_rate = 0.0;
  double mean_v_eco = 0.0;
  double mean_c_tree = 0.0;
  double mean_c_crop = 0.0;
  double mean_c_built = 0.0;
  double mean_p_water = 0.0;
  double mean_b_riparian = 0.0;
};

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<ReportRow> rows;
  std::vector<std::string> rejected;  // grid ids that failed the effective filter
  // wins[a][b]: grids where method a reached a strictly larger delta V than method b.
  std::vector<std::vector<int>> wins;
  std::vector<MethodSummary> summaries;

  bool empty() const { return rows.empty(); }
};

inline std::vector<MethodSummary> summarize(const std::vector<ReportRow>& rows, const std::vector<std::string>& methods) {
  std::vector<MethodSummary> out;
  for (const auto& m : methods) {
    MethodSummary s;
    s.method = m;
    std::vector<const ReportRow*> mine;
    for (const auto& r : rows) {
      if (r.method == m) mine.push_back(&r);
    }
    s.episodes = static_cast<int>(mine.size());
    if (!mine.empty()) {
      const double n = static_cast<double>(mine.size());
      int success = 0;
      for (const auto* r : mine) {
        s.mean += r->delta_v;
        success += r->delta_v > 0.0 ? 1 : 0;
        s.mean_v_eco += r->final.v_eco;
        s.mean_c_tree += r->final.c_tree;
        s.mean_c_crop += r->final.c_crop;
        s.mean_c_built += r->final.c_built;
        s.mean_p_water += r->final.p_water;
        s.mean_b_riparian += r->final.b_riparian;
      }
      s.mean /= n;
      s.mean_v_eco /= n;
      s.mean_c_tree /= n;
      s.mean_c_crop /= n;
      s.mean_c_built /= n;
      s.mean_p_water /= n;
      s.mean_b_riparian /= n;
      double var = 0.0;
      for (const auto* r : mine) var += (r->delta_v - s.mean) * (r->delta_v - s.mean);
      s.std = std::sqrt(var / n);
      s.success_rate = success / n;
    }
    out.push_back(s);
  }
  return out;
}

inline std::vector<std::vector<int>> dominance(const std::vector<ReportRow>& rows, const std::vector<std::string>& methods) {
  std::map<std::string, std::map<std::string, double>> by_grid;  // grid -> method -> delta
  for (const auto& r : rows) by_grid[r.grid_id][r.method] = r.delta_v;
  const std::size_t k = methods.size();
  std::vector<std::vector<int>> wins(k, std::vector<int>(k, 0));
  for (const auto& [grid, per] : by_grid) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        auto ia = per.find(methods[a]);
        auto ib = per.find(methods[b]);
        if (a != b && ia != per.end() && ib != per.end() && ia->second > ib->second) ++wins[a][b];
      }
    }
  }
  return wins;
}

struct CompareInput {
  std::string id;
  GridState grid;
};

struct CompareResult {
  ComparisonReport report;
  std::vector<EpisodeRecord> records;  // aligned with report.rows
};

// Runs every method on every effective grid (V0 > min_initial_value). Episodes
// run on up to `jobs` threads; row order is grid-major, then method order.
inline CompareResult compare(const std::vector<CompareInput>& grids, const std::vector<PlannerSpec>& methods,
                             const RunConfig& cfg, int jobs = 1) {
  CompareResult out;
  for (const auto& m : methods) out.report.methods.push_back(m.label());

  const EsvTable esv = build_esv_table(cfg.scenario.regen_uplift);
  std::vector<const CompareInput*> effective;
  for (const auto& g : grids) {
    const double v0 = total_value(g.grid, esv, cfg.scenario.reward, 1.0).v_total;
    if (v0 > cfg.episode.min_initial_value) {
      effective.push_back(&g);
    } else {
      out.report.rejected.push_back(g.id);
    }
  }

  const std::size_t n_tasks = effective.size() * methods.size();
  std::vector<std::optional<EpisodeRecord>> slots(n_tasks);
  std::vector<std::string> errors(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const auto& g = *effective[t / methods.size()];
      const auto& spec = methods[t % methods.size()];
      try {
        auto res = run_episode(g.grid, spec, cfg, InitFilters::effective());
        if (auto* rec = std::get_if<EpisodeRecord>(&res)) slots[t] = std::move(*rec);
        else errors[t] = std::get<Rejection>(res).message();
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(n_tasks, 1))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < n_tasks; ++t) {
    if (!slots[t]) throw Error("compare: episode failed on grid " + effective[t / methods.size()]->id + ": " + errors[t]);
    const auto& rec = *slots[t];
    ReportRow row;
    row.grid_id = effective[t / methods.size()]->id;
    row.method = out.report.methods[t % methods.size()];
    row.v0 = rec.initial.v_total;
    row.delta_v = rec.delta_v();
    row.final = rec.final;
    row.cause = rec.cause;
    row.steps = static_cast<int>(rec.steps.size());
    out.report.rows.push_back(row);
    out.records.push_back(std::move(*slots[t]));
  }
  out.report.summaries = summarize(out.report.rows, out.report.methods);
  out.report.wins = dominance(out.report.rows, out.report.methods);
  return out;
}

// ---------------------------------------------------------------------------
// CSV and JSON output.

inline constexpr const char* kReportColumns =
    "grid_id,method,v0,delta_v,v_eco,c_tree,c_crop,c_built,p_water,b_riparian,v_final,termination,steps";
inline constexpr const char* kSummaryColumns =
    "method,episodes,mean_delta_v,std_delta_v,success_rate,mean_v_eco,mean_c_tree,mean_c_crop,mean_c_built,"
    "mean_p_water,mean_b_riparian";
inline constexpr const char* kDominanceColumns = "method_a,method_b,a_wins,b_wins,ties,grids";

inline void write_report_csv(std::ostream& os, const ComparisonReport& r) {
  os << kReportColumns << '\n';
  for (const auto& row : r.rows) {
    os << row.grid_id << ',' << row.method << ',' << format_real(row.v0) << ',' << format_real(row.delta_v) << ','
       << format_real(row.final.v_eco) << ',' << format_real(row.final.c_tree) << ','
       << format_real(row.final.c_crop) << ',' << format_real(row.final.c_built) << ','
       << format_real(row.final.p_water) << ',' << format_real(row.final.b_riparian) << ','
       << format_real(row.final.v_total) << ',' << cause_name(row.cause) << ',' << row.steps << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const ComparisonReport& r) {
  os << kSummaryColumns << '\n';
  for (const auto& s : r.summaries) {
    os << s.method << ',' << s.episodes << ',' << format_real(s.mean) << ',' << format_real(s.std) << ','
       << format_real(s.success_rate) << ',' << format_real(s.mean_v_eco) << ',' << format_real(s.mean_c_tree) << ','
       << format_real(s.mean_c_crop) << ',' << format_real(s.mean_c_built) << ',' << format_real(s.mean_p_water)
       << ',' << format_real(s.mean_b_riparian) << '\n';
  }
}

inline void write_dominance_csv(std::ostream& os, const ComparisonReport& r) {
  os << kDominanceColumns << '\n';
  const std::size_t k = r.methods.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      std::map<std::string, int> seen;
      for (const auto& row : r.rows) {
        if (row.method == r.methods[a] || row.method == r.methods[b]) ++seen[row.grid_id];
      }
      int both = 0;
      for (const auto& [g, c] : seen) both += c == 2 ? 1 : 0;
      const int aw = r.wins[a][b], bw = r.wins[b][a];
      os << r.methods[a] << ',' << r.methods[b] << ',' << aw << ',' << bw << ',' << both - aw - bw << ',' << both
         << '\n';
    }
  }
}

inline nlohmann::json breakdown_json(const ValueBreakdown& b) {
  return {{"v_eco", b.v_eco},     {"c_tree", b.c_tree},         {"c_crop", b.c_crop},
          {"c_built", b.c_built}, {"p_water", b.p_water},       {"b_riparian", b.b_riparian},
          {"w_water", b.w_water}, {"v_total", b.v_total}};
}

inline nlohmann::json record_json(const EpisodeRecord& rec, const std::string& grid_id = {}) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : rec.steps) {
    steps.push_back({{"t", s.t}, {"action", s.action}, {"transferred", s.transferred}, {"reward", s.reward}});
  }
  return {{"grid_id", grid_id},
          {"grid_hash", rec.grid_hash},
          {"config_hash", rec.config_hash},
          {"planner", rec.planner.label()},
          {"seed", rec.planner.seed},
          {"termination", cause_name(rec.cause)},
          {"v0", rec.initial.v_total},
          {"delta_v", rec.delta_v()},
          {"initial", breakdown_json(rec.initial)},
          {"final", breakdown_json(rec.final)},
          {"steps", steps}};
}

inline nlohmann::json reference_json() {
  using R = ReferenceNumbers;
  return {{"ppo_mean_delta_v", R::kPpoMeanDeltaV},       {"ppo_std_delta_v", R::kPpoStdDeltaV},
          {"ppo_success_rate", R::kPpoSuccessRate},      {"greedy_mean_delta_v", R::kGreedyMeanDeltaV},
          {"greedy_std_delta_v", R::kGreedyStdDeltaV},   {"random_mean_delta_v", R::kRandomMeanDeltaV},
          {"random_std_delta_v", R::kRandomStdDeltaV},   {"random_success_rate", R::kRandomSuccessRate},
          {"note", "published reference values; not produced or asserted by this tool"}};
}

}  // namespace esvland
