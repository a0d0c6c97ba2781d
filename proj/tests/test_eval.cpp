#include <gtest/gtest.h>

#include <sstream>

#include "esvland/dataset.hpp"
#include "esvland/eval.hpp"
#include "oracle.hpp"

using namespace esvland;

namespace {

std::vector<CompareInput> synthetic_inputs(int n, std::uint64_t seed, int m = 6) {
  std::mt19937_64 rng(seed);
  std::vector<CompareInput> out;
  for (int k = 0; k < n; ++k) out.push_back({"g" + std::to_string(k), oracle::random_grid(m, rng, 0.2, 0.05)});
  return out;
}

RunConfig short_config(Preset p = Preset::Headline, int t_max = 40) {
  RunConfig c;
  c.scenario = make_preset(p);
  c.episode.t_max = t_max;
  return c;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Compare, SingleMethodSingleGrid) {
  const auto inputs = synthetic_inputs(1, 1);
  const auto res = compare(inputs, {{PlannerKind::Greedy, 0}}, short_config());
  ASSERT_EQ(res.report.rows.size(), 1u);
  ASSERT_EQ(res.report.summaries.size(), 1u);
  const auto& s = res.report.summaries[0];
  EXPECT_EQ(s.episodes, 1);
  EXPECT_EQ(s.mean, res.report.rows[0].delta_v);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.mean_p_water, res.report.rows[0].final.p_water);
}

TEST(Compare, AggregatesRecomputableFromRows) {
  const auto inputs = synthetic_inputs(8, 2);
  const std::vector<PlannerSpec> methods = {{PlannerKind::Random, 3}, {PlannerKind::Greedy, 0}};
  const auto res = compare(inputs, methods, short_config(), 3);
  for (const auto& s : res.report.summaries) {
    std::vector<double> d;
    for (const auto& r : res.report.rows) {
      if (r.method == s.method) d.push_back(r.delta_v);
    }
    ASSERT_EQ(static_cast<int>(d.size()), s.episodes);
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    int wins = 0;
    for (double x : d) {
      var += (x - mean) * (x - mean);
      wins += x > 0 ? 1 : 0;
    }
    EXPECT_NEAR(s.mean, mean, 1e-12);
    EXPECT_NEAR(s.std, std::sqrt(var / static_cast<double>(d.size())), 1e-12);
    EXPECT_DOUBLE_EQ(s.success_rate, static_cast<double>(wins) / static_cast<double>(d.size()));
  }
}

TEST(Compare, ThreadCountDoesNotChangeResults) {
  const auto inputs = synthetic_inputs(6, 3);
  const std::vector<PlannerSpec> methods = {{PlannerKind::Random, 5}, {PlannerKind::Greedy, 0}};
  const auto a = compare(inputs, methods, short_config(), 1);
  const auto b = compare(inputs, methods, short_config(), 4);
  ASSERT_EQ(a.report.rows.size(), b.report.rows.size());
  for (std::size_t n = 0; n < a.report.rows.size(); ++n) {
    EXPECT_EQ(a.report.rows[n].grid_id, b.report.rows[n].grid_id);
    EXPECT_EQ(a.report.rows[n].method, b.report.rows[n].method);
    EXPECT_EQ(a.report.rows[n].delta_v, b.report.rows[n].delta_v);
  }
}

TEST(Compare, DominanceIsAntisymmetric) {
  const auto inputs = synthetic_inputs(8, 4);
  const std::vector<PlannerSpec> methods = {{PlannerKind::Random, 1}, {PlannerKind::Greedy, 0}, {PlannerKind::Random, 2}};
  const auto res = compare(inputs, methods, short_config());
  const auto& w = res.report.wins;
  const int grids = static_cast<int>(inputs.size() - res.report.rejected.size());
  for (std::size_t a = 0; a < w.size(); ++a) {
    EXPECT_EQ(w[a][a], 0);
    for (std::size_t b = 0; b < w.size(); ++b) EXPECT_LE(w[a][b] + w[b][a], grids);
  }
}

TEST(Compare, EmptyEffectiveSetIsReported) {
  std::vector<CompareInput> inputs = {{"water", GridState::uniform(5, LandClass::Water)},
                                      {"bare", GridState::uniform(5, LandClass::BareGround)}};
  const auto res = compare(inputs, {{PlannerKind::Greedy, 0}}, short_config());
  EXPECT_TRUE(res.report.empty());
  EXPECT_EQ(res.report.rejected.size(), 2u);
  ASSERT_EQ(res.report.summaries.size(), 1u);
  EXPECT_EQ(res.report.summaries[0].episodes, 0);
}

TEST(Decompose, WeightedComponentsSumToDeltaV) {
  const auto inputs = synthetic_inputs(10, 5);
  for (auto preset : {Preset::Headline, Preset::SpatialNoRegen, Preset::EcoOnly}) {
    const auto cfg = short_config(preset, 60);
    const auto res = compare(inputs, {{PlannerKind::Random, 7}, {PlannerKind::Greedy, 0}}, cfg);
    for (const auto& rec : res.records) {
      const auto d = decompose(rec, cfg.scenario.reward);
      EXPECT_NEAR(d.weighted_sum, d.delta_v, 1e-9);
      if (preset == Preset::EcoOnly) {
        EXPECT_NEAR(d.delta_v, d.delta.v_eco, 1e-12);
      }
    }
  }
}

TEST(Csv, Headers) {
  const auto res = compare(synthetic_inputs(2, 6), {{PlannerKind::Greedy, 0}, {PlannerKind::Random, 1}}, short_config());
  std::ostringstream report, summary, dom;
  write_report_csv(report, res.report);
  write_summary_csv(summary, res.report);
  write_dominance_csv(dom, res.report);
  EXPECT_EQ(first_line(report.str()), kReportColumns);
  EXPECT_EQ(first_line(summary.str()), kSummaryColumns);
  EXPECT_EQ(first_line(dom.str()), kDominanceColumns);
  const std::string text = report.str();
  const auto lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_EQ(lines, 1 + static_cast<long>(res.report.rows.size()));
}

TEST(Json, RecordCarriesHashesAndSteps) {
  const auto inputs = synthetic_inputs(1, 7);
  const auto res = compare(inputs, {{PlannerKind::Greedy, 0}}, short_config());
  ASSERT_EQ(res.records.size(), 1u);
  const auto j = record_json(res.records[0], "g0");
  EXPECT_EQ(j["grid_hash"], grid_hash(inputs[0].grid));
  EXPECT_EQ(j["steps"].size(), res.records[0].steps.size());
  EXPECT_EQ(reference_json()["greedy_mean_delta_v"], 12.95);
}
