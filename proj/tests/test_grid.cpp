#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "esvland/action.hpp"
#include "esvland/grid.hpp"

using namespace esvland;

namespace {

Field field_from(int m, std::initializer_list<double> v) {
  Field f(m);
  f.values.assign(v);
  return f;
}

Field random_field(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Field f(m);
  for (auto& x : f.values) x = u(rng);
  return f;
}

}  // namespace

TEST(LandClass, ProtectedAndModifiableSplit) {
  int protected_count = 0, modifiable_count = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    (kind_of(static_cast<LandClass>(c)) == ClassKind::Protected ? protected_count : modifiable_count)++;
  }
  EXPECT_EQ(protected_count, 4);
  EXPECT_EQ(modifiable_count, 5);
  for (auto c : kProtectedClasses) EXPECT_EQ(modifiable_index(c), -1);
  for (int k = 0; k < kNumModifiable; ++k) EXPECT_EQ(modifiable_index(modifiable_class(k)), k);
  EXPECT_EQ(parse_class_name("built_area"), LandClass::BuiltArea);
  EXPECT_EQ(parse_class_name("Water"), LandClass::Water);
  EXPECT_THROW(parse_class_name("lava"), Error);
}

TEST(NeighborConvolve, ZeroField) {
  const Field out = neighbor_convolve(Field(3));
  for (double v : out.values) EXPECT_EQ(v, 0.0);
}

TEST(NeighborConvolve, CenterImpulse) {
  const Field out = neighbor_convolve(field_from(3, {0, 0, 0, 0, 1, 0, 0, 0, 0}));
  const std::vector<double> expected = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  EXPECT_EQ(out.values, expected);
}

TEST(NeighborConvolve, TwoByOneStrip) {
  // A 2x1 strip is embedded as the first column of a 2x2 field of zeros.
  const Field out = neighbor_convolve(field_from(2, {1, 0, 1, 0}));
  EXPECT_DOUBLE_EQ(out(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out(1, 0), 1.0);
}

TEST(NeighborConvolve, Linearity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 7;
    const Field f = random_field(m, rng), g = random_field(m, rng);
    const double a = 1.7, b = -0.3;
    Field mix(m);
    for (std::size_t n = 0; n < mix.values.size(); ++n) mix.values[n] = a * f.values[n] + b * g.values[n];
    const Field lhs = neighbor_convolve(mix);
    const Field kf = neighbor_convolve(f), kg = neighbor_convolve(g);
    for (std::size_t n = 0; n < lhs.values.size(); ++n) {
      EXPECT_NEAR(lhs.values[n], a * kf.values[n] + b * kg.values[n], 1e-12);
    }
  }
}

TEST(NeighborConvolve, CommutesWithFlips) {
  std::mt19937_64 rng(12);
  for (int m = 1; m <= 6; ++m) {
    const Field f = random_field(m, rng);
    Field h(m), v(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        h(i, m - 1 - j) = f(i, j);
        v(m - 1 - i, j) = f(i, j);
      }
    }
    const Field kf = neighbor_convolve(f), kh = neighbor_convolve(h), kv = neighbor_convolve(v);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        EXPECT_DOUBLE_EQ(kh(i, m - 1 - j), kf(i, j));
        EXPECT_DOUBLE_EQ(kv(m - 1 - i, j), kf(i, j));
      }
    }
  }
}

TEST(Observation, FullTreesCell) {
  GridState g = GridState::uniform(1, LandClass::Trees);
  const auto obs = observation(g);
  ASSERT_EQ(obs.values.size(), 5u);
  EXPECT_EQ(obs(0, 0, mod::kTrees), 1.0);
  for (int k = 1; k < kNumModifiable; ++k) EXPECT_EQ(obs(0, 0, k), 0.0);
}

TEST(Observation, WaterIsExcluded) {
  const auto obs = observation(GridState::uniform(2, LandClass::Water));
  for (double v : obs.values) EXPECT_EQ(v, 0.0);
}

TEST(Observation, MixedCell) {
  GridState g(1);
  g.at(0, 0)[LandClass::Water] = 10;
  g.at(0, 0)[LandClass::Crops] = 15;
  const auto obs = observation(g);
  EXPECT_DOUBLE_EQ(obs(0, 0, mod::kCrops), 0.6);
  EXPECT_EQ(obs(0, 0, mod::kTrees) + obs(0, 0, mod::kBuilt) + obs(0, 0, mod::kBare) + obs(0, 0, mod::kRangeland), 0.0);
}

TEST(GridFile, RoundTripsAndHashesStably) {
  GridState g(2);
  g.at(0, 0) = single_class_cell(LandClass::Water);
  g.at(0, 1)[LandClass::Crops] = 20;
  g.at(0, 1)[LandClass::Trees] = 5;
  g.at(1, 0) = single_class_cell(LandClass::Rangeland);
  g.at(1, 1) = single_class_cell(LandClass::BareGround);
  const std::string text = grid_to_string(g);
  EXPECT_EQ(text.substr(0, text.find('\n')), "gridfile v1 M=2 NP=25");
  EXPECT_EQ(grid_from_string(text), g);
  EXPECT_EQ(grid_hash(g), grid_hash(grid_from_string(text)));
  g.at(1, 1)[LandClass::BareGround] = 20;
  g.at(1, 1)[LandClass::Trees] = 5;
  EXPECT_NE(grid_hash(g), grid_hash(grid_from_string(text)));
}

TEST(GridFile, RejectsBadRows) {
  EXPECT_THROW(grid_from_string("gridfile v1 M=1 NP=25\n0 0 1 0 0 0 0 0 0 0 0\n"), Error);  // sums to 1
  EXPECT_THROW(grid_from_string("gridfile v1 M=1 NP=25\n0 0 25 0 0 0 0 0 0 0\n"), Error);   // 8 counts
  EXPECT_THROW(grid_from_string("gridfile v2 M=1 NP=25\n0 0 25 0 0 0 0 0 0 0 0\n"), Error);
  EXPECT_THROW(grid_from_string("gridfile v1 M=2 NP=25\n0 0 25 0 0 0 0 0 0 0 0\n"), Error);  // missing rows
  EXPECT_THROW(grid_from_string("gridfile v1 M=1 NP=25\n1 0 25 0 0 0 0 0 0 0 0\n"), Error);  // out of range
  EXPECT_THROW(grid_from_string("gridfile v1 M=1 NP=25\n0 0 30 -5 0 0 0 0 0 0 0\n"), Error);
  EXPECT_NO_THROW(grid_from_string("gridfile v1 M=1 NP=25\n0 0 25 0 0 0 0 0 0 0 0\n"));
}

TEST(ActionEncoding, RoundTripsEveryIndex) {
  for (int m : {1, 2, 3, 10}) {
    for (long long a = 0; a < action_count(m); ++a) {
      const auto d = decode_action(a, m);
      ASSERT_EQ(encode_action(d, m), a);
      ASSERT_EQ(a, (((d.i * m) + d.j) * 5 + d.src) * 5 + d.tgt);
    }
  }
  EXPECT_THROW(decode_action(action_count(3), 3), Error);
  EXPECT_THROW(decode_action(-1, 3), Error);
  EXPECT_THROW(encode_action({0, 0, 5, 0}, 3), Error);
}
