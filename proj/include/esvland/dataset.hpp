#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "esvland/grid.hpp"

namespace esvland {

using Composition = std::array<double, kNumClasses>;

// Study-region shares in class-id order. The published percentages add up to
// 100.1%, so they are rescaled to sum to one.
inline Composition default_composition() {
  Composition c{};
  c[class_id(LandClass::Water)] = 45.2;
  c[class_id(LandClass::Trees)] = 0.3;
  c[class_id(LandClass::Flooded)] = 2.4;
  c[class_id(LandClass::Crops)] = 24.5;
  c[class_id(LandClass::BuiltArea)] = 7.9;
  c[class_id(LandClass::BareGround)] = 0.1;
  c[class_id(LandClass::Rangeland)] = 19.7;
  const double total = std::accumulate(c.begin(), c.end(), 0.0);
  for (auto& v : c) v /= total;
  return c;
}

inline void validate_composition(const Composition& c) {
  double total = 0.0;
  for (double v : c) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("composition fractions must be finite and non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error("composition fractions sum to " + std::to_string(total) + ", expected 1");
}

// Parses "water=0.5,crops=0.5"; unlisted classes are 0. Must sum to 1 within 1e-6.
inline Composition parse_composition(const std::string& text) {
  Composition c{};
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(pos, end - pos);
    pos = end + 1;
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("composition entry '" + item + "' is not name=fraction");
    double v = 0.0;
    try {
      v = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("composition entry '" + item + "' has a bad fraction");
    }
    c[static_cast<std::size_t>(class_id(parse_class_name(item.substr(0, eq))))] += v;
  }
  validate_composition(c);
  return c;
}

// Pixel shares of each class over the whole grid.
inline Composition composition_of(const GridState& g) {
  Composition c{};
  const double total = static_cast<double>(g.size()) * g.n_pixels();
  for (int k = 0; k < kNumClasses; ++k) c[static_cast<std::size_t>(k)] = g.class_total(static_cast<LandClass>(k)) / total;
  return c;
}

// Seeded region-growing generator. Pixels are labelled on a (m*side)^2 raster
// by random-frontier growth from a few seeds per class (water from one seed on
// the east edge), then aggregated into side x side cells. Pixel quotas use
// largest-remainder rounding, so class shares match the composition to within
// one pixel.
inline GridState synth_region(int m, const Composition& composition, std::uint64_t seed, int side = 5) {
  if (m <= 0 || side <= 0) throw Error("synth_region: dimensions must be positive");
  validate_composition(composition);
  const int n = m * side;
  const long long total = static_cast<long long>(n) * n;

  std::array<long long, kNumClasses> quota{};
  std::vector<std::pair<double, int>> remainders;
  long long assigned = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double exact = composition[static_cast<std::size_t>(k)] * static_cast<double>(total);
    quota[static_cast<std::size_t>(k)] = static_cast<long long>(std::floor(exact));
    assigned += quota[static_cast<std::size_t>(k)];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++quota[static_cast<std::size_t>(remainders[r % remainders.size()].second)];

  // Water first, then the rest by descending quota; the last class fills whatever is left.
  std::vector<int> order;
  for (int k = 0; k < kNumClasses; ++k) {
    if (quota[static_cast<std::size_t>(k)] > 0 && k != class_id(LandClass::Water)) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return quota[static_cast<std::size_t>(a)] > quota[static_cast<std::size_t>(b)]; });
  if (quota[class_id(LandClass::Water)] > 0) order.insert(order.begin(), class_id(LandClass::Water));

  Rng rng(seed);
  std::vector<int> label(static_cast<std::size_t>(total), -1);
  auto random_unassigned = [&]() {
    std::uniform_int_distribution<long long> pick(0, total - 1);
    long long p = pick(rng);
    while (label[static_cast<std::size_t>(p)] >= 0) p = (p + 1) % total;
    return p;
  };
  constexpr long long kBlobPixels = 900;  // about 6x6 cells of 25 pixels

  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const int cls = order[oi];
    if (oi + 1 == order.size()) {
      for (auto& l : label) {
        if (l < 0) l = cls;
      }
      break;
    }
    long long remaining = quota[static_cast<std::size_t>(cls)];
    std::vector<long long> frontier;
    if (cls == class_id(LandClass::Water)) {
      std::uniform_int_distribution<int> row(0, n - 1);
      frontier.push_back(static_cast<long long>(row(rng)) * n + (n - 1));
    } else {
      const long long seeds = std::max<long long>(1, remaining / kBlobPixels);
      for (long long s = 0; s < seeds; ++s) frontier.push_back(random_unassigned());
    }
    while (remaining > 0) {
      if (frontier.empty()) frontier.push_back(random_unassigned());
      std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
      const std::size_t idx = pick(rng);
      const long long p = frontier[idx];
      frontier[idx] = frontier.back();
      frontier.pop_back();
      if (label[static_cast<std::size_t>(p)] >= 0) continue;
      label[static_cast<std::size_t>(p)] = cls;
      --remaining;
      const int pi = static_cast<int>(p / n), pj = static_cast<int>(p % n);
      for_each_neighbor(n, pi, pj, [&](int qi, int qj) {
        const long long q = static_cast<long long>(qi) * n + qj;
        if (label[static_cast<std::size_t>(q)] < 0) frontier.push_back(q);
      });
    }
  }

  GridState g(m, side * side);
  for (int pi = 0; pi < n; ++pi) {
    for (int pj = 0; pj < n; ++pj) {
      g.at(pi / side, pj / side).counts[static_cast<std::size_t>(label[static_cast<std::size_t>(pi * n + pj)])] += 1;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Patches, split and augmentation.

struct PatchOrigin {
  int row = 0;
  int col = 0;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

inline GridState crop(const GridState& region, PatchOrigin origin, int size) {
  if (origin.row < 0 || origin.col < 0 || origin.row + size > region.m() || origin.col + size > region.m()) {
    throw Error("patch window exceeds the region");
  }
  GridState p(size, region.n_pixels());
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) p.at(i, j) = region.at(origin.row + i, origin.col + j);
  }
  return p;
}

inline std::vector<PatchOrigin> patch_origins(int region_m, int patch_size) {
  if (patch_size <= 0 || region_m % patch_size != 0) {
    throw Error("region dimension " + std::to_string(region_m) + " is not divisible by patch size " +
                std::to_string(patch_size));
  }
  std::vector<PatchOrigin> out;
  for (int r = 0; r < region_m; r += patch_size) {
    for (int c = 0; c < region_m; c += patch_size) out.push_back({r, c});
  }
  return out;
}

// Non-overlapping tiles in row-major order.
inline std::vector<GridState> extract_patches(const GridState& region, int patch_size) {
  std::vector<GridState> out;
  for (const auto& o : patch_origins(region.m(), patch_size)) out.push_back(crop(region, o, patch_size));
  return out;
}

// Inverse of extract_patches.
inline GridState assemble_patches(const std::vector<GridState>& patches, int region_m) {
  if (patches.empty()) throw Error("no patches to assemble");
  const int size = patches.front().m();
  const auto origins = patch_origins(region_m, size);
  if (origins.size() != patches.size()) throw Error("patch count does not tile the region");
  GridState g(region_m, patches.front().n_pixels());
  for (std::size_t n = 0; n < patches.size(); ++n) {
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) g.at(origins[n].row + i, origins[n].col + j) = patches[n].at(i, j);
    }
  }
  return g;
}

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  int n_aug = 5;
  int shift_range = 2;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0, 1)");
    if (n_aug < 0 || shift_range < 0) throw Error("n_aug and shift_range must be non-negative");
  }
};

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

// Seeded shuffle; the first floor(train_fraction * n) indices go to train.
// Both lists are returned sorted.
inline Split split(int n_patches, const SplitSpec& spec) {
  spec.validate();
  if (n_patches < 2) throw Error("split needs at least two patches");
  std::vector<int> idx(static_cast<std::size_t>(n_patches));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n_patches));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct AugmentedPatch {
  GridState patch;
  int round = 0;  // 0 is the original
  int shift_row = 0;
  int shift_col = 0;
  PatchOrigin origin;  // window actually cropped, after clamping
};

// The original window plus n_aug windows shifted by uniform draws from
// [-shift_range, shift_range]^2; shifted windows are clamped inside the region.
// `stream` separates the random streams of different patches.
inline std::vector<AugmentedPatch> augment(const GridState& region, PatchOrigin origin, int patch_size,
                                           const SplitSpec& spec, std::uint64_t stream) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6175u};
  Rng rng(seq);
  std::uniform_int_distribution<int> shift(-spec.shift_range, spec.shift_range);
  const int max_origin = region.m() - patch_size;
  std::vector<AugmentedPatch> out;
  out.push_back({crop(region, origin, patch_size), 0, 0, 0, origin});
  for (int r = 1; r <= spec.n_aug; ++r) {
    const int dr = shift(rng);
    const int dc = shift(rng);
    const PatchOrigin o{std::clamp(origin.row + dr, 0, max_origin), std::clamp(origin.col + dc, 0, max_origin)};
    out.push_back({crop(region, o, patch_size), r, dr, dc, o});
  }
  return out;
}

struct Sample {
  int patch_index = 0;
  AugmentedPatch data;
};

struct Dataset {
  std::vector<PatchOrigin> origins;
  Split split;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Full pipeline: tile, split, then augment every patch on both sides of the split.
inline Dataset build_dataset(const GridState& region, int patch_size, const SplitSpec& spec) {
  Dataset d;
  d.origins = patch_origins(region.m(), patch_size);
  d.split = split(static_cast<int>(d.origins.size()), spec);
  auto expand = [&](const std::vector<int>& idx, std::vector<Sample>& out) {
    for (int p : idx) {
      for (auto& a : augment(region, d.origins[static_cast<std::size_t>(p)], patch_size, spec, static_cast<std::uint64_t>(p))) {
        out.push_back({p, std::move(a)});
      }
    }
  };
  expand(d.split.train, d.train);
  expand(d.split.test, d.test);
  return d;
}

}  // namespace esvland
