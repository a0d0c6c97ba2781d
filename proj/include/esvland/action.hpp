#pragma once

#include <string>

#include "esvland/grid.hpp"

namespace esvland {

// One transfer: move pixels from modifiable class `src` to `tgt` in cell (i, j).
struct DecodedAction {
  int i = 0;
  int j = 0;
  int src = 0;
  int tgt = 0;

  friend bool operator==(const DecodedAction&, const DecodedAction&) = default;
};

inline long long action_count(int m) {
  return static_cast<long long>(m) * m * kNumModifiable * kNumModifiable;
}

// Row-major ravel over shape (M, M, K, K).
inline long long encode_action(const DecodedAction& a, int m) {
  if (a.i < 0 || a.i >= m || a.j < 0 || a.j >= m || a.src < 0 || a.src >= kNumModifiable || a.tgt < 0 ||
      a.tgt >= kNumModifiable) {
    throw Error("action component out of range");
  }
  return ((static_cast<long long>(a.i) * m + a.j) * kNumModifiable + a.src) * kNumModifiable + a.tgt;
}

inline DecodedAction decode_action(long long flat, int m) {
  if (flat < 0 || flat >= action_count(m)) {
    throw Error("flat action " + std::to_string(flat) + " out of range [0, " + std::to_string(action_count(m)) + ")");
  }
  DecodedAction a;
  a.tgt = static_cast<int>(flat % kNumModifiable);
  flat /= kNumModifiable;
  a.src = static_cast<int>(flat % kNumModifiable);
  flat /= kNumModifiable;
  a.j = static_cast<int>(flat % m);
  a.i = static_cast<int>(flat / m);
  return a;
}

}  // namespace esvland
