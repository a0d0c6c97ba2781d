#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esvland {

// Raised for malformed inputs (bad files, out-of-range indices, invalid parameters).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// All randomness in the library flows through explicitly seeded engines of this type.
using Rng = std::mt19937_64;

inline constexpr int kNumClasses = 9;
inline constexpr int kNumModifiable = 5;
inline constexpr int kDefaultPixelsPerCell = 25;

// Land-cover classes in table order. The numeric value is the class id.
enum class LandClass : int {
  Water = 0,
  Trees = 1,
  Flooded = 2,
  Crops = 3,
  BuiltArea = 4,
  BareGround = 5,
  SnowIce = 6,
  Clouds = 7,
  Rangeland = 8,
};

enum class ClassKind { Protected, Modifiable };

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Water", "Trees", "Flooded", "Crops", "BuiltArea", "BareGround", "SnowIce", "Clouds", "Rangeland"};

// Modifiable classes in their secondary (observation / action) index order.
inline constexpr std::array<LandClass, kNumModifiable> kModifiableClasses = {
    LandClass::Trees, LandClass::Crops, LandClass::BuiltArea, LandClass::BareGround, LandClass::Rangeland};

inline constexpr std::array<LandClass, 4> kProtectedClasses = {
    LandClass::Water, LandClass::Flooded, LandClass::SnowIce, LandClass::Clouds};

// Secondary indices of the modifiable classes, for readability at call sites.
namespace mod {
inline constexpr int kTrees = 0;
inline constexpr int kCrops = 1;
inline constexpr int kBuilt = 2;
inline constexpr int kBare = 3;
inline constexpr int kRangeland = 4;
}  // namespace mod

constexpr int class_id(LandClass c) { return static_cast<int>(c); }

constexpr ClassKind kind_of(LandClass c) {
  switch (c) {
    case LandClass::Water:
    case LandClass::Flooded:
    case LandClass::SnowIce:
    case LandClass::Clouds:
      return ClassKind::Protected;
    default:
      return ClassKind::Modifiable;
  }
}

constexpr LandClass modifiable_class(int k) { return kModifiableClasses.at(static_cast<std::size_t>(k)); }

// Secondary index of a modifiable class, or -1 for protected classes.
constexpr int modifiable_index(LandClass c) {
  for (int k = 0; k < kNumModifiable; ++k) {
    if (kModifiableClasses[static_cast<std::size_t>(k)] == c) return k;
  }
  return -1;
}

constexpr std::string_view class_name(LandClass c) { return kClassNames.at(static_cast<std::size_t>(class_id(c))); }

// Case-insensitive lookup accepting the table names plus a few short aliases
// (water, trees, flooded, crops, built, bare, snow, clouds, rangeland).
inline LandClass parse_class_name(std::string_view name) {
  std::string lower;
  for (char ch : name) {
    if (ch == '_' || ch == '-' || ch == ' ' || ch == '/') continue;
    lower.push_back(static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch));
  }
  struct Alias {
    std::string_view key;
    LandClass cls;
  };
  static constexpr Alias aliases[] = {
      {"water", LandClass::Water},         {"trees", LandClass::Trees},       {"tree", LandClass::Trees},
      {"flooded", LandClass::Flooded},     {"wetlands", LandClass::Flooded},  {"floodedwetlands", LandClass::Flooded},
      {"crops", LandClass::Crops},         {"crop", LandClass::Crops},        {"builtarea", LandClass::BuiltArea},
      {"built", LandClass::BuiltArea},     {"bareground", LandClass::BareGround}, {"bare", LandClass::BareGround},
      {"snowice", LandClass::SnowIce},     {"snow", LandClass::SnowIce},      {"clouds", LandClass::Clouds},
      {"rangeland", LandClass::Rangeland}, {"range", LandClass::Rangeland},
  };
  for (const auto& a : aliases) {
    if (a.key == lower) return a.cls;
  }
  throw Error("unknown land class name: " + std::string(name));
}

// Pixel counts of one cell over the nine classes.
struct CellCounts {
  std::array<int, kNumClasses> counts{};

  int& operator[](LandClass c) { return counts[static_cast<std::size_t>(class_id(c))]; }
  int operator[](LandClass c) const { return counts[static_cast<std::size_t>(class_id(c))]; }

  int modifiable(int k) const { return (*this)[modifiable_class(k)]; }
  int& modifiable(int k) { return (*this)[modifiable_class(k)]; }

  int total() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
  }
  int modifiable_total() const {
    int s = 0;
    for (int k = 0; k < kNumModifiable; ++k) s += modifiable(k);
    return s;
  }

  friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

// Builds a cell holding n pixels of a single class (n defaults to the full cell).
inline CellCounts single_class_cell(LandClass c, int n = kDefaultPixelsPerCell) {
  CellCounts cell;
  cell[c] = n;
  return cell;
}

// Row-major M x M grid of cells; every cell sums to pixels_per_cell.
class GridState {
public:
  GridState() = default;
  GridState(int m, int pixels_per_cell = kDefaultPixelsPerCell)
      : m_(m), n_pixels_(pixels_per_cell), cells_(static_cast<std::size_t>(m) * static_cast<std::size_t>(m)) {
    if (m <= 0) throw Error("grid dimension must be positive");
    if (pixels_per_cell <= 0) throw Error("pixels per cell must be positive");
  }

  // Grid filled with one class everywhere.
  static GridState uniform(int m, LandClass c, int pixels_per_cell = kDefaultPixelsPerCell) {
    GridState g(m, pixels_per_cell);
    for (auto& cell : g.cells_) cell = single_class_cell(c, pixels_per_cell);
    return g;
  }

  int m() const { return m_; }
  int n_pixels() const { return n_pixels_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < m_ && j < m_; }

  CellCounts& at(int i, int j) { return cells_[index(i, j)]; }
  const CellCounts& at(int i, int j) const { return cells_[index(i, j)]; }

  const std::vector<CellCounts>& cells() const { return cells_; }

  // Throws if any cell does not sum to n_pixels or has a negative count.
  void validate() const {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < m_; ++j) {
        const auto& cell = at(i, j);
        for (int c : cell.counts) {
          if (c < 0) throw Error("negative pixel count at cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        if (cell.total() != n_pixels_) {
          throw Error("cell (" + std::to_string(i) + "," + std::to_string(j) + ") sums to " +
                      std::to_string(cell.total()) + ", expected " + std::to_string(n_pixels_));
        }
      }
    }
  }

  long long class_total(LandClass c) const {
    long long s = 0;
    for (const auto& cell : cells_) s += cell[c];
    return s;
  }

  long long modifiable_total() const {
    long long s = 0;
    for (const auto& cell : cells_) s += cell.modifiable_total();
    return s;
  }

  double modifiable_fraction() const {
    return static_cast<double>(modifiable_total()) / (static_cast<double>(cells_.size()) * n_pixels_);
  }

  friend bool operator==(const GridState&, const GridState&) = default;

private:
  std::size_t index(int i, int j) const {
    if (!in_bounds(i, j)) {
      throw Error("cell index (" + std::to_string(i) + "," + std::to_string(j) + ") out of range for M=" +
                  std::to_string(m_));
    }
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j);
  }

  int m_ = 0;
  int n_pixels_ = kDefaultPixelsPerCell;
  std::vector<CellCounts> cells_;
};

// Dense row-major M x M real field.
struct Field {
  int m = 0;
  std::vector<double> values;

  Field() = default;
  explicit Field(int dim, double fill = 0.0)
      : m(dim), values(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), fill) {}

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(i * m + j)]; }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(i * m + j)]; }
};

// 4-connected neighbour sum with zero padding. The kernel has no self term.
inline Field neighbor_convolve(const Field& field) {
  Field out(field.m);
  const int m = field.m;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      if (i > 0) s += field(i - 1, j);
      if (i + 1 < m) s += field(i + 1, j);
      if (j > 0) s += field(i, j - 1);
      if (j + 1 < m) s += field(i, j + 1);
      out(i, j) = s;
    }
  }
  return out;
}

// Calls fn(ni, nj) for each in-bounds 4-neighbour of (i, j).
template <typename Fn>
void for_each_neighbor(int m, int i, int j, Fn&& fn) {
  if (i > 0) fn(i - 1, j);
  if (i + 1 < m) fn(i + 1, j);
  if (j > 0) fn(i, j - 1);
  if (j + 1 < m) fn(i, j + 1);
}

// Modifiable-class fractions, shape M x M x K, flattened as ((i*M)+j)*K + k.
struct Observation {
  int m = 0;
  std::vector<double> values;

  double operator()(int i, int j, int k) const {
    return values[static_cast<std::size_t>((i * m + j) * kNumModifiable + k)];
  }
};

inline Observation observation(const GridState& state) {
  Observation obs;
  obs.m = state.m();
  obs.values.reserve(state.size() * kNumModifiable);
  const double np = state.n_pixels();
  for (const auto& cell : state.cells()) {
    for (int k = 0; k < kNumModifiable; ++k) obs.values.push_back(cell.modifiable(k) / np);
  }
  return obs;
}

// Fraction of one modifiable channel as a field.
inline Field channel_field(const GridState& state, int k) {
  Field f(state.m());
  const double np = state.n_pixels();
  for (int i = 0; i < state.m(); ++i) {
    for (int j = 0; j < state.m(); ++j) f(i, j) = state.at(i, j).modifiable(k) / np;
  }
  return f;
}

// Protected-water fraction per cell.
using WaterMap = Field;

inline WaterMap water_map(const GridState& state) {
  WaterMap w(state.m());
  const double np = state.n_pixels();
  for (int i = 0; i < state.m(); ++i) {
    for (int j = 0; j < state.m(); ++j) w(i, j) = state.at(i, j)[LandClass::Water] / np;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Grid text format:
//   gridfile v1 M=<m> NP=<n_pixels>
//   i j c0 c1 ... c8        (M*M lines, counts in class-id order)

inline void write_grid(std::ostream& os, const GridState& g) {
  os << "gridfile v1 M=" << g.m() << " NP=" << g.n_pixels() << '\n';
  for (int i = 0; i < g.m(); ++i) {
    for (int j = 0; j < g.m(); ++j) {
      os << i << ' ' << j;
      for (int c : g.at(i, j).counts) os << ' ' << c;
      os << '\n';
    }
  }
}

inline std::string grid_to_string(const GridState& g) {
  std::ostringstream os;
  write_grid(os, g);
  return os.str();
}

inline GridState read_grid(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error("grid file: missing header");
  std::istringstream hs(header);
  std::string magic, version, mtok, nptok;
  hs >> magic >> version >> mtok >> nptok;
  if (magic != "gridfile" || version != "v1" || mtok.rfind("M=", 0) != 0 || nptok.rfind("NP=", 0) != 0) {
    throw Error("grid file: bad header '" + header + "'");
  }
  int m = 0, np = 0;
  try {
    m = std::stoi(mtok.substr(2));
    np = std::stoi(nptok.substr(3));
  } catch (const std::exception&) {
    throw Error("grid file: bad header '" + header + "'");
  }
  GridState g(m, np);
  std::vector<bool> seen(g.size(), false);
  std::string line;
  int rows = 0;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    CellCounts cell;
    if (!(ls >> i >> j)) throw Error("grid file line " + std::to_string(lineno) + ": expected cell indices");
    for (auto& c : cell.counts) {
      if (!(ls >> c)) throw Error("grid file line " + std::to_string(lineno) + ": expected 9 counts");
      if (c < 0) throw Error("grid file line " + std::to_string(lineno) + ": negative count");
    }
    std::string extra;
    if (ls >> extra) throw Error("grid file line " + std::to_string(lineno) + ": trailing data");
    if (!g.in_bounds(i, j)) throw Error("grid file line " + std::to_string(lineno) + ": cell index out of range");
    if (cell.total() != np) {
      throw Error("grid file line " + std::to_string(lineno) + ": counts sum to " + std::to_string(cell.total()) +
                  ", expected " + std::to_string(np));
    }
    const auto idx = static_cast<std::size_t>(i * m + j);
    if (seen[idx]) throw Error("grid file line " + std::to_string(lineno) + ": duplicate cell");
    seen[idx] = true;
    g.at(i, j) = cell;
    ++rows;
  }
  if (rows != m * m) throw Error("grid file: expected " + std::to_string(m * m) + " rows, got " + std::to_string(rows));
  return g;
}

inline GridState grid_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_grid(is);
}

inline GridState load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grid file: " + path);
  return read_grid(in);
}

// FNV-1a 64-bit; stable across platforms and builds.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

inline std::string grid_hash(const GridState& g) { return hex64(fnv1a64(grid_to_string(g))); }

}  // namespace esvland
