#pragma once

// Base groups H used as the permutation domain of FSym(H) ⋊ H.
//
// Three concrete carriers are provided as small value types that model the
// same static interface (Point, identity, mul, inv, norm, distance, Less,
// Hash, generators, JSON conversion):
//
//   IntLine  - the integers, additive.
//   Lattice  - Z^d with the L1 word norm, d <= kMaxLatticeDim.
//   FreeGroup - the free group F_k; reduced words are interned in a
//               process-wide trie so that a point is a single id.
//
// A dynamic facade (BasePoint / BaseGroupDescriptor) mirrors the same
// operations for configuration files and for code that only learns the
// carrier at run time.

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lampshuffler {

using json = nlohmann::json;

class GroupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a 64-bit position would overflow.
class PositionOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw PositionOverflow("position overflow: " + std::to_string(a) + " + " + std::to_string(b));
  }
  return r;
}

inline std::int64_t checked_neg(std::int64_t a) {
  if (a == INT64_MIN) throw PositionOverflow("position overflow: negation of INT64_MIN");
  return -a;
}

inline std::uint64_t abs_u64(std::int64_t a) {
  return a < 0 ? ~static_cast<std::uint64_t>(a) + 1 : static_cast<std::uint64_t>(a);
}

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

enum class GroupKind { Z, Zd, Free };

std::string to_string(GroupKind kind);

// ---------------------------------------------------------------------------
// Z

struct IntLine {
  using Point = std::int64_t;
  static constexpr GroupKind kind = GroupKind::Z;

  struct Less {
    bool operator()(Point a, Point b) const { return a < b; }
  };
  struct Hash {
    std::size_t operator()(Point a) const { return mix64(static_cast<std::uint64_t>(a)); }
  };

  Point identity() const { return 0; }
  Point mul(Point a, Point b) const { return checked_add(a, b); }
  Point inv(Point a) const { return checked_neg(a); }
  std::uint64_t norm(Point a) const { return abs_u64(a); }
  std::uint64_t distance(Point a, Point b) const { return norm(checked_add(b, checked_neg(a))); }
  std::vector<Point> generators() const { return {1, -1}; }

  json to_json(Point a) const { return a; }
  Point from_json(const json& j) const;
  json descriptor() const { return {{"kind", "Z"}}; }

  friend bool operator==(const IntLine&, const IntLine&) = default;
};

// ---------------------------------------------------------------------------
// Z^d

inline constexpr int kMaxLatticeDim = 4;

struct LatticePoint {
  std::array<std::int64_t, kMaxLatticeDim> c{};

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

struct Lattice {
  using Point = LatticePoint;
  static constexpr GroupKind kind = GroupKind::Zd;

  int dim = 1;

  explicit Lattice(int d = 1);

  struct Less {
    bool operator()(const Point& a, const Point& b) const { return a < b; }
  };
  struct Hash {
    std::size_t operator()(const Point& a) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL;
      for (auto v : a.c) h = mix64(h ^ static_cast<std::uint64_t>(v));
      return h;
    }
  };

  Point identity() const { return {}; }
  Point mul(const Point& a, const Point& b) const {
    Point r;
    for (int i = 0; i < dim; ++i) r.c[i] = checked_add(a.c[i], b.c[i]);
    return r;
  }
  Point inv(const Point& a) const {
    Point r;
    for (int i = 0; i < dim; ++i) r.c[i] = checked_neg(a.c[i]);
    return r;
  }
  std::uint64_t norm(const Point& a) const {
    std::uint64_t s = 0;
    for (int i = 0; i < dim; ++i) s += abs_u64(a.c[i]);
    return s;
  }
  std::uint64_t distance(const Point& a, const Point& b) const { return norm(mul(inv(a), b)); }
  std::vector<Point> generators() const;

  Point unit(int axis, std::int64_t scale = 1) const {
    Point p;
    p.c[axis] = scale;
    return p;
  }

  json to_json(const Point& a) const;
  Point from_json(const json& j) const;
  json descriptor() const { return {{"kind", "Zd"}, {"d", dim}}; }

  friend bool operator==(const Lattice&, const Lattice&) = default;
};

// ---------------------------------------------------------------------------
// Free group F_k

// Letters are signed generator indices: +i is x_i, -i is x_i^{-1}, 1 <= i <= k.
struct FreeWord {
  std::uint32_t id = 0;  // 0 is the empty word

  friend bool operator==(FreeWord, FreeWord) = default;
};

// Hash-consed trie of reduced words. Every reduced word has exactly one node,
// so equality of FreeWord is equality of ids. Hashes and the shortlex order
// are computed from the letters, never from ids, so they do not depend on the
// order in which words were interned.
class WordTrie {
 public:
  static WordTrie& instance();

  FreeWord append(FreeWord w, int letter);  // w·letter, reduced
  FreeWord parent(FreeWord w) const;
  FreeWord truncate(FreeWord w, std::uint32_t length) const { return FreeWord{ancestor(w.id, length)}; }  // prefix
  int last_letter(FreeWord w) const;
  std::uint32_t length(FreeWord w) const;
  std::uint64_t hash(FreeWord w) const;
  // Ancestors of equal-length words, climbed until their parents coincide.
  std::pair<FreeWord, FreeWord> below_common_ancestor(FreeWord a, FreeWord b) const;
  std::vector<int> letters(FreeWord w) const;
  FreeWord from_letters(const std::vector<int>& letters);
  // Shortlex comparison: -1, 0, 1.
  int compare(FreeWord a, FreeWord b) const;
  std::size_t size() const;

 private:
  WordTrie();

  struct Node {
    std::uint32_t parent;
    std::int32_t letter;
    std::uint32_t length;
    std::uint64_t hash;
    std::uint32_t jump;  // skew-binary ancestor, depends only on length
  };
  static constexpr std::uint32_t kChunkBits = 16;
  static constexpr std::uint32_t kChunkSize = 1u << kChunkBits;
  static constexpr std::uint32_t kMaxChunks = 1u << 15;

  std::uint32_t ancestor(std::uint32_t id, std::uint32_t length) const;
  const Node& node(std::uint32_t id) const {
    return chunks_[id >> kChunkBits].load(std::memory_order_acquire)[id & (kChunkSize - 1)];
  }

  std::unique_ptr<std::atomic<Node*>[]> chunks_;
  std::uint32_t count_ = 0;
  std::unordered_map<std::uint64_t, std::uint32_t> children_;
  mutable std::shared_mutex mutex_;
};

// Letter order used by shortlex: x1 < x1^-1 < x2 < x2^-1 < ...
inline int letter_rank(int letter) { return 2 * (letter < 0 ? -letter : letter) + (letter < 0 ? 1 : 0); }

struct FreeGroup {
  using Point = FreeWord;
  static constexpr GroupKind kind = GroupKind::Free;

  int rank = 2;

  explicit FreeGroup(int k = 2);

  struct Less {
    bool operator()(FreeWord a, FreeWord b) const { return WordTrie::instance().compare(a, b) < 0; }
  };
  struct Hash {
    std::size_t operator()(FreeWord a) const { return WordTrie::instance().hash(a); }
  };

  Point identity() const { return {}; }
  Point mul(Point a, Point b) const;
  Point inv(Point a) const;
  std::uint64_t norm(Point a) const { return WordTrie::instance().length(a); }
  std::uint64_t distance(Point a, Point b) const;
  std::vector<Point> generators() const;

  Point letter(int l) const;
  Point word(const std::vector<int>& letters) const;

  json to_json(Point a) const { return WordTrie::instance().letters(a); }
  Point from_json(const json& j) const;
  json descriptor() const { return {{"kind", "Free"}, {"k", rank}}; }

  friend bool operator==(const FreeGroup&, const FreeGroup&) = default;
};

// ---------------------------------------------------------------------------
// Dynamic facade

using IntVec = std::vector<std::int64_t>;

struct ReducedWord {
  std::vector<int> letters;

  // Performs full free cancellation.
  static ReducedWord reduce(const std::vector<int>& letters);
  friend auto operator<=>(const ReducedWord&, const ReducedWord&) = default;
};

using BasePoint = std::variant<std::int64_t, IntVec, ReducedWord>;

struct BaseGroupDescriptor {
  GroupKind kind = GroupKind::Z;
  int d = 1;  // Zd only
  int k = 1;  // Free only

  static BaseGroupDescriptor from_json(const json& j);
  json to_json() const;
  // Symmetric generating set S_H, identity excluded.
  std::vector<BasePoint> generators() const;
  BasePoint identity() const;
  bool admits(const BasePoint& p) const;
};

BasePoint base_mul(const BasePoint& a, const BasePoint& b, const BaseGroupDescriptor& g);
BasePoint base_inv(const BasePoint& a, const BaseGroupDescriptor& g);
std::uint64_t base_norm(const BasePoint& a, const BaseGroupDescriptor& g);

}  // namespace lampshuffler
