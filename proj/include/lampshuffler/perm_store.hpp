#pragma once

// Mutable permutation stores used by the walk engine for F_n.
//
// IntervalPerm keeps a permutation of Z as maximal runs on which it is a
// translation. A cycle r_N costs two runs however large N is, so the heavy
// tailed walks stay within memory. HashPerm is the general sparse map.
//
// Both apply F <- F ∘ τ for an increment τ already translated to the current
// position, and maintain Disp(F) and |supp F| incrementally.

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "lampshuffler/finperm.hpp"

namespace lampshuffler {

class IntervalPerm {
 public:
  // F(x) = x + offset on [lo, hi].
  struct Run {
    std::int64_t lo;
    std::int64_t hi;
    std::int64_t offset;
    friend bool operator==(const Run&, const Run&) = default;
  };

  std::int64_t at(std::int64_t x) const;

  // F <- F ∘ τ, where τ is given as disjoint runs sorted by lo; runs with
  // offset 0 are ignored.
  void right_compose(std::span<const Run> tau);

  std::uint64_t displacement() const { return disp_; }
  std::uint64_t support_size() const { return support_; }
  bool is_identity() const { return runs_.empty(); }
  std::int64_t support_min() const { return runs_.begin()->first; }
  std::int64_t support_max() const { return runs_.rbegin()->second.hi; }

  std::vector<Run> runs() const;
  // Runs restricted to x < bound.
  std::vector<Run> runs_below(std::int64_t bound) const;
  FinPerm<IntLine> to_finperm() const;
  static IntervalPerm from_finperm(const FinPerm<IntLine>& f);

 private:
  struct Tail {
    std::int64_t hi;
    std::int64_t offset;
  };
  using Map = std::map<std::int64_t, Tail>;

  void split_at(std::int64_t x);
  void erase_range(std::int64_t lo, std::int64_t hi);
  void insert_run(const Run& r);
  void add_stats(const Run& r, int sign);

  Map runs_;
  std::uint64_t disp_ = 0;
  std::uint64_t support_ = 0;
};

// Maximal translation runs of a finitary permutation of Z, shifted by `shift`.
std::vector<IntervalPerm::Run> runs_of(const FinPerm<IntLine>& f, std::int64_t shift = 0);

template <class G>
class HashPerm {
 public:
  using Point = typename G::Point;

  explicit HashPerm(const G& g) : group_(g) {}

  Point at(const Point& x) const {
    auto it = map_.find(x);
    return it == map_.end() ? x : it->second;
  }

  // F <- F ∘ τ with τ given by its (x, τ(x)) pairs.
  void right_compose(std::span<const std::pair<Point, Point>> tau) {
    scratch_.clear();
    for (const auto& [x, tx] : tau) scratch_.emplace_back(x, at(tx));
    for (const auto& [x, v] : scratch_) {
      auto it = map_.find(x);
      if (it != map_.end()) {
        disp_ -= group_.distance(x, it->second);
        if (v == x) {
          map_.erase(it);
        } else {
          it->second = v;
          disp_ += group_.distance(x, v);
        }
      } else if (!(v == x)) {
        map_.emplace(x, v);
        disp_ += group_.distance(x, v);
      }
    }
  }

  std::uint64_t displacement() const { return disp_; }
  std::uint64_t support_size() const { return map_.size(); }

  FinPerm<G> to_finperm() const {
    return FinPerm<G>::from_pairs(std::vector<std::pair<Point, Point>>(map_.begin(), map_.end()));
  }

 private:
  G group_;
  std::unordered_map<Point, Point, typename G::Hash> map_;
  std::vector<std::pair<Point, Point>> scratch_;
  std::uint64_t disp_ = 0;
};

}  // namespace lampshuffler
