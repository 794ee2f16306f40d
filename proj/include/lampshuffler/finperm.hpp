#pragma once

// Finitely supported permutations of a base group.
//
// A FinPerm stores only the points it moves, as an association list sorted by
// the carrier's total order. The stored form is canonical: two equal
// permutations have identical entry vectors, so equality and hashing are
// plain structural operations.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lampshuffler/base_group.hpp"

namespace lampshuffler {

class PermutationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class G>
class FinPerm {
 public:
  using Point = typename G::Point;
  using Entry = std::pair<Point, Point>;

  FinPerm() = default;

  // Builds a permutation from (x, f(x)) pairs. Fixed points are dropped; the
  // remaining pairs must describe a bijection of their key set.
  static FinPerm from_pairs(std::vector<Entry> pairs) {
    typename G::Less less;
    std::erase_if(pairs, [](const Entry& e) { return e.first == e.second; });
    std::sort(pairs.begin(), pairs.end(), [&](const Entry& a, const Entry& b) { return less(a.first, b.first); });
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (!less(pairs[i - 1].first, pairs[i].first)) throw PermutationError("duplicate key in permutation");
    }
    std::vector<Point> values;
    values.reserve(pairs.size());
    for (const auto& e : pairs) values.push_back(e.second);
    std::sort(values.begin(), values.end(), less);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!(values[i] == pairs[i].first)) throw PermutationError("pairs do not map the support onto itself");
    }
    FinPerm f;
    f.entries_ = std::move(pairs);
    return f;
  }

  // Trusted constructor: entries sorted by key, fixed points already removed.
  static FinPerm from_sorted_unchecked(std::vector<Entry> entries) {
    FinPerm f;
    f.entries_ = std::move(entries);
    return f;
  }

  Point operator()(const Point& x) const {
    typename G::Less less;
    auto it = std::lower_bound(entries_.begin(), entries_.end(), x,
                               [&](const Entry& e, const Point& p) { return less(e.first, p); });
    if (it != entries_.end() && it->first == x) return it->second;
    return x;
  }

  std::span<const Entry> entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  bool is_identity() const { return entries_.empty(); }

  std::vector<Point> support() const {
    std::vector<Point> s;
    s.reserve(entries_.size());
    for (const auto& e : entries_) s.push_back(e.first);
    return s;
  }

  std::size_t hash() const {
    typename G::Hash h;
    std::uint64_t acc = 0x84222325cbf29ce4ULL ^ entries_.size();
    for (const auto& e : entries_) {
      acc = mix64(acc ^ h(e.first));
      acc = mix64(acc ^ (h(e.second) * 0x9e3779b97f4a7c15ULL));
    }
    return acc;
  }

  friend bool operator==(const FinPerm& a, const FinPerm& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
};

// δ_x^y: swaps x and y.
template <class G>
FinPerm<G> transposition(const G&, const typename G::Point& x, const typename G::Point& y) {
  if (x == y) return {};
  return FinPerm<G>::from_pairs({{x, y}, {y, x}});
}

// δ_x := δ_x^{e_H}.
template <class G>
FinPerm<G> delta(const G& g, const typename G::Point& x) {
  return transposition(g, x, g.identity());
}

// (h·f)(x) = h f(h^{-1} x); supp(h·f) = h·supp(f).
template <class G>
FinPerm<G> act(const G& g, const typename G::Point& h, const FinPerm<G>& f) {
  if (h == g.identity() || f.is_identity()) return f;
  std::vector<typename FinPerm<G>::Entry> out;
  out.reserve(f.support_size());
  for (const auto& [x, fx] : f.entries()) out.emplace_back(g.mul(h, x), g.mul(h, fx));
  typename G::Less less;
  if (!std::is_sorted(out.begin(), out.end(), [&](const auto& a, const auto& b) { return less(a.first, b.first); })) {
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return less(a.first, b.first); });
  }
  return FinPerm<G>::from_sorted_unchecked(std::move(out));
}

// (a ∘ b)(x) = a(b(x)).
template <class G>
FinPerm<G> compose(const G&, const FinPerm<G>& a, const FinPerm<G>& b) {
  if (a.is_identity()) return b;
  if (b.is_identity()) return a;
  typename G::Less less;
  auto ea = a.entries();
  auto eb = b.entries();
  std::vector<typename FinPerm<G>::Entry> out;
  out.reserve(ea.size() + eb.size());
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    typename G::Point x;
    if (j == eb.size() || (i < ea.size() && less(ea[i].first, eb[j].first))) {
      x = ea[i++].first;
    } else if (i == ea.size() || less(eb[j].first, ea[i].first)) {
      x = eb[j++].first;
    } else {
      x = ea[i].first;
      ++i;
      ++j;
    }
    auto y = a(b(x));
    if (!(y == x)) out.emplace_back(x, y);
  }
  return FinPerm<G>::from_sorted_unchecked(std::move(out));
}

template <class G>
FinPerm<G> inverse(const G&, const FinPerm<G>& f) {
  std::vector<typename FinPerm<G>::Entry> out;
  out.reserve(f.support_size());
  for (const auto& [x, fx] : f.entries()) out.emplace_back(fx, x);
  typename G::Less less;
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return less(a.first, b.first); });
  return FinPerm<G>::from_sorted_unchecked(std::move(out));
}

// Disp(f) = Σ_x d_H(x, f(x)).
template <class G>
std::uint64_t displacement(const G& g, const FinPerm<G>& f) {
  std::uint64_t total = 0;
  for (const auto& [x, fx] : f.entries()) total += g.distance(x, fx);
  return total;
}

// r_n: the cycle 0 -> 1 -> ... -> n-1 -> 0 on Z (identity for n <= 1).
FinPerm<IntLine> cycle_perm(std::int64_t n);

}  // namespace lampshuffler
