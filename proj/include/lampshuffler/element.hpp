#pragma once

// Elements of the lampshuffler group FSym(H) ⋊ H and their word-length
// estimates with respect to S_std = S_H ∪ {δ_s : s ∈ S_H}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lampshuffler/base_group.hpp"
#include "lampshuffler/finperm.hpp"

namespace lampshuffler {

template <class G>
struct Element {
  using Point = typename G::Point;

  FinPerm<G> perm;
  Point pos{};

  friend bool operator==(const Element&, const Element&) = default;

  struct Hash {
    std::size_t operator()(const Element& e) const {
      return mix64(e.perm.hash() ^ (typename G::Hash{}(e.pos) * 0xc2b2ae3d27d4eb4fULL));
    }
  };
};

template <class G>
Element<G> identity_element(const G& g) {
  return {FinPerm<G>{}, g.identity()};
}

template <class G>
Element<G> translation(const G&, const typename G::Point& x) {
  return {FinPerm<G>{}, x};
}

// (f, x)·(f', x') = (f ∘ (x·f'), x x').
template <class G>
Element<G> compose(const G& g, const Element<G>& a, const Element<G>& b) {
  return {compose(g, a.perm, act(g, a.pos, b.perm)), g.mul(a.pos, b.pos)};
}

template <class G>
Element<G> inverse(const G& g, const Element<G>& a) {
  const auto inv_pos = g.inv(a.pos);
  return {act(g, inv_pos, inverse(g, a.perm)), inv_pos};
}

template <class G>
Element<G> evaluate_word(const G& g, const std::vector<Element<G>>& word) {
  Element<G> acc = identity_element(g);
  for (const auto& w : word) acc = compose(g, acc, w);
  return acc;
}

// max(⌈Disp(σ)/2⌉, ‖x‖_H), a lower bound for ‖(σ, x)‖ in S_std.
template <class G>
std::uint64_t length_lower(const G& g, const Element<G>& a) {
  const std::uint64_t disp = displacement(g, a.perm);
  return std::max((disp + 1) / 2, g.norm(a.pos));
}

// ---------------------------------------------------------------------------
// Explicit words on FSym(Z) ⋊ Z

enum class StdGenerator : std::uint8_t { Right, Left, SwapRight, SwapLeft };

std::string to_string(StdGenerator s);
Element<IntLine> generator_element(StdGenerator s);

struct SweepWord {
  std::uint64_t length = 0;
  std::vector<StdGenerator> word;  // empty unless requested
};

// Length of the insertion-sweep word for (σ, p) over S_std on Z.
//
// The cursor starts at 0 and visits target sites i in increasing order. The
// value σ(i) sits c_i places to the right of i (c_i counts the later sites
// with smaller target values); the cursor walks to i + c_i - 1 and bubbles
// the value left with alternating SwapRight / Left moves, ending at i.
// Finally the cursor walks to p. The length is at most
// 3·inversions(σ) + 2·|hull| + |p|.
//
// `values` is σ restricted to the interval [lo, lo + values.size()).
std::uint64_t sweep_length(std::int64_t lo, const std::vector<std::int64_t>& values, std::int64_t pos);

SweepWord length_upper(const Element<IntLine>& a, bool emit_word = false);

template <class G>
std::uint64_t length_upper(const G&, const Element<G>&) {
  throw GroupError("length_upper is only defined for H = Z with S_std");
}

inline std::uint64_t length_upper(const IntLine&, const Element<IntLine>& a) { return length_upper(a).length; }

// ---------------------------------------------------------------------------
// Generating sets

template <class G>
struct GeneratingSet {
  std::vector<Element<G>> elements;
};

// Adds missing inverses, drops duplicates and the identity; keeps first-seen order.
template <class G>
GeneratingSet<G> symmetric_closure(const G& g, const std::vector<Element<G>>& gens) {
  GeneratingSet<G> out;
  auto push = [&](const Element<G>& e) {
    if (e == identity_element(g)) return;
    for (const auto& existing : out.elements) {
      if (existing == e) return;
    }
    out.elements.push_back(e);
  };
  for (const auto& e : gens) {
    push(e);
    push(inverse(g, e));
  }
  return out;
}

// S_std = S_H ∪ {δ_s | s ∈ S_H}, listed as translations first then transpositions.
template <class G>
GeneratingSet<G> standard_generators(const G& g) {
  std::vector<Element<G>> gens;
  const auto sh = g.generators();
  for (const auto& s : sh) gens.push_back(translation(g, s));
  for (const auto& s : sh) gens.push_back({delta(g, s), g.identity()});
  return symmetric_closure(g, gens);
}

// ---------------------------------------------------------------------------
// JSON: {"pos": ..., "perm": [[x, f(x)], ...]} with perm sorted by x.

template <class G>
json element_to_json(const G& g, const Element<G>& e) {
  json perm = json::array();
  for (const auto& [x, fx] : e.perm.entries()) perm.push_back(json::array({g.to_json(x), g.to_json(fx)}));
  return {{"pos", g.to_json(e.pos)}, {"perm", perm}};
}

template <class G>
Element<G> element_from_json(const G& g, const json& j) {
  Element<G> e;
  e.pos = g.from_json(j.at("pos"));
  std::vector<typename FinPerm<G>::Entry> pairs;
  for (const auto& p : j.at("perm")) {
    if (!p.is_array() || p.size() != 2) throw PermutationError("perm entries must be [x, f(x)] pairs");
    pairs.emplace_back(g.from_json(p[0]), g.from_json(p[1]));
  }
  e.perm = FinPerm<G>::from_pairs(std::move(pairs));
  return e;
}

}  // namespace lampshuffler
