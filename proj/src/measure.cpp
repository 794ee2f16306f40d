#include "lampshuffler/measure.hpp"

#include <algorithm>
#include <numeric>

namespace lampshuffler {

MeasureSpec<IntLine> drifted_std() {
  IntLine z;
  auto m = uniform_measure(z,
                           {translation(z, std::int64_t{2}), translation(z, std::int64_t{-1}),
                            Element<IntLine>{delta(z, std::int64_t{1}), 0}, Element<IntLine>{delta(z, std::int64_t{-1}), 0}},
                           "drifted_std");
  return m;
}

MeasureSpec<IntLine> drifted_translation() {
  IntLine z;
  return uniform_measure(z, {translation(z, std::int64_t{2}), translation(z, std::int64_t{-1})}, "drifted_translation");
}

MeasureSpec<IntLine> counterexample_measure() {
  IntLine z;
  MeasureSpec<IntLine> m{z, {}, HeavyTail{Rational(1, 2)}, "counterexample"};
  m.atoms.push_back({translation(z, std::int64_t{1}), Rational(1, 8)});
  m.atoms.push_back({translation(z, std::int64_t{-1}), Rational(3, 8)});
  m.validate();
  return m;
}

std::vector<FinPerm<IntLine>> sigma_set(int m) {
  if (m < 3) throw MeasureError("Sigma_M requires M >= 3, got " + std::to_string(m));
  if (m > 8) throw MeasureError("Sigma_M enumeration is limited to M <= 8");
  std::vector<int> image(static_cast<std::size_t>(m));
  std::iota(image.begin(), image.end(), 1);
  std::vector<FinPerm<IntLine>> out;
  do {
    std::vector<FinPerm<IntLine>::Entry> pairs;
    for (std::int64_t x = -m; x <= 0; ++x) pairs.emplace_back(x, x + m);
    for (int x = 1; x <= m; ++x) pairs.emplace_back(x, -image[static_cast<std::size_t>(x - 1)]);
    out.push_back(FinPerm<IntLine>::from_pairs(std::move(pairs)));
  } while (std::next_permutation(image.begin(), image.end()));
  return out;
}

MeasureSpec<IntLine> sigma_measure(int m, Rational bias) {
  if (bias <= 0 || bias >= 1) throw MeasureError("sigma_M bias must lie in (0, 1)");
  IntLine z;
  const auto set = sigma_set(m);
  const auto count = static_cast<std::int64_t>(set.size());
  MeasureSpec<IntLine> spec{z, {}, std::nullopt, "sigma_M"};
  for (const auto& f : set) spec.atoms.push_back({Element<IntLine>{f, m + 1}, bias / count});
  for (const auto& f : set) spec.atoms.push_back({inverse(z, Element<IntLine>{f, m + 1}), (Rational(1) - bias) / count});
  spec.validate();
  return spec;
}

MeasureSpec<FreeGroup> free_delta(int k) {
  FreeGroup g(k);
  std::vector<Element<FreeGroup>> elements;
  for (int i = 1; i <= k; ++i) elements.push_back({delta(g, g.letter(i)), g.letter(i)});
  return uniform_measure(g, elements, "free_delta");
}

namespace {

template <class G>
ProjectionMoments lattice_moments(const MeasureSpec<G>& m, int dim, auto coord) {
  ProjectionMoments pm{std::vector<Rational>(static_cast<std::size_t>(dim), Rational(0)),
                       std::vector<Rational>(static_cast<std::size_t>(dim), Rational(0))};
  for (const auto& [p, mass] : projection(m)) {
    for (int i = 0; i < dim; ++i) {
      const Rational x(coord(p, i));
      pm.mean[static_cast<std::size_t>(i)] += x * mass;
      pm.second[static_cast<std::size_t>(i)] += x * x * mass;
    }
  }
  return pm;
}

}  // namespace

ProjectionMoments projection_moments(const MeasureSpec<IntLine>& m) {
  return lattice_moments(m, 1, [](std::int64_t p, int) { return p; });
}

ProjectionMoments projection_moments(const MeasureSpec<Lattice>& m) {
  return lattice_moments(m, m.group.dim, [](const LatticePoint& p, int i) { return p.c[static_cast<std::size_t>(i)]; });
}

template <class G>
MeasureSpec<G> measure_from_json(const G& g, const json& j) {
  if (j.contains("atoms")) {
    MeasureSpec<G> m{g, {}, std::nullopt, j.value("name", std::string("custom"))};
    for (const auto& a : j.at("atoms")) {
      const json& p = a.at("p");
      const Rational mass = p.is_string() ? parse_rational(p.get<std::string>()) : Rational(p.get<std::int64_t>());
      m.atoms.push_back({element_from_json(g, a), mass});
    }
    if (j.contains("tail")) m.tail = HeavyTail{parse_rational(j.at("tail").get<std::string>())};
    m.validate();
    return m;
  }
  const std::string name = j.at("name").get<std::string>();
  if (name == "simple_std") return simple_std(g);
  if constexpr (std::is_same_v<G, IntLine>) {
    if (name == "drifted_std") return drifted_std();
    if (name == "drifted_translation") return drifted_translation();
    if (name == "counterexample") return counterexample_measure();
    if (name == "sigma_M") {
      const Rational bias = j.contains("bias") ? parse_rational(j.at("bias").get<std::string>()) : Rational(1, 2);
      return sigma_measure(j.value("M", 3), bias);
    }
  }
  if constexpr (std::is_same_v<G, FreeGroup>) {
    if (name == "free_delta") return free_delta(g.rank);
  }
  throw MeasureError("measure '" + name + "' is not available on carrier " + g.descriptor().dump());
}

template MeasureSpec<IntLine> measure_from_json(const IntLine&, const json&);
template MeasureSpec<Lattice> measure_from_json(const Lattice&, const json&);
template MeasureSpec<FreeGroup> measure_from_json(const FreeGroup&, const json&);

}  // namespace lampshuffler
