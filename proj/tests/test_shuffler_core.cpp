#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "lampshuffler/bfs.hpp"
#include "lampshuffler/element.hpp"
#include "lampshuffler/rng.hpp"

using namespace lampshuffler;

namespace {

const IntLine z;
using E = Element<IntLine>;
using P = FinPerm<IntLine>;

P perm(std::vector<P::Entry> pairs) { return P::from_pairs(std::move(pairs)); }

// pointwise map of a permutation on [lo, hi], for brute-force comparisons
std::map<std::int64_t, std::int64_t> table(const P& f, std::int64_t lo, std::int64_t hi) {
  std::map<std::int64_t, std::int64_t> t;
  for (std::int64_t x = lo; x <= hi; ++x) t[x] = f(x);
  return t;
}

P random_perm(CounterRng& rng, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> pts;
  for (std::int64_t x = lo; x <= hi; ++x) {
    if (rng.below(2)) pts.push_back(x);
  }
  auto img = pts;
  for (std::size_t i = img.size(); i > 1; --i) std::swap(img[i - 1], img[rng.below(i)]);
  std::vector<P::Entry> pairs;
  for (std::size_t i = 0; i < pts.size(); ++i) pairs.emplace_back(pts[i], img[i]);
  return perm(pairs);
}

E random_element(CounterRng& rng) {
  return {random_perm(rng, -6, 6), static_cast<std::int64_t>(rng.below(13)) - 6};
}

E evaluate(const std::vector<StdGenerator>& word) {
  E acc = identity_element(z);
  for (auto s : word) acc = compose(z, acc, generator_element(s));
  return acc;
}

}  // namespace

TEST_CASE("FinPerm construction") {
  CHECK(perm({{1, 1}, {2, 2}}).is_identity());
  CHECK_THROWS(perm({{0, 1}, {1, 1}}));
  CHECK_THROWS(perm({{0, 1}}));
  CHECK_THROWS(perm({{0, 1}, {0, 2}, {1, 0}}));
  const auto f = perm({{0, 2}, {2, 1}, {1, 0}, {5, 5}});
  CHECK(f.support_size() == 3);
  CHECK(f(7) == 7);
  CHECK(f(0) == 2);
}

TEST_CASE("act examples") {
  const auto d1 = delta(z, std::int64_t{1});
  CHECK(act(z, std::int64_t{0}, d1) == d1);
  const auto moved = act(z, std::int64_t{1}, d1);
  CHECK(moved(1) == 2);
  CHECK(moved(2) == 1);
  CHECK(moved.support_size() == 2);
  CHECK(act(z, std::int64_t{5}, cycle_perm(3)).support() == std::vector<std::int64_t>{5, 6, 7});
}

TEST_CASE("compose examples") {
  const E g{delta(z, std::int64_t{1}), 1};
  CHECK(compose(z, identity_element(z), g) == g);
  const E sq = compose(z, g, g);
  CHECK(sq.pos == 2);
  CHECK(table(sq.perm, -3, 5) == table(perm({{0, 1}, {1, 2}, {2, 0}}), -3, 5));

  // brute force: (f, x)(f', x') acts as f(x + f'(y - x)) on points
  CounterRng rng({5, 0});
  for (int i = 0; i < 2000; ++i) {
    const E a = random_element(rng), b = random_element(rng);
    const E c = compose(z, a, b);
    CHECK(c.pos == a.pos + b.pos);
    bool ok = true;
    for (std::int64_t y = -20; y <= 20; ++y) ok = ok && c.perm(y) == a.perm(a.pos + b.perm(y - a.pos));
    CHECK(ok);
  }
}

TEST_CASE("inverse examples") {
  CHECK(inverse(z, identity_element(z)) == identity_element(z));
  const E d{delta(z, std::int64_t{1}), 0};
  CHECK(inverse(z, d) == d);
  const E inv = inverse(z, E{delta(z, std::int64_t{1}), 1});
  CHECK(inv.pos == -1);
  CHECK(inv.perm == perm({{-1, 0}, {0, -1}}));
  CHECK(compose(z, E{delta(z, std::int64_t{1}), 1}, inv) == identity_element(z));

  CounterRng rng({6, 0});
  for (int i = 0; i < 10000; ++i) {
    const E g = random_element(rng);
    REQUIRE(compose(z, g, inverse(z, g)) == identity_element(z));
    REQUIRE(compose(z, inverse(z, g), g) == identity_element(z));
  }
}

TEST_CASE("displacement examples") {
  CHECK(displacement(z, P{}) == 0);
  CHECK(displacement(z, transposition(z, std::int64_t{0}, std::int64_t{3})) == 6);
  CHECK(displacement(z, cycle_perm(5)) == 8);
  for (std::int64_t n = 2; n <= 40; ++n) CHECK(displacement(z, cycle_perm(n)) == static_cast<std::uint64_t>(2 * (n - 1)));
}

TEST_CASE("length_lower examples") {
  CHECK(length_lower(z, identity_element(z)) == 0);
  CHECK(length_lower(z, translation(z, std::int64_t{7})) == 7);
  CHECK(length_lower(z, E{cycle_perm(5), 0}) == 4);
}

TEST_CASE("length_upper examples") {
  CHECK(length_upper(identity_element(z)).length == 0);
  CHECK(length_upper(translation(z, std::int64_t{7})).length == 7);
  const E d{delta(z, std::int64_t{1}), 0};
  const auto w = length_upper(d, true);
  // regression lock on the sweep schedule
  CHECK(w.length == 1);
  CHECK(evaluate(w.word) == d);
  CHECK_THROWS_AS(length_upper(Lattice(2), identity_element(Lattice(2))), GroupError);
}

TEST_CASE("length_upper words evaluate back") {
  CounterRng rng({8, 0});
  for (int i = 0; i < 3000; ++i) {
    const E g = random_element(rng);
    const auto w = length_upper(g, true);
    REQUIRE(w.word.size() == w.length);
    REQUIRE(evaluate(w.word) == g);
    CHECK(w.length >= length_lower(z, g));
  }
}

TEST_CASE("action is by automorphisms") {
  CounterRng rng({9, 0});
  const Lattice l(2);
  for (int i = 0; i < 10000; ++i) {
    const P f = random_perm(rng, -5, 5), g = random_perm(rng, -5, 5);
    const std::int64_t h1 = static_cast<std::int64_t>(rng.below(21)) - 10;
    const std::int64_t h2 = static_cast<std::int64_t>(rng.below(21)) - 10;
    REQUIRE(act(z, h1, compose(z, f, g)) == compose(z, act(z, h1, f), act(z, h1, g)));
    REQUIRE(act(z, h1 + h2, f) == act(z, h1, act(z, h2, f)));
    REQUIRE(displacement(z, act(z, h1, f)) == displacement(z, f));
    REQUIRE(displacement(z, inverse(z, f)) == displacement(z, f));
    REQUIRE(inverse(z, f).support() == f.support());
  }
  // the same on Z^2 and F_2
  LatticePoint a, b;
  a.c[0] = 1;
  b.c[1] = -1;
  const auto t = transposition(l, a, b);
  LatticePoint h;
  h.c[0] = 3;
  h.c[1] = 2;
  CHECK(displacement(l, act(l, h, t)) == displacement(l, t));
  const FreeGroup fg(2);
  const auto df = delta(fg, fg.letter(1));
  const auto moved = act(fg, fg.letter(2), df);
  CHECK(moved(fg.letter(2)) == fg.word({2, 1}));
  CHECK(moved(fg.word({2, 1})) == fg.letter(2));
}

TEST_CASE("canonical storage") {
  const auto a = perm({{3, 1}, {1, 2}, {2, 3}});
  const auto b = perm({{1, 2}, {2, 3}, {3, 1}});
  CHECK(a == b);
  CHECK(a.hash() == b.hash());
  const auto c = compose(z, transposition(z, std::int64_t{0}, std::int64_t{1}), transposition(z, std::int64_t{0}, std::int64_t{1}));
  CHECK(c.is_identity());
  CHECK(c == P{});
}

TEST_CASE("element json round trip") {
  CounterRng rng({10, 0});
  for (int i = 0; i < 500; ++i) {
    const E g = random_element(rng);
    const json j = element_to_json(z, g);
    CHECK(element_from_json(z, j) == g);
    CHECK(element_from_json(z, json::parse(j.dump())) == g);
  }
  const json j = element_to_json(z, E{cycle_perm(3), 4});
  CHECK(j.dump() == R"({"perm":[[0,1],[1,2],[2,0]],"pos":4})");
  const FreeGroup fg(2);
  const Element<FreeGroup> fe{delta(fg, fg.letter(-2)), fg.word({1, 2})};
  CHECK(element_from_json(fg, element_to_json(fg, fe)) == fe);
}

TEST_CASE("standard generators") {
  const auto s = standard_generators(z);
  CHECK(s.elements.size() == 4);
  for (const auto& g : s.elements) {
    CHECK(std::find(s.elements.begin(), s.elements.end(), inverse(z, g)) != s.elements.end());
  }
  CHECK(standard_generators(Lattice(2)).elements.size() == 8);
  CHECK(standard_generators(FreeGroup(2)).elements.size() == 8);
}

TEST_CASE("bfs small balls") {
  const auto s = standard_generators(z);
  const auto b0 = bfs_ball(z, s, 0);
  CHECK(b0.distance.size() == 1);
  CHECK(b0.distance.at(identity_element(z)) == 0);
  const auto b1 = bfs_ball(z, s, 1);
  CHECK(b1.distance.size() == 5);
  for (const auto& g : s.elements) CHECK(b1.distance.at(g) == 1);
  CHECK(ball_growth(z, s, 0) == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(bfs_ball(z, s, 6, 100), BfsBudgetExceeded);
}

TEST_CASE("radius-6 sandwich and support bound") {
  const auto ball = bfs_ball(z, standard_generators(z), 6);
  std::size_t violations = 0;
  for (const auto& [g, d] : ball.distance) {
    if (length_lower(z, g) > d) ++violations;
    if (length_upper(g).length < d) ++violations;
    if (g.perm.support_size() > 2 * static_cast<std::size_t>(d)) ++violations;
  }
  CHECK(ball.distance.size() == 415);
  CHECK(violations == 0);
}
