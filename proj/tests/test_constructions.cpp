#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lampshuffler/constructions.hpp"
#include "lampshuffler/measure.hpp"
#include "lampshuffler/walk.hpp"

using namespace lampshuffler;

namespace {

const IntLine z;

LatticePoint pt(std::int64_t a, std::int64_t b = 0) {
  LatticePoint p;
  p.c[0] = a;
  p.c[1] = b;
  return p;
}

}  // namespace

TEST_CASE("wreath embedding examples") {
  const Lattice l(1);
  CHECK(wreath_embed(wreath_identity(1, 2)) == identity_element(l));
  const auto w = wreath_generator(1, 2, TPerm{1, 0}, pt(0));
  const auto e = wreath_embed(w);
  CHECK(e.pos == pt(0));
  CHECK(e.perm == transposition(l, pt(0), pt(1)));
  CHECK(coset_of(pt(-1), 1, 2) == pt(-2));
  CHECK(coset_of(pt(-2), 1, 2) == pt(-2));
  CHECK(coset_of(pt(3, -5), 2, 2) == pt(2, -6));
  CHECK(wreath_mul(w, w) == wreath_identity(1, 2));
  CHECK_THROWS_AS(wreath_identity(3, 3), ConstructionError);
  CHECK_THROWS_AS(wreath_identity(1, 1), ConstructionError);
}

TEST_CASE("wreath embedding is a homomorphism") {
  for (int d = 1; d <= 2; ++d) {
    const Lattice l(d);
    CounterRng rng({70, static_cast<std::uint64_t>(d)});
    for (int i = 0; i < 10000; ++i) {
      const auto a = random_wreath(d, 2, 3, rng);
      const auto b = random_wreath(d, 2, 3, rng);
      REQUIRE(wreath_embed(wreath_mul(a, b)) == compose(l, wreath_embed(a), wreath_embed(b)));
      REQUIRE(wreath_embed(wreath_inverse(a)) == inverse(l, wreath_embed(a)));
      REQUIRE(wreath_mul(a, wreath_inverse(a)) == wreath_identity(d, 2));
    }
  }
  // m = 3 on Z
  const Lattice l(1);
  CounterRng rng({71, 0});
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_wreath(1, 3, 2, rng);
    const auto b = random_wreath(1, 3, 2, rng);
    REQUIRE(wreath_embed(wreath_mul(a, b)) == compose(l, wreath_embed(a), wreath_embed(b)));
  }
}

TEST_CASE("generating sets") {
  CHECK(sym_t(1, 2).size() == 2);
  CHECK(sym_t(1, 3).size() == 6);
  CHECK(sym_t(2, 2).size() == 24);
  CHECK(wreath_generators(1, 2).size() == 3 * 2 - 1);
  CHECK(ext_generators(1, 2).elements.size() == 5 * 2 - 1);
  // taken literally as {(σ, s)}, so S_wreath ⊆ S_ext
  const Lattice l(1);
  const auto ext = ext_generators(1, 2);
  for (const auto& w : wreath_generators(1, 2)) {
    CHECK(std::find(ext.elements.begin(), ext.elements.end(), wreath_embed(w)) != ext.elements.end());
  }
  CHECK(std::find(ext.elements.begin(), ext.elements.end(), identity_element(l)) == ext.elements.end());
}

TEST_CASE("qi constants") {
  const auto r0 = qi_constants(1, 2, 0);
  CHECK(r0.max_ratio == 1);
  CHECK(r0.qi_c == 5);
  CHECK(r0.ball_size == 1);
  const auto r4 = qi_constants(1, 2, 4);
  const auto r5 = qi_constants(1, 2, 5);
  CHECK(r4.max_ratio <= r5.max_ratio);
  CHECK(r5.bound_violations == 0);
  CHECK(r5.trivial_violations == 0);
  CHECK(r5.injective);
  CHECK(r5.cosets_preserved);
  CHECK(qi_constants(2, 2, 0).qi_c == 18);
}

TEST_CASE("K generators") {
  const auto gens = k_subgroup_gens(3);
  REQUIRE(gens.elements.size() == 12);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& g = gens.elements[i];
    CHECK(g.pos == 4);
    for (auto x : g.perm.support()) CHECK((x >= -3 && x <= 3));
  }
  for (const auto& g : gens.elements) {
    CHECK(compose(z, g, inverse(z, g)) == identity_element(z));
    CHECK(std::find(gens.elements.begin(), gens.elements.end(), inverse(z, g)) != gens.elements.end());
  }
  CHECK_THROWS_AS(k_subgroup_gens(2), ConstructionError);
}

TEST_CASE("K inverse closed form") {
  for (int m = 3; m <= 5; ++m) {
    for (const auto& f : sigma_set(m)) {
      const auto inv = inverse(z, Element<IntLine>{f, m + 1});
      CHECK(inv.pos == -(m + 1));
      CHECK(inv.perm == k_inverse_perm(f, m));
      for (std::int64_t x = -m - 1; x <= -1; ++x) CHECK(inv.perm(x) == x - m);
    }
  }
}

TEST_CASE("ball growth") {
  CHECK(ball_growth(z, k_subgroup_gens(3), 0) == std::vector<std::size_t>{1});
  const auto gate = k_growth_gate(3, 3, 8);
  CHECK(gate.pass);
  CHECK(gate.bound == 12);
  CHECK(gate.increments.size() == 6);
  const auto sizes = ball_growth(z, standard_generators(z), 6);
  CHECK(sizes == std::vector<std::size_t>{1, 5, 15, 38, 88, 194, 415});
  CHECK(min_growth_ratio(sizes, 2, 5) >= 1.5);
  CHECK_THROWS_AS(min_growth_ratio(sizes, 2, 6), ConstructionError);
}

TEST_CASE("K walk positions are multiples of M+1") {
  const auto m = sigma_measure(3, Rational(3, 4));
  WalkOptions opt;
  opt.steps = 2000;
  opt.path_prefix = 2001;
  const auto rep = run_walk(m, SiteWindow<IntLine>::interval(0, 10), opt, trajectory_rng(72, 0));
  for (auto p : rep.path) REQUIRE(p % 4 == 0);
}
