#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "lampshuffler/analysis.hpp"

using namespace lampshuffler;

namespace {

const IntLine z;

// Compositions of `balls` into `boxes` parts with every part in [0, balls].
std::uint64_t brute_compositions(std::uint64_t balls, std::uint64_t boxes, bool at_most) {
  std::uint64_t count = 0;
  std::function<void(std::uint64_t, std::uint64_t)> rec = [&](std::uint64_t box, std::uint64_t used) {
    if (box == boxes) {
      count += at_most ? used <= balls : used == balls;
      return;
    }
    for (std::uint64_t d = 0; used + d <= balls; ++d) rec(box + 1, used + d);
  };
  rec(0, 0);
  return count;
}

// Entropy of the n-fold product of the uniform measure on `gens`, by listing every word.
double brute_entropy(const GeneratingSet<IntLine>& gens, int n) {
  std::unordered_map<Element<IntLine>, std::uint64_t, Element<IntLine>::Hash> counts;
  std::uint64_t words = 1;
  for (int i = 0; i < n; ++i) words *= gens.elements.size();
  for (std::uint64_t w = 0; w < words; ++w) {
    auto acc = identity_element(z);
    std::uint64_t rest = w;
    for (int i = 0; i < n; ++i) {
      acc = compose(z, acc, gens.elements[rest % gens.elements.size()]);
      rest /= gens.elements.size();
    }
    ++counts[acc];
  }
  double h = 0;
  for (const auto& [e, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(words);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

TEST_CASE("stars and bars") {
  CHECK(stars_and_bars(2, 3) == 6);
  CHECK(stars_and_bars(0, 0) == 1);
  CHECK(stars_and_bars(3, 0) == 0);
  for (std::uint64_t boxes = 1; boxes <= 4; ++boxes) {
    for (std::uint64_t balls = 0; balls <= 6; ++balls) {
      CHECK(stars_and_bars(balls, boxes) == brute_compositions(balls, boxes, false));
      // exactly `balls` in boxes + 1 boxes equals at most `balls` in `boxes` boxes
      CHECK(stars_and_bars(balls, boxes + 1) == brute_compositions(balls, boxes, true));
    }
  }
}

TEST_CASE("qn_size_bound") {
  const auto zero = qn_size_bound({0.1, 0.25, 2.0, 5});
  CHECK(zero.e == 0);
  CHECK(zero.boxes == 1);
  CHECK(zero.value == 2);

  // e = 1: boxes = 5, balls = 2, 5 · 2^5 · (ways to drop 2 balls in 5 boxes)
  const auto one = qn_size_bound({0.1, 0.25, 2.0, 10});
  CHECK(one.e == 1);
  CHECK(one.balls == 2);
  CHECK(one.value == mpz_class(5 * 32 * brute_compositions(2, 5, false)));
  const auto two = qn_size_bound({0.1, 0.25, 1.5, 20});
  CHECK(two.balls == 3);
  CHECK(two.value == mpz_class(9) * 512 * brute_compositions(3, 9, false));

  const double lim = qn_log_limit(0.1, 2.0);
  CHECK(lim == doctest::Approx(0.4 * std::log(2.0) + 0.4 * std::log(1.5) + 0.2 * std::log(3.0)));
  const auto small = qn_size_bound({0.1, 0.25, 2.0, 1000});
  const auto large = qn_size_bound({0.1, 0.25, 2.0, 1000000});
  CHECK(small.log_over_n > large.log_over_n);
  CHECK(std::abs(small.log_over_n - large.log_over_n) / large.log_over_n < 0.05);
  CHECK(std::abs(large.log_over_n - lim) / lim < 0.05);
  CHECK(log_mpz(mpz_class(1000)) == doctest::Approx(std::log(1000.0)));
}

TEST_CASE("exact entropy") {
  const auto rows = exact_entropy(simple_std(z), 4);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const auto gens = standard_generators(z);
  for (int n = 1; n <= 4; ++n) {
    CHECK(rows[static_cast<std::size_t>(n - 1)].entropy == doctest::Approx(brute_entropy(gens, n)).epsilon(1e-12));
  }
  CHECK(subadditivity_violations(rows).empty());

  const auto d = exact_entropy(delta_measure(z, Element<IntLine>{cycle_perm(3), 2}), 5);
  for (const auto& r : d) CHECK(r.entropy == 0);

  CHECK(exact_entropy(drifted_std(), 2)[1].entropy <= 2 * exact_entropy(drifted_std(), 1)[0].entropy);
  const auto s = exact_entropy(sigma_measure(3, Rational(3, 4)), 2);
  CHECK(s[1].entropy <= 2 * s[0].entropy);
  const auto f = exact_entropy(free_delta(2), 3);
  CHECK(subadditivity_violations(f).empty());
  const auto l = exact_entropy(simple_std(Lattice(2)), 3);
  CHECK(subadditivity_violations(l).empty());

  CHECK_THROWS_AS(exact_entropy(simple_std(z), 12, 1000), EntropyBudgetExceeded);
  CHECK_THROWS(exact_entropy(counterexample_measure(), 2));
}

TEST_CASE("subadditivity detector") {
  std::vector<EntropyRow> rows(3);
  rows[0].n = 1;
  rows[0].entropy = 1.0;
  rows[1].n = 2;
  rows[1].entropy = 2.5;
  rows[2].n = 3;
  rows[2].entropy = 3.0;
  const auto bad = subadditivity_violations(rows);
  REQUIRE(!bad.empty());
  CHECK(bad.front() == std::pair<std::uint64_t, std::uint64_t>{1, 1});
}

TEST_CASE("plug-in entropy") {
  const auto d = plugin_entropy(delta_measure(z, translation(z, std::int64_t{1})), 10, 1000, 1);
  CHECK(d.entropy == 0);
  CHECK(d.method == EntropyMethod::Plugin);
  CHECK_THROWS(plugin_entropy(simple_std(z), 4, 999, 1));

  const auto exact = exact_entropy(simple_std(z), 4);
  for (std::uint64_t n = 1; n <= 4; ++n) {
    const auto p = plugin_entropy(simple_std(z), n, 1'000'000, 3);
    CHECK(std::abs(p.entropy - exact[n - 1].entropy) < 0.05);
    REQUIRE(p.bias_note.has_value());
    CHECK(*p.bias_note == doctest::Approx(static_cast<double>(p.support - 1) / 2e6));
  }
}

TEST_CASE("wilson interval") {
  const auto a = wilson(0, 10);
  CHECK(a.lo == doctest::Approx(0.0));
  CHECK(a.hi == doctest::Approx(0.2775).epsilon(1e-3));
  const auto b = wilson(5, 10);
  CHECK(b.lo + b.hi == doctest::Approx(1.0));
  CHECK(b.lo == doctest::Approx(0.2366).epsilon(1e-3));
  const auto c = wilson(10, 10);
  CHECK(c.hi == doctest::Approx(1.0));
}

TEST_CASE("log-log fit") {
  std::vector<FitPoint> pts;
  for (std::uint64_t n = 2; n <= 4096; n *= 2) pts.push_back({n, 3.0 * std::pow(static_cast<double>(n), 0.75)});
  const auto fit = loglog_fit(pts);
  CHECK(fit.slope == doctest::Approx(0.75));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)));
  CHECK(fit.stderr_slope == doctest::Approx(0.0));
}

TEST_CASE("drift exponent") {
  WalkOptions opt;
  opt.steps = 4096;
  std::vector<TrajectoryReport<IntLine>> reps;
  for (std::uint64_t i = 0; i < 60; ++i) reps.push_back(run_walk(drifted_translation(), SiteWindow<IntLine>{}, opt, trajectory_rng(50, i)));
  const auto fit = drift_exponent(reps, DriftProxy::Lower, 256, 4096);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.02));
  CHECK_THROWS_AS(drift_exponent(reps, DriftProxy::Upper, 256, 4096), AnalysisError);
  CHECK_THROWS_AS(drift_exponent(reps, DriftProxy::Lower, 2048, 4096), AnalysisError);
  reps.resize(49);
  CHECK_THROWS_AS(drift_exponent(reps, DriftProxy::Lower, 256, 4096), AnalysisError);
}

TEST_CASE("Borel-Cantelli sums") {
  WalkOptions opt;
  opt.steps = 10000;
  std::vector<TrajectoryReport<IntLine>> trans, drift;
  for (std::uint64_t i = 0; i < 20; ++i) {
    trans.push_back(run_walk(drifted_translation(), SiteWindow<IntLine>::interval(0, 0), opt, trajectory_rng(51, i)));
    drift.push_back(run_walk(drifted_std(), SiteWindow<IntLine>::interval(0, 0), opt, trajectory_rng(52, i)));
  }
  const std::vector<std::uint64_t> ns{100, 1000, 10000};
  for (const auto& p : borel_cantelli_sum(trans, std::int64_t{0}, ns)) {
    CHECK(p.partial_sum == 0);
    CHECK(p.window_freq == 0);
  }
  const auto s = borel_cantelli_sum(drift, std::int64_t{0}, ns);
  CHECK(s[0].partial_sum <= s[1].partial_sum);
  CHECK(s[1].partial_sum <= s[2].partial_sum);
  CHECK(s[2].band_lo <= s[2].partial_sum);
  CHECK(s[2].band_hi >= s[2].partial_sum);
  CHECK_THROWS_AS(borel_cantelli_sum(drift, std::int64_t{3}, ns), AnalysisError);

  WalkOptions capped = opt;
  capped.change_log_cap = 1;
  std::vector<TrajectoryReport<IntLine>> c;
  c.push_back(run_walk(simple_std(z), SiteWindow<IntLine>::interval(0, 0), capped, trajectory_rng(53, 0)));
  CHECK_THROWS_AS(borel_cantelli_sum(c, std::int64_t{0}, ns), AnalysisError);
}

TEST_CASE("Kolmogorov bound and A_n") {
  CHECK(kolmogorov_bound(100, 0.5, 20) == doctest::Approx(4 * kolmogorov_bound(100, 0.5, 40)));
  CHECK(kolmogorov_bound(1000, 0.5, 7) / kolmogorov_bound(1000, 0.5, 14) == 4.0);
  CHECK(log_an_size(1000000, 1) < log_an_size(10000, 1));
  CHECK(log_an_size(10000, 3) > log_an_size(10000, 1));

  const auto r = maximal_inequality_check(simple_std(z), 100, 2000, 54);
  CHECK(r.sigma2 == doctest::Approx(0.5));
  CHECK(r.bound == doctest::Approx(1 - 0.5 / 10));
  CHECK(r.lambda == doctest::Approx(std::pow(100.0, 0.75)));
  CHECK(r.pass);
  CHECK_THROWS_AS(maximal_inequality_check(drifted_std(), 100, 10, 1), AnalysisError);
}

TEST_CASE("range asymptotics") {
  const Lattice l(2);
  const auto pts = range_asymptotics(simple_std(l), {1, 100, 1000}, 50, 55);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].statistic == 0);
  CHECK(pts[1].statistic > 0);
  CHECK(pts[1].mean_range <= 101);

  LatticePoint e1;
  e1.c[0] = 1;
  LatticePoint e2;
  e2.c[1] = 1;
  const auto drifted = uniform_measure(l, {translation(l, e1), translation(l, e2)}, "drifted");
  CHECK_THROWS_AS(range_asymptotics(drifted, {10}, 5, 1), AnalysisError);
  CHECK_THROWS_AS(range_asymptotics(simple_std(Lattice(3)), {10}, 5, 1), AnalysisError);

  // the projected simulator agrees with the full walk
  const std::vector<std::uint64_t> ns{10, 500};
  const auto proj = simulate_projection(simple_std(l), 500, ns, trajectory_rng(56, 0));
  WalkOptions opt;
  opt.steps = 500;
  opt.extra_snapshots = ns;
  const auto full = run_walk(simple_std(l), SiteWindow<Lattice>{}, opt, trajectory_rng(56, 0));
  CHECK(proj.range_at[0] == full.at(10)->range);
  CHECK(proj.range_at[1] == full.at(500)->range);
}

TEST_CASE("limit comparison") {
  WalkOptions opt;
  opt.steps = 100000;
  const auto window = SiteWindow<IntLine>::interval(-5, 5);
  const auto a = run_walk(drifted_std(), window, opt, trajectory_rng(57, 0));
  const auto a2 = run_walk(drifted_std(), window, opt, trajectory_rng(57, 0));
  const auto cmp = limit_compare(z, a, a2, std::span<const std::int64_t>(window.sites));
  CHECK(cmp.disagree == 0);
  CHECK(cmp.agree == 11);

  // drifted_std limits differ between independent runs
  std::size_t differ = 0;
  for (std::uint64_t i = 1; i <= 20; ++i) {
    const auto b = run_walk(drifted_std(), window, opt, trajectory_rng(57, i));
    const auto c = run_walk(drifted_std(), window, opt, trajectory_rng(58, i));
    differ += limit_compare(z, b, c, std::span<const std::int64_t>(window.sites)).disagree > 0;
  }
  CHECK(differ >= 18);

  WalkOptions short_run;
  short_run.steps = 4;
  const auto u = run_walk(simple_std(z), window, short_run, trajectory_rng(59, 3));
  bool threw = false;
  try {
    limit_compare(z, u, u, std::span<const std::int64_t>(window.sites));
  } catch (const UnstableWindow& e) {
    threw = true;
    CHECK(!e.sites.empty());
  }
  bool moved = false;
  for (const auto& r : u.stabilization) moved = moved || r.changes > 0;
  CHECK(threw == moved);
  const std::vector<std::int64_t> outside{100};
  CHECK_THROWS_AS(limit_compare(z, a, a2, std::span<const std::int64_t>(outside)), AnalysisError);
}

TEST_CASE("free ray check") {
  WalkOptions opt;
  opt.steps = 20000;
  opt.path_prefix = 10;
  SiteWindow<FreeGroup> w;
  w.radius = 9;
  std::size_t ok = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto rep = run_walk(free_delta(2), w, opt, trajectory_rng(60, i));
    const auto rc = free_ray_check(rep, 5);
    ok += rc.ray_ok && rc.identity_unreached;
  }
  CHECK(ok >= 9);
  const auto rep = run_walk(free_delta(2), w, opt, trajectory_rng(60, 0));
  CHECK_THROWS_AS(free_ray_check(rep, 20), AnalysisError);
}
