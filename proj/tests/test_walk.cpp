#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "lampshuffler/parallel.hpp"
#include "lampshuffler/walk.hpp"

using namespace lampshuffler;

namespace {

const IntLine z;
using P = FinPerm<IntLine>;

P random_perm(CounterRng& rng, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> pts;
  for (std::int64_t x = lo; x <= hi; ++x) {
    if (rng.below(3) == 0) pts.push_back(x);
  }
  auto img = pts;
  for (std::size_t i = img.size(); i > 1; --i) std::swap(img[i - 1], img[rng.below(i)]);
  std::vector<P::Entry> pairs;
  for (std::size_t i = 0; i < pts.size(); ++i) pairs.emplace_back(pts[i], img[i]);
  return P::from_pairs(std::move(pairs));
}

// Replays the walk with full Elements and the same random stream.
template <class G>
std::vector<Element<G>> reference_path(const MeasureSpec<G>& m, std::uint64_t steps, CounterRng rng) {
  Sampler<G> s(m);
  std::vector<Element<G>> path{identity_element(m.group)};
  for (std::uint64_t n = 1; n <= steps; ++n) path.push_back(compose(m.group, path.back(), sample(s, rng)));
  return path;
}

}  // namespace

TEST_CASE("IntervalPerm agrees with FinPerm") {
  CounterRng rng({31, 0});
  for (int trial = 0; trial < 200; ++trial) {
    IntervalPerm ip;
    P ref;
    for (int k = 0; k < 40; ++k) {
      P tau;
      if (rng.below(4) == 0) {
        tau = act(z, static_cast<std::int64_t>(rng.below(41)) - 20, cycle_perm(static_cast<std::int64_t>(2 + rng.below(30))));
      } else {
        tau = random_perm(rng, -25, 25);
      }
      const auto runs = runs_of(tau);
      ip.right_compose(runs);
      ref = compose(z, ref, tau);
      REQUIRE(ip.to_finperm() == ref);
      REQUIRE(ip.displacement() == displacement(z, ref));
      REQUIRE(ip.support_size() == ref.support_size());
      REQUIRE(ip.is_identity() == ref.is_identity());
    }
    for (std::int64_t x = -60; x <= 60; ++x) CHECK(ip.at(x) == ref(x));
    CHECK(IntervalPerm::from_finperm(ref).to_finperm() == ref);
    if (!ref.is_identity()) {
      CHECK(ip.support_min() == ref.support().front());
      CHECK(ip.support_max() == ref.support().back());
    }
    // runs_below keeps exactly the points below the bound
    for (const auto& r : ip.runs_below(0)) CHECK(r.hi < 0);
  }
}

TEST_CASE("IntervalPerm stores long cycles compactly") {
  IntervalPerm ip;
  const std::int64_t n = 1'000'000'000;
  const std::vector<IntervalPerm::Run> tau{{0, n - 2, 1}, {n - 1, n - 1, -(n - 1)}};
  ip.right_compose(tau);
  CHECK(ip.runs().size() == 2);
  CHECK(ip.displacement() == static_cast<std::uint64_t>(2 * (n - 1)));
  CHECK(ip.support_size() == static_cast<std::uint64_t>(n));
  CHECK(ip.at(n - 1) == 0);
  CHECK(ip.at(5) == 6);
  CHECK(runs_of(cycle_perm(50)).size() == 2);
}

TEST_CASE("HashPerm agrees with FinPerm") {
  const FreeGroup g(2);
  CounterRng rng({32, 0});
  HashPerm<FreeGroup> hp(g);
  FinPerm<FreeGroup> ref;
  const auto m = free_delta(2);
  Sampler<FreeGroup> s(m);
  auto pos = g.identity();
  for (int k = 0; k < 3000; ++k) {
    const auto inc = sample(s, rng);
    const auto moved = act(g, pos, inc.perm);
    std::vector<std::pair<FreeWord, FreeWord>> pairs(moved.entries().begin(), moved.entries().end());
    hp.right_compose(pairs);
    ref = compose(g, ref, moved);
    pos = g.mul(pos, inc.pos);
  }
  CHECK(hp.to_finperm() == ref);
  CHECK(hp.displacement() == displacement(g, ref));
  CHECK(hp.support_size() == ref.support_size());
  for (const auto& [x, fx] : ref.entries()) CHECK(hp.at(x) == fx);
}

TEST_CASE("step examples") {
  WalkState<IntLine> s{identity_element(z), 0, CounterRng({1, 0})};
  const Element<IntLine> inc{delta(z, std::int64_t{1}), 1};
  s = step(z, step(z, s, inc), inc);
  CHECK(s.step == 2);
  CHECK(s.element.pos == 2);
  CHECK(s.element.perm == P::from_pairs({{0, 1}, {1, 2}, {2, 0}}));

  const auto before = s.element.perm;
  s = step(z, s, translation(z, std::int64_t{5}));
  CHECK(s.element.perm == before);
  CHECK(s.element.pos == 7);
}

TEST_CASE("change set is contained in S_n supp(sigma)") {
  // every step, checked exactly against the reference walk
  const auto m = simple_std(z);
  Sampler<IntLine> s(m);
  CounterRng rng({33, 0});
  WalkState<IntLine> state{identity_element(z), 0, rng};
  std::size_t violations = 0;
  for (int n = 0; n < 5000; ++n) {
    const auto inc = sample(s, state.rng);
    const auto next = step(z, state, inc);
    std::vector<std::int64_t> allowed;
    for (auto x : inc.perm.support()) allowed.push_back(state.element.pos + x);
    for (std::int64_t h = state.element.pos - 5; h <= state.element.pos + 5; ++h) {
      if (next.element.perm(h) != state.element.perm(h) && std::find(allowed.begin(), allowed.end(), h) == allowed.end()) {
        ++violations;
      }
    }
    state = next;
  }
  CHECK(violations == 0);
}

TEST_CASE("engine matches the reference walk on Z") {
  for (const auto& m : {simple_std(z), drifted_std(), sigma_measure(3, Rational(3, 4))}) {
    WalkOptions opt;
    opt.steps = 3000;
    opt.keep_perm = true;
    opt.path_prefix = 3001;
    const auto window = SiteWindow<IntLine>::interval(-10, 10);
    const CounterRng rng({34, 7});
    const auto rep = run_walk(m, window, opt, rng);
    const auto path = reference_path(m, opt.steps, rng);
    REQUIRE(rep.final_perm.has_value());
    CHECK(*rep.final_perm == path.back().perm);
    CHECK(rep.final_pos == path.back().pos);
    CHECK(rep.final_disp == displacement(z, path.back().perm));
    for (std::size_t n = 0; n < rep.path.size(); ++n) REQUIRE(rep.path[n] == path[n].pos);
    for (const auto& p : rep.series) {
      REQUIRE(p.perm.has_value());
      CHECK(*p.perm == path[p.n].perm);
      CHECK(p.lower == length_lower(z, path[p.n]));
    }
    // stabilization records against the replay
    for (const auto& r : rep.stabilization) {
      std::uint64_t last = 0, changes = 0;
      for (std::size_t n = 1; n < path.size(); ++n) {
        if (path[n].perm(r.site) != path[n - 1].perm(r.site)) {
          last = n;
          ++changes;
        }
      }
      CHECK(r.value == path.back().perm(r.site));
      CHECK(r.last_change == last);
      CHECK(r.changes == changes);
      CHECK(r.change_steps.size() == changes);
    }
    CHECK(rep.stabilization.size() == 21);
  }
}

TEST_CASE("engine matches the reference walk on Z^2 and F_2") {
  const Lattice l(2);
  WalkOptions opt;
  opt.steps = 2000;
  SiteWindow<Lattice> wl;
  wl.radius = 3;
  const CounterRng rng({35, 0});
  const auto ml = simple_std(l);
  const auto rl = run_walk(ml, wl, opt, rng);
  const auto pl = reference_path(ml, opt.steps, rng);
  CHECK(*rl.final_perm == pl.back().perm);
  for (const auto& r : rl.stabilization) CHECK(r.value == pl.back().perm(r.site));

  const FreeGroup f(2);
  const auto mf = free_delta(2);
  SiteWindow<FreeGroup> wf;
  wf.radius = 4;
  const auto rf = run_walk(mf, wf, opt, rng);
  const auto pf = reference_path(mf, opt.steps, rng);
  CHECK(*rf.final_perm == pf.back().perm);
  CHECK(rf.final_pos == pf.back().pos);
  for (const auto& r : rf.stabilization) CHECK(r.value == pf.back().perm(r.site));
}

TEST_CASE("steps = 0") {
  WalkOptions opt;
  const auto rep = run_walk(drifted_std(), SiteWindow<IntLine>::interval(-2, 2), opt, CounterRng({1, 1}));
  CHECK(rep.final_pos == 0);
  CHECK(rep.final_perm->is_identity());
  CHECK(rep.stabilization.size() == 5);
  for (const auto& r : rep.stabilization) {
    CHECK(r.value == r.site);
    CHECK(r.last_change == 0);
    CHECK(r.changes == 0);
  }
  REQUIRE(rep.series.size() == 1);
  CHECK(rep.series[0].n == 0);
  CHECK(rep.series[0].range == 1);
}

TEST_CASE("series invariants") {
  for (const auto& m : {simple_std(z), drifted_std(), counterexample_measure()}) {
    WalkOptions opt;
    opt.steps = 200000;
    const auto rep = run_walk(m, SiteWindow<IntLine>::interval(0, 0), opt, CounterRng({36, 0}));
    std::uint64_t prev_n = 0, prev_range = 0;
    bool first = true;
    for (const auto& p : rep.series) {
      if (!first) CHECK(p.n > prev_n);
      CHECK(p.range >= prev_range);
      CHECK(p.range <= p.n + 1);
      CHECK(p.disp <= p.increment_disp);
      CHECK(p.support <= p.disp);
      prev_n = p.n;
      prev_range = p.range;
      first = false;
    }
    CHECK(rep.min_pos <= 0);
    CHECK(rep.max_pos >= 0);
  }
}

TEST_CASE("upper proxy on snapshots") {
  WalkOptions opt;
  opt.steps = 5000;
  opt.upper_proxy = true;
  opt.keep_perm = true;
  const auto rep = run_walk(simple_std(z), SiteWindow<IntLine>{}, opt, CounterRng({37, 0}));
  for (const auto& p : rep.series) {
    REQUIRE(p.upper.has_value());
    CHECK(*p.upper == length_upper(Element<IntLine>{*p.perm, p.pos}).length);
    CHECK(*p.upper >= p.lower);
  }
}

TEST_CASE("geometric grid") {
  const auto g = geometric_grid(100, 1.3, std::vector<std::uint64_t>{50});
  CHECK(g.front() == 0);
  CHECK(g.back() == 100);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
  CHECK(std::find(g.begin(), g.end(), 50) != g.end());
  CHECK(dyadic_bucket(1) == 0);
  CHECK(dyadic_bucket(1024) == 10);
  CHECK(dyadic_bucket(2047) == 10);
}

TEST_CASE("deterministic across thread counts") {
  const auto m = counterexample_measure();
  WalkOptions opt;
  opt.steps = 20000;
  const auto window = SiteWindow<IntLine>::interval(-3, 3);
  const WalkEngine<IntLine> engine(m, window, opt);
  auto run = [&](unsigned threads) {
    return parallel_map<TrajectoryReport<IntLine>>(24, threads, [&](std::size_t i) { return engine.run(trajectory_rng(9, i)); });
  };
  const auto a = run(1), b = run(4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].final_runs == b[i].final_runs);
    CHECK(a[i].final_pos == b[i].final_pos);
    CHECK(a[i].key == b[i].key);
    for (std::size_t k = 0; k < a[i].stabilization.size(); ++k) {
      CHECK(a[i].stabilization[k].value == b[i].stabilization[k].value);
      CHECK(a[i].stabilization[k].change_steps == b[i].stabilization[k].change_steps);
    }
  }
  CHECK(resolve_threads(3) == 3);
}

TEST_CASE("confinement: pure translation") {
  const std::uint64_t n = 10000;
  WalkOptions opt;
  opt.steps = 2 * n;
  opt.checkpoints = {n};
  const auto rep = run_walk(drifted_translation(), SiteWindow<IntLine>{}, opt, CounterRng({38, 0}));
  const auto c = check_confinement(rep, 0.1, 0.5, 1.0, 1.0, n);
  CHECK(c.tail_identity);
  CHECK(c.head_stable);
  CHECK(c.window_disp_ok);
  CHECK(c.window_disp == 0);
  CHECK(c.pos_in_band);
  CHECK(c.in_qn == (c.pos_in_band && c.tail_identity && c.head_stable && c.window_disp_ok));
}

TEST_CASE("confinement: preconditions") {
  WalkOptions opt;
  opt.steps = 2000;
  opt.checkpoints = {1000};
  const auto rep = run_walk(drifted_std(), SiteWindow<IntLine>{}, opt, CounterRng({39, 0}));
  CHECK_THROWS(check_confinement(rep, 0.0, 0.25, 2.0, 2.0, 1000));
  CHECK_THROWS(check_confinement(rep, 0.1, 0.0, 2.0, 2.0, 1000));
  CHECK_THROWS(check_confinement(rep, 0.1, 0.25, 2.0, 2.0, 999));
  const auto c = check_confinement(rep, 0.1, 0.25, 2.0, 2.0, 1000);
  CHECK(c.in_qn == (c.pos_in_band && c.tail_identity && c.head_stable && c.window_disp_ok));

  WalkOptions bad;
  bad.checkpoints = {10};
  CHECK_THROWS_AS(WalkEngine<FreeGroup>(free_delta(2), SiteWindow<FreeGroup>{}, bad), WalkError);
}

TEST_CASE("drifted walks stabilize on a small window") {
  WalkOptions opt;
  opt.steps = 200000;
  std::size_t stable = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto rep = run_walk(drifted_std(), SiteWindow<IntLine>::interval(-5, 5), opt, trajectory_rng(40, i));
    bool ok = true;
    for (const auto& r : rep.stabilization) ok = ok && r.last_change < 20000;
    stable += ok;
  }
  CHECK(stable >= 9);
}
