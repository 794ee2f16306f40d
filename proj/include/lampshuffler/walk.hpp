#pragma once

// Trajectory simulation of (F_n, S_n) = (σ_1, X_1) ⋯ (σ_n, X_n).
//
// F_{n+1} = F_n ∘ (S_n·σ_{n+1}) and S_{n+1} = S_n X_{n+1}; only sites in
// S_n·supp(σ_{n+1}) can change at step n+1. Monitors are fed that change set
// and never rescan their windows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lampshuffler/element.hpp"
#include "lampshuffler/measure.hpp"
#include "lampshuffler/perm_store.hpp"
#include "lampshuffler/rng.hpp"

namespace lampshuffler {

class WalkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Reference single step on full Elements.

template <class G>
struct WalkState {
  Element<G> element;
  std::uint64_t step = 0;
  CounterRng rng;
};

template <class G>
WalkState<G> step(const G& g, const WalkState<G>& state, const Element<G>& increment) {
  return {compose(g, state.element, increment), state.step + 1, state.rng};
}

// ---------------------------------------------------------------------------
// Configuration and report

template <class G>
struct SiteWindow {
  std::vector<typename G::Point> sites;          // registered up front
  std::optional<std::uint64_t> radius;           // plus every site with ‖h‖ <= radius, on first touch

  static SiteWindow interval(std::int64_t lo, std::int64_t hi) requires std::is_same_v<G, IntLine> {
    SiteWindow w;
    for (std::int64_t x = lo; x <= hi; ++x) w.sites.push_back(x);
    return w;
  }
  bool empty() const { return sites.empty() && !radius; }
};

struct WalkOptions {
  std::uint64_t steps = 0;
  double snapshot_ratio = 1.3;                   // geometric cadence n = ⌈ratio^k⌉
  std::vector<std::uint64_t> extra_snapshots;    // always sampled
  std::size_t change_log_cap = 4096;             // per-site change steps kept
  bool upper_proxy = false;                      // sweep-word length at snapshots (Z)
  bool keep_perm = false;                        // attach F_n to snapshots when small
  std::size_t perm_cap = 10'000;
  std::vector<std::uint64_t> checkpoints;        // Z: keep F_n runs for confinement checks
  bool track_range = true;
  bool keep_final_perm = true;                   // when |supp| <= final_perm_cap
  std::size_t final_perm_cap = 5'000'000;
  std::size_t path_prefix = 0;                   // keep S_0, ..., S_{path_prefix-1}
};

template <class G>
struct StabilizationRecord {
  typename G::Point site;
  typename G::Point value;  // F_step(site)
  std::uint64_t last_change = 0;
  std::uint64_t changes = 0;
  std::vector<std::uint64_t> change_steps;  // first change_log_cap changes
  std::array<std::uint32_t, 64> dyadic{};   // changes in [2^k, 2^{k+1})
};

template <class G>
struct SeriesPoint {
  std::uint64_t n = 0;
  typename G::Point pos{};
  std::uint64_t disp = 0;        // Disp(F_n)
  std::uint64_t support = 0;     // |supp F_n|
  std::uint64_t range = 0;       // distinct positions among S_0..S_n
  std::uint64_t increment_disp = 0;  // Σ_{k<=n} Disp(σ_k)
  std::uint64_t lower = 0;       // length_lower(F_n, S_n)
  std::optional<std::uint64_t> upper;
  std::optional<FinPerm<G>> perm;
};

struct Checkpoint {
  std::uint64_t n = 0;
  std::int64_t pos = 0;
  std::vector<IntervalPerm::Run> runs;
};

template <class G>
struct TrajectoryReport {
  PhiloxKey key{};
  std::uint64_t steps = 0;
  typename G::Point final_pos{};
  std::optional<FinPerm<G>> final_perm;
  std::uint64_t final_disp = 0;
  std::uint64_t final_support = 0;
  std::vector<StabilizationRecord<G>> stabilization;  // sorted by site
  std::vector<SeriesPoint<G>> series;
  std::vector<typename G::Point> path;                // S_0, S_1, ... up to path_prefix
  std::int64_t min_pos = 0, max_pos = 0;              // Z: excursions of S
  // Z only
  std::vector<IntervalPerm::Run> final_runs;
  std::vector<Checkpoint> checkpoints;
  std::vector<std::uint64_t> increment_disp_prefix;   // [k] = Σ_{j<=k} Disp(σ_j), with checkpoints

  const SeriesPoint<G>* at(std::uint64_t n) const {
    auto it = std::lower_bound(series.begin(), series.end(), n, [](const auto& p, std::uint64_t v) { return p.n < v; });
    return it != series.end() && it->n == n ? &*it : nullptr;
  }
  const StabilizationRecord<G>* record(const typename G::Point& site) const {
    for (const auto& r : stabilization) {
      if (r.site == site) return &r;
    }
    return nullptr;
  }
};

std::vector<std::uint64_t> geometric_grid(std::uint64_t steps, double ratio, std::span<const std::uint64_t> extra);

inline int dyadic_bucket(std::uint64_t n) { return 63 - __builtin_clzll(n); }

// ---------------------------------------------------------------------------
// Engine

template <class G>
class WalkEngine {
 public:
  using Point = typename G::Point;
  using Store = std::conditional_t<std::is_same_v<G, IntLine>, IntervalPerm, HashPerm<G>>;

  WalkEngine(const WalkEngine&) = delete;
  WalkEngine& operator=(const WalkEngine&) = delete;

  WalkEngine(const MeasureSpec<G>& measure, SiteWindow<G> window, WalkOptions options)
      : measure_(measure), sampler_(measure_), window_(std::move(window)), options_(std::move(options)) {
    const G& g = measure_.group;
    for (const auto& a : measure_.atoms) {
      if constexpr (std::is_same_v<G, IntLine>) {
        atom_runs_.push_back(runs_of(a.element.perm));
      } else {
        atom_pairs_.emplace_back(a.element.perm.entries().begin(), a.element.perm.entries().end());
      }
      atom_disp_.push_back(displacement(g, a.element.perm));
    }
    grid_ = geometric_grid(options_.steps, options_.snapshot_ratio, options_.extra_snapshots);
    if (!options_.checkpoints.empty() && !std::is_same_v<G, IntLine>) {
      throw WalkError("confinement checkpoints require H = Z");
    }
  }

  TrajectoryReport<G> run(CounterRng rng) const;

 private:
  struct Monitor;

  MeasureSpec<G> measure_;
  Sampler<G> sampler_;
  SiteWindow<G> window_;
  WalkOptions options_;
  std::vector<std::vector<IntervalPerm::Run>> atom_runs_;
  std::vector<std::vector<std::pair<Point, Point>>> atom_pairs_;
  std::vector<std::uint64_t> atom_disp_;
  std::vector<std::uint64_t> grid_;
};

template <class G>
struct WalkEngine<G>::Monitor {
  const G& g;
  const SiteWindow<G>& window;
  std::size_t log_cap;
  std::unordered_map<Point, StabilizationRecord<G>, typename G::Hash> records;
  std::unordered_set<Point, typename G::Hash> registered;

  Monitor(const G& group, const SiteWindow<G>& w, std::size_t cap) : g(group), window(w), log_cap(cap) {
    for (const auto& s : w.sites) {
      StabilizationRecord<G> r;
      r.site = s;
      r.value = s;
      records.emplace(s, r);
    }
  }

  bool in_window(const Point& x) const {
    if (records.count(x)) return true;
    return window.radius && g.norm(x) <= *window.radius;
  }

  void touch(const Point& x, const Point& value, std::uint64_t n) {
    auto it = records.find(x);
    if (it == records.end()) {
      if (!(window.radius && g.norm(x) <= *window.radius)) return;
      StabilizationRecord<G> r;
      r.site = x;
      r.value = x;
      it = records.emplace(x, r).first;
    }
    auto& r = it->second;
    if (r.value == value) return;
    r.value = value;
    r.last_change = n;
    ++r.changes;
    ++r.dyadic[static_cast<std::size_t>(dyadic_bucket(n))];
    if (r.change_steps.size() < log_cap) r.change_steps.push_back(n);
  }

  std::vector<StabilizationRecord<G>> sorted() const {
    std::vector<StabilizationRecord<G>> out;
    out.reserve(records.size());
    for (const auto& [k, v] : records) out.push_back(v);
    typename G::Less less;
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return less(a.site, b.site); });
    return out;
  }
};

namespace detail {

inline std::uint64_t checked_sum(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw PositionOverflow("accumulated displacement overflows 64 bits");
  return r;
}

// Sweep-word length of the permutation held by an IntervalPerm at position pos;
// empty when the support spans more than kSweepSpanCap sites.
inline constexpr std::uint64_t kSweepSpanCap = 20'000'000;
std::optional<std::uint64_t> sweep_length_of(const IntervalPerm& f, std::int64_t pos);

}  // namespace detail

template <class G>
TrajectoryReport<G> WalkEngine<G>::run(CounterRng rng) const {
  const G& g = measure_.group;
  TrajectoryReport<G> rep;
  rep.key = rng.key();
  rep.steps = options_.steps;

  Store store = [&] {
    if constexpr (std::is_same_v<G, IntLine>) return IntervalPerm{};
    else return HashPerm<G>(g);
  }();
  Monitor monitor(g, window_, options_.change_log_cap);
  std::unordered_set<Point, typename G::Hash> visited;
  Point pos = g.identity();
  if (options_.track_range) visited.insert(pos);
  if (options_.path_prefix > 0) rep.path.push_back(pos);
  std::int64_t min_pos = 0, max_pos = 0;
  std::uint64_t inc_disp = 0;
  const bool keep_prefix = !options_.checkpoints.empty();
  if (keep_prefix) {
    rep.increment_disp_prefix.reserve(options_.steps + 1);
    rep.increment_disp_prefix.push_back(0);
  }
  std::vector<std::uint64_t> checkpoints = options_.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next_checkpoint = 0;
  std::size_t next_snapshot = 0;

  std::vector<IntervalPerm::Run> tau_runs;
  std::vector<std::pair<Point, Point>> tau_pairs;

  auto snapshot = [&](std::uint64_t n) {
    SeriesPoint<G> p;
    p.n = n;
    p.pos = pos;
    p.disp = store.displacement();
    p.support = store.support_size();
    p.range = visited.size();
    p.increment_disp = inc_disp;
    p.lower = std::max((p.disp + 1) / 2, g.norm(pos));
    if constexpr (std::is_same_v<G, IntLine>) {
      if (options_.upper_proxy) p.upper = detail::sweep_length_of(store, pos);
    }
    if (options_.keep_perm && store.support_size() <= options_.perm_cap) p.perm = store.to_finperm();
    rep.series.push_back(std::move(p));
  };
  auto take_checkpoint = [&](std::uint64_t n) {
    if constexpr (std::is_same_v<G, IntLine>) {
      while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == n) {
        rep.checkpoints.push_back(Checkpoint{n, pos, store.runs()});
        ++next_checkpoint;
      }
    }
  };

  if (next_snapshot < grid_.size() && grid_[next_snapshot] == 0) {
    snapshot(0);
    ++next_snapshot;
  }
  take_checkpoint(0);

  for (std::uint64_t n = 1; n <= options_.steps; ++n) {
    const Draw d = sampler_.draw(rng);
    const Point prev = pos;
    std::uint64_t d_disp;
    if constexpr (std::is_same_v<G, IntLine>) {
      tau_runs.clear();
      if (d.is_tail()) {
        const auto len = static_cast<std::int64_t>(d.tail_n);
        if (len >= 2) {
          const std::int64_t last = checked_add(prev, len - 1);
          tau_runs.push_back({prev, last - 1, 1});
          tau_runs.push_back({last, last, -(len - 1)});
        }
        d_disp = 2 * (d.tail_n - 1);
      } else {
        const auto& runs = atom_runs_[static_cast<std::size_t>(d.atom)];
        for (const auto& r : runs) tau_runs.push_back({checked_add(r.lo, prev), checked_add(r.hi, prev), r.offset});
        pos = checked_add(pos, measure_.atoms[static_cast<std::size_t>(d.atom)].element.pos);
        d_disp = atom_disp_[static_cast<std::size_t>(d.atom)];
      }
      store.right_compose(tau_runs);
      // Monitor the change set S_n·supp(σ_{n+1}).
      if (d.is_tail()) {
        if (d.tail_n >= 2) {
          const std::int64_t hi = prev + static_cast<std::int64_t>(d.tail_n) - 1;
          for (const auto& s : window_.sites) {
            if (s >= prev && s <= hi) monitor.touch(s, store.at(s), n);
          }
        }
      } else {
        for (const auto& r : tau_runs) {
          for (std::int64_t x = r.lo; x <= r.hi; ++x) {
            if (monitor.in_window(x)) monitor.touch(x, store.at(x), n);
          }
        }
      }
      min_pos = std::min(min_pos, pos);
      max_pos = std::max(max_pos, pos);
    } else {
      const auto& atom = measure_.atoms[static_cast<std::size_t>(d.atom)];
      tau_pairs.clear();
      for (const auto& [x, sx] : atom_pairs_[static_cast<std::size_t>(d.atom)]) {
        tau_pairs.emplace_back(g.mul(prev, x), g.mul(prev, sx));
      }
      store.right_compose(tau_pairs);
      for (const auto& [x, unused] : tau_pairs) {
        if (monitor.in_window(x)) monitor.touch(x, store.at(x), n);
      }
      pos = g.mul(pos, atom.element.pos);
      d_disp = atom_disp_[static_cast<std::size_t>(d.atom)];
    }
    inc_disp = detail::checked_sum(inc_disp, d_disp);
    if (keep_prefix) rep.increment_disp_prefix.push_back(inc_disp);
    if (options_.track_range) visited.insert(pos);
    if (rep.path.size() < options_.path_prefix) rep.path.push_back(pos);
    if (next_snapshot < grid_.size() && grid_[next_snapshot] == n) {
      snapshot(n);
      ++next_snapshot;
    }
    take_checkpoint(n);
  }

  rep.final_pos = pos;
  rep.final_disp = store.displacement();
  rep.final_support = store.support_size();
  rep.min_pos = min_pos;
  rep.max_pos = max_pos;
  rep.stabilization = monitor.sorted();
  if (options_.keep_final_perm && store.support_size() <= options_.final_perm_cap) rep.final_perm = store.to_finperm();
  if constexpr (std::is_same_v<G, IntLine>) rep.final_runs = store.runs();
  return rep;
}

// One trajectory of the μ-walk; rng determines everything.
template <class G>
TrajectoryReport<G> run_walk(const MeasureSpec<G>& m, const SiteWindow<G>& window, const WalkOptions& options,
                             CounterRng rng) {
  return WalkEngine<G>(m, window, options).run(rng);
}

// ---------------------------------------------------------------------------
// Confinement predicates for H = Z

struct ConfinementCheck {
  std::uint64_t n = 0;
  double epsilon = 0;
  double c1 = 0;
  double d = 0;
  double d_prime = 0;
  bool pos_in_band = false;
  bool tail_identity = false;
  bool head_stable = false;
  bool window_disp_ok = false;
  bool in_qn = false;
  // Diagnostics.
  std::uint64_t window_disp = 0;
  double window_bound = 0;
  std::uint64_t window_start = 0;
};

// Evaluates, for the checkpoint at n:
//   pos_in_band:    (c1-ε)n <= S_n <= (c1+ε)n
//   tail_identity:  F_n(y) = y for every y > (c1+2ε)n
//   head_stable:    F_n(y) = F_final(y) for every y < (c1-2ε)n
//   window_disp_ok: Σ_{k=n-ε̃n}^{n} Disp(σ_k) < D ε̃ n, ε̃ = 4ε/(c1+2ε)
ConfinementCheck check_confinement(const TrajectoryReport<IntLine>& report, double epsilon, double c1, double d,
                                   double d_prime, std::uint64_t n);

}  // namespace lampshuffler
