#pragma once

// Estimators over walk reports and exact combinatorics.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lampshuffler/measure.hpp"
#include "lampshuffler/parallel.hpp"
#include "lampshuffler/walk.hpp"

namespace lampshuffler {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Counting the confinement sets

struct QnBudget {
  double epsilon = 0;
  double c1 = 0;
  double d_prime = 0;
  std::uint64_t n = 1;
};

struct QnBound {
  std::uint64_t e = 0;      // floor(ε n)
  std::uint64_t balls = 0;  // floor(D′ e)
  std::uint64_t boxes = 0;  // 4e + 1
  mpz_class value;          // boxes · 2^boxes · binom(4e + balls, balls)
  double log_over_n = 0;    // (1/n) log(value), nats
};

// Ways to put exactly `balls` identical balls into `boxes` distinguishable boxes.
mpz_class stars_and_bars(std::uint64_t balls, std::uint64_t boxes);

QnBound qn_size_bound(const QnBudget& b);

// lim (1/n) log of the bound: 4ε log 2 + 4ε log((4+D′)/4) + D′ε log((4+D′)/D′).
double qn_log_limit(double epsilon, double d_prime);

// Natural log of a positive big integer.
double log_mpz(const mpz_class& v);

// ---------------------------------------------------------------------------
// Entropy

enum class EntropyMethod { Exact, Plugin };

struct EntropyRow {
  std::uint64_t n = 0;
  double entropy = 0;  // nats
  EntropyMethod method = EntropyMethod::Exact;
  std::uint64_t support = 0;
  std::optional<std::uint64_t> samples;
  std::optional<double> bias_note;  // plug-in only: (support - 1) / (2 samples)
};

inline constexpr std::size_t kDefaultEntropyBudget = 10'000'000;

class EntropyBudgetExceeded : public std::runtime_error {
 public:
  EntropyBudgetExceeded(std::uint64_t largest, std::size_t budget)
      : std::runtime_error("support of the convolution power exceeds " + std::to_string(budget) +
                           " elements; largest feasible n is " + std::to_string(largest)),
        largest_feasible(largest) {}
  std::uint64_t largest_feasible;
};

// H(μ^{*k}) for k = 1..n by exact convolution with integer weights.
template <class G>
std::vector<EntropyRow> exact_entropy(const MeasureSpec<G>& m, std::uint64_t n,
                                      std::size_t budget = kDefaultEntropyBudget);

// Plug-in estimate from `samples` independent copies of X_n.
template <class G>
EntropyRow plugin_entropy(const MeasureSpec<G>& m, std::uint64_t n, std::uint64_t samples, std::uint64_t seed,
                          unsigned threads = 1);

// Pairs (m, k) with m + k <= max n where H_{m+k} > H_m + H_k + tol.
std::vector<std::pair<std::uint64_t, std::uint64_t>> subadditivity_violations(const std::vector<EntropyRow>& rows,
                                                                              double tol = 1e-9);

// ---------------------------------------------------------------------------
// Drift exponent

enum class DriftProxy { Lower, Upper };

struct FitPoint {
  std::uint64_t n = 0;
  double mean = 0;
};

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double stderr_slope = 0;
  std::vector<FitPoint> points;
};

// Unweighted least squares of log y on log x.
SlopeFit loglog_fit(std::span<const FitPoint> points);

template <class G>
SlopeFit drift_exponent(const std::vector<TrajectoryReport<G>>& reports, DriftProxy proxy, std::uint64_t n_lo,
                        std::uint64_t n_hi) {
  if (reports.size() < 50) throw AnalysisError("drift exponent needs at least 50 trajectories");
  std::vector<FitPoint> points;
  for (const auto& p : reports.front().series) {
    if (p.n < n_lo || p.n > n_hi || p.n == 0) continue;
    double sum = 0;
    for (const auto& r : reports) {
      const auto* q = r.at(p.n);
      if (!q) throw AnalysisError("reports do not share a snapshot grid");
      if (proxy == DriftProxy::Lower) {
        sum += static_cast<double>(q->lower);
      } else {
        if (!q->upper) throw AnalysisError("upper proxy was not recorded at n = " + std::to_string(p.n));
        sum += static_cast<double>(*q->upper);
      }
    }
    points.push_back({p.n, sum / static_cast<double>(reports.size())});
  }
  if (points.size() < 6) throw AnalysisError("drift exponent needs at least 6 sample points in range");
  return loglog_fit(points);
}

// ---------------------------------------------------------------------------
// Borel–Cantelli partial sums

struct WilsonInterval {
  double lo = 0, hi = 0;
};
WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

struct BorelCantelliPoint {
  std::uint64_t n = 0;
  double partial_sum = 0;  // Σ_{k<n} P̂(F_{k+1}(h) ≠ F_k(h))
  double band_lo = 0, band_hi = 0;
  // Fraction of trajectories with a change in (previous n, n], with its Wilson interval.
  double window_freq = 0;
  WilsonInterval window_band;
};

template <class G>
std::vector<BorelCantelliPoint> borel_cantelli_sum(const std::vector<TrajectoryReport<G>>& reports,
                                                   const typename G::Point& site, std::span<const std::uint64_t> ns) {
  if (reports.empty()) throw AnalysisError("no trajectories");
  const double t = static_cast<double>(reports.size());
  std::vector<const StabilizationRecord<G>*> recs;
  for (const auto& r : reports) {
    const auto* rec = r.record(site);
    if (!rec) throw AnalysisError("site is not in the monitor window");
    if (rec->changes > rec->change_steps.size()) {
      throw AnalysisError("change log was capped; raise change_log_cap");
    }
    recs.push_back(rec);
  }
  std::vector<BorelCantelliPoint> out;
  std::uint64_t prev = 0;
  for (auto n : ns) {
    double sum = 0, sq = 0;
    std::uint64_t hit = 0;
    for (const auto* rec : recs) {
      const auto& cs = rec->change_steps;
      const auto upto = static_cast<double>(std::upper_bound(cs.begin(), cs.end(), n) - cs.begin());
      sum += upto;
      sq += upto * upto;
      auto it = std::upper_bound(cs.begin(), cs.end(), prev);
      if (it != cs.end() && *it <= n) ++hit;
    }
    BorelCantelliPoint p;
    p.n = n;
    p.partial_sum = sum / t;
    const double var = std::max(0.0, sq / t - p.partial_sum * p.partial_sum);
    const double se = std::sqrt(var / t);
    p.band_lo = std::max(0.0, p.partial_sum - 1.96 * se);
    p.band_hi = p.partial_sum + 1.96 * se;
    p.window_freq = static_cast<double>(hit) / t;
    p.window_band = wilson(hit, reports.size());
    out.push_back(p);
    prev = n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projected walk on Z or Z^d (permutation coordinate ignored)

struct ProjectionRun {
  std::uint64_t max_abs = 0;               // max_k ‖S_k‖ over k <= steps (Z: |S_k|)
  std::vector<std::uint64_t> range_at;     // R_n at each requested n
};

template <class G>
ProjectionRun simulate_projection(const MeasureSpec<G>& m, std::uint64_t steps, std::span<const std::uint64_t> range_ns,
                                  CounterRng rng) {
  const G& g = m.group;
  Sampler<G> sampler(m);
  std::vector<typename G::Point> jumps;
  for (const auto& a : m.atoms) jumps.push_back(a.element.pos);
  ProjectionRun out;
  const bool want_range = !range_ns.empty();
  std::unordered_set<typename G::Point, typename G::Hash> seen;
  auto pos = g.identity();
  if (want_range) seen.insert(pos);
  std::size_t next = 0;
  while (next < range_ns.size() && range_ns[next] == 0) {
    out.range_at.push_back(seen.size());
    ++next;
  }
  for (std::uint64_t k = 1; k <= steps; ++k) {
    const Draw d = sampler.draw(rng);
    if (!d.is_tail()) pos = g.mul(pos, jumps[static_cast<std::size_t>(d.atom)]);
    out.max_abs = std::max(out.max_abs, g.norm(pos));
    if (want_range) {
      seen.insert(pos);
      while (next < range_ns.size() && range_ns[next] == k) {
        out.range_at.push_back(seen.size());
        ++next;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov maximal inequality on Z

// P(max_{k<=n} |S_k| >= λ) <= n σ² / λ².
inline double kolmogorov_bound(double n, double sigma2, double lambda) { return n * sigma2 / (lambda * lambda); }

// (1/n) log((2λ+1) · (2λ+1+M)!) with λ = n^{3/4}.
double log_an_size(std::uint64_t n, std::uint64_t m);

struct MaximalReport {
  std::uint64_t n = 0;
  std::uint64_t trajectories = 0;
  double sigma2 = 0;
  double lambda = 0;
  double empirical = 0;  // P̂(max_{k<=n} |S_k| < λ)
  double stderr_empirical = 0;
  double bound = 0;      // 1 - σ²/√n
  double log_an = 0;
  bool pass = false;     // empirical >= bound - 3 SE
};

MaximalReport maximal_inequality_check(const MeasureSpec<IntLine>& m, std::uint64_t n, std::uint64_t trajectories,
                                       std::uint64_t seed, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Range on Z^2

struct RangePoint {
  std::uint64_t n = 0;
  double mean_range = 0;
  double statistic = 0;  // mean R_n · log n / n; log 1 = 0
  double stderr_statistic = 0;
};

std::vector<RangePoint> range_asymptotics(const MeasureSpec<Lattice>& m, std::vector<std::uint64_t> ns,
                                          std::uint64_t trajectories, std::uint64_t seed, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Comparing limit functions

class UnstableWindow : public AnalysisError {
 public:
  UnstableWindow(const std::string& what, std::vector<std::string> s) : AnalysisError(what), sites(std::move(s)) {}
  std::vector<std::string> sites;
};

template <class G>
struct LimitComparison {
  std::uint64_t agree = 0;
  std::uint64_t disagree = 0;
  std::vector<typename G::Point> sites;  // where the limits differ
};

template <class G>
LimitComparison<G> limit_compare(const G& g, const TrajectoryReport<G>& a, const TrajectoryReport<G>& b,
                                 std::span<const typename G::Point> window) {
  std::vector<std::string> unstable;
  auto fetch = [&](const TrajectoryReport<G>& r, const typename G::Point& s) -> const StabilizationRecord<G>* {
    const auto* rec = r.record(s);
    if (!rec) throw AnalysisError("site " + g.to_json(s).dump() + " was not monitored");
    if (2 * rec->last_change >= r.steps && rec->changes > 0) unstable.push_back(g.to_json(s).dump());
    return rec;
  };
  LimitComparison<G> out;
  std::vector<std::pair<const StabilizationRecord<G>*, const StabilizationRecord<G>*>> pairs;
  for (const auto& s : window) pairs.emplace_back(fetch(a, s), fetch(b, s));
  if (!unstable.empty()) {
    std::string list;
    for (const auto& u : unstable) list += (list.empty() ? "" : ", ") + u;
    throw UnstableWindow("window not stable at sites " + list, unstable);
  }
  for (const auto& [ra, rb] : pairs) {
    if (ra->value == rb->value) {
      ++out.agree;
    } else {
      ++out.disagree;
      out.sites.push_back(ra->site);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free group ray check

struct RayCheck {
  bool ray_ok = false;             // F(γ(i)) = γ(i+1) for i <= i_max
  bool identity_unreached = false; // no monitored site maps to e
  std::uint64_t first_failure = 0;
};

RayCheck free_ray_check(const TrajectoryReport<FreeGroup>& report, std::size_t i_max);

}  // namespace lampshuffler
