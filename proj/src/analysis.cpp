#include "lampshuffler/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lampshuffler {

namespace {

// Floor of a product that should be an integer, robust to one ulp of error.
std::uint64_t floor_product(double a, double b) {
  const double p = a * b;
  const double r = std::round(p);
  if (std::fabs(p - r) <= 1e-9 * std::max(1.0, std::fabs(p))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::floor(p));
}

}  // namespace

mpz_class stars_and_bars(std::uint64_t balls, std::uint64_t boxes) {
  if (boxes == 0) return balls == 0 ? 1 : 0;
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), balls + boxes - 1, boxes - 1);
  return r;
}

double log_mpz(const mpz_class& v) {
  if (sgn(v) <= 0) throw AnalysisError("log of a non-positive integer");
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

QnBound qn_size_bound(const QnBudget& b) {
  if (!(b.epsilon > 0)) throw AnalysisError("Q_n bound requires epsilon > 0");
  if (!(b.d_prime > 0)) throw AnalysisError("Q_n bound requires D' > 0");
  if (b.n == 0) throw AnalysisError("Q_n bound requires n >= 1");
  QnBound q;
  q.e = floor_product(b.epsilon, static_cast<double>(b.n));
  q.balls = floor_product(b.d_prime, static_cast<double>(q.e));
  q.boxes = 4 * q.e + 1;
  mpz_class pow2;
  mpz_ui_pow_ui(pow2.get_mpz_t(), 2, q.boxes);
  q.value = mpz_class(static_cast<unsigned long>(q.boxes)) * pow2 * stars_and_bars(q.balls, q.boxes);
  q.log_over_n = log_mpz(q.value) / static_cast<double>(b.n);
  return q;
}

double qn_log_limit(double epsilon, double d_prime) {
  return 4 * epsilon * std::log(2.0) + 4 * epsilon * std::log((4 + d_prime) / 4) +
         d_prime * epsilon * std::log((4 + d_prime) / d_prime);
}

// ---------------------------------------------------------------------------

namespace {

using u128 = unsigned __int128;

long double log_u128(u128 v) {
  const long double hi = static_cast<long double>(static_cast<std::uint64_t>(v >> 64));
  const long double lo = static_cast<long double>(static_cast<std::uint64_t>(v));
  return std::log(hi * 18446744073709551616.0L + lo);
}

}  // namespace

template <class G>
std::vector<EntropyRow> exact_entropy(const MeasureSpec<G>& m, std::uint64_t n, std::size_t budget) {
  if (m.tail) throw AnalysisError("exact entropy needs a finite-atom measure");
  Sampler<G> sampler(m);
  const std::uint64_t den = sampler.denominator();
  std::vector<u128> weight;
  for (const auto& a : m.atoms) weight.push_back(static_cast<u128>(a.mass.numerator() * (static_cast<std::int64_t>(den) / a.mass.denominator())));

  using Map = std::unordered_map<Element<G>, u128, typename Element<G>::Hash>;
  Map cur;
  cur.emplace(identity_element(m.group), 1);
  u128 total = 1;
  std::vector<EntropyRow> rows;
  for (std::uint64_t k = 1; k <= n; ++k) {
    u128 next_total;
    if (__builtin_mul_overflow(total, static_cast<u128>(den), &next_total)) {
      throw EntropyBudgetExceeded(k - 1, budget);
    }
    Map next;
    next.reserve(cur.size() * m.atoms.size());
    for (const auto& [e, c] : cur) {
      for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        next[compose(m.group, e, m.atoms[i].element)] += c * weight[i];
        if (next.size() > budget) throw EntropyBudgetExceeded(k - 1, budget);
      }
    }
    cur = std::move(next);
    total = next_total;
    long double s = 0;
    for (const auto& [e, c] : cur) s += static_cast<long double>(c) * log_u128(c);
    const long double tot = static_cast<long double>(total);
    EntropyRow row;
    row.n = k;
    row.entropy = static_cast<double>(std::max(0.0L, log_u128(total) - s / tot));
    row.support = cur.size();
    rows.push_back(row);
  }
  return rows;
}

template <class G>
EntropyRow plugin_entropy(const MeasureSpec<G>& m, std::uint64_t n, std::uint64_t samples, std::uint64_t seed,
                          unsigned threads) {
  if (samples < 1000) throw AnalysisError("plug-in entropy needs at least 1000 samples");
  WalkOptions opt;
  opt.steps = n;
  opt.snapshot_ratio = 1e9;
  opt.track_range = false;
  opt.keep_final_perm = true;
  const WalkEngine<G> engine(m, SiteWindow<G>{}, opt);
  auto draws = parallel_map<Element<G>>(samples, threads, [&](std::size_t i) {
    auto rep = engine.run(trajectory_rng(seed, i));
    if (!rep.final_perm) throw AnalysisError("sample support too large to hash");
    return Element<G>{std::move(*rep.final_perm), rep.final_pos};
  });
  std::unordered_map<Element<G>, std::uint64_t, typename Element<G>::Hash> counts;
  for (auto& e : draws) ++counts[std::move(e)];
  const double total = static_cast<double>(samples);
  double h = 0;
  for (const auto& [e, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  EntropyRow row;
  row.n = n;
  row.entropy = std::max(0.0, h);
  row.method = EntropyMethod::Plugin;
  row.support = counts.size();
  row.samples = samples;
  row.bias_note = static_cast<double>(counts.size() - 1) / (2 * total);
  return row;
}

template std::vector<EntropyRow> exact_entropy(const MeasureSpec<IntLine>&, std::uint64_t, std::size_t);
template std::vector<EntropyRow> exact_entropy(const MeasureSpec<Lattice>&, std::uint64_t, std::size_t);
template std::vector<EntropyRow> exact_entropy(const MeasureSpec<FreeGroup>&, std::uint64_t, std::size_t);
template EntropyRow plugin_entropy(const MeasureSpec<IntLine>&, std::uint64_t, std::uint64_t, std::uint64_t, unsigned);
template EntropyRow plugin_entropy(const MeasureSpec<Lattice>&, std::uint64_t, std::uint64_t, std::uint64_t, unsigned);
template EntropyRow plugin_entropy(const MeasureSpec<FreeGroup>&, std::uint64_t, std::uint64_t, std::uint64_t, unsigned);

std::vector<std::pair<std::uint64_t, std::uint64_t>> subadditivity_violations(const std::vector<EntropyRow>& rows,
                                                                              double tol) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bad;
  std::unordered_map<std::uint64_t, double> h;
  for (const auto& r : rows) h[r.n] = r.entropy;
  for (const auto& [a, ha] : h) {
    for (const auto& [b, hb] : h) {
      if (a > b) continue;
      auto it = h.find(a + b);
      if (it != h.end() && it->second > ha + hb + tol) bad.emplace_back(a, b);
    }
  }
  std::sort(bad.begin(), bad.end());
  return bad;
}

// ---------------------------------------------------------------------------

SlopeFit loglog_fit(std::span<const FitPoint> points) {
  if (points.size() < 3) throw AnalysisError("a log-log fit needs at least 3 points");
  SlopeFit fit;
  fit.points.assign(points.begin(), points.end());
  const double k = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    if (p.n == 0 || !(p.mean > 0)) throw AnalysisError("log-log fit needs positive coordinates");
    sx += std::log(static_cast<double>(p.n));
    sy += std::log(p.mean);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double dx = std::log(static_cast<double>(p.n)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.mean) - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (const auto& p : points) {
    const double r = std::log(p.mean) - fit.intercept - fit.slope * std::log(static_cast<double>(p.n));
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(ssr / (k - 2) / sxx);
  return fit;
}

WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0, 1};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// ---------------------------------------------------------------------------

double log_an_size(std::uint64_t n, std::uint64_t m) {
  const double lambda = std::pow(static_cast<double>(n), 0.75);
  const double sites = 2 * lambda + 1;
  return (std::log(sites) + std::lgamma(sites + static_cast<double>(m) + 1)) / static_cast<double>(n);
}

MaximalReport maximal_inequality_check(const MeasureSpec<IntLine>& m, std::uint64_t n, std::uint64_t trajectories,
                                       std::uint64_t seed, unsigned threads) {
  const auto pm = projection_moments(m);
  if (!pm.centered()) throw AnalysisError("projection has non-zero mean " + to_string(pm.mean[0]) + "; use the drift tools");
  if (trajectories == 0 || n == 0) throw AnalysisError("maximal inequality check needs n >= 1 and trajectories >= 1");
  MaximalReport rep;
  rep.n = n;
  rep.trajectories = trajectories;
  rep.sigma2 = static_cast<double>(to_long_double(pm.variance_trace()));
  rep.lambda = std::pow(static_cast<double>(n), 0.75);
  auto maxima = parallel_map<std::uint64_t>(trajectories, threads, [&](std::size_t i) {
    return simulate_projection(m, n, {}, trajectory_rng(seed, i)).max_abs;
  });
  std::uint64_t inside = 0;
  for (auto v : maxima) {
    if (static_cast<double>(v) < rep.lambda) ++inside;
  }
  const double t = static_cast<double>(trajectories);
  rep.empirical = static_cast<double>(inside) / t;
  rep.stderr_empirical = std::sqrt(rep.empirical * (1 - rep.empirical) / t);
  rep.bound = 1 - kolmogorov_bound(static_cast<double>(n), rep.sigma2, rep.lambda);
  rep.log_an = log_an_size(n, support_radius(m));
  rep.pass = rep.empirical >= rep.bound - 3 * rep.stderr_empirical;
  return rep;
}

std::vector<RangePoint> range_asymptotics(const MeasureSpec<Lattice>& m, std::vector<std::uint64_t> ns,
                                          std::uint64_t trajectories, std::uint64_t seed, unsigned threads) {
  if (m.group.dim != 2) throw AnalysisError("range asymptotics is defined for H = Z^2");
  const auto pm = projection_moments(m);
  if (!pm.centered()) throw AnalysisError("range asymptotics requires a centered (recurrent) projection");
  if (ns.empty() || trajectories == 0) throw AnalysisError("range asymptotics needs n values and trajectories");
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const std::uint64_t steps = ns.back();
  auto runs = parallel_map<std::vector<std::uint64_t>>(trajectories, threads, [&](std::size_t i) {
    return simulate_projection(m, steps, ns, trajectory_rng(seed, i)).range_at;
  });
  std::vector<RangePoint> out;
  const double t = static_cast<double>(trajectories);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const double n = static_cast<double>(ns[j]);
    const double scale = ns[j] == 0 ? 0 : std::log(n) / n;
    double s = 0, sq = 0, r = 0;
    for (const auto& run : runs) {
      const double x = static_cast<double>(run[j]) * scale;
      r += static_cast<double>(run[j]);
      s += x;
      sq += x * x;
    }
    RangePoint p;
    p.n = ns[j];
    p.mean_range = r / t;
    p.statistic = s / t;
    p.stderr_statistic = trajectories > 1 ? std::sqrt(std::max(0.0, sq / t - p.statistic * p.statistic) / (t - 1)) : 0;
    out.push_back(p);
  }
  return out;
}

RayCheck free_ray_check(const TrajectoryReport<FreeGroup>& report, std::size_t i_max) {
  if (report.path.size() < i_max + 2) throw AnalysisError("trajectory path prefix is shorter than the ray check");
  RayCheck out;
  out.ray_ok = true;
  for (std::size_t i = 0; i <= i_max; ++i) {
    const auto* rec = report.record(report.path[i]);
    if (!rec || !(rec->value == report.path[i + 1])) {
      out.ray_ok = false;
      out.first_failure = i;
      break;
    }
  }
  const FreeWord e{};
  out.identity_unreached = std::none_of(report.stabilization.begin(), report.stabilization.end(),
                                        [&](const auto& r) { return r.value == e; });
  return out;
}

}  // namespace lampshuffler
