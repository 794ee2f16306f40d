#pragma once

// Step distributions on FSym(H) ⋊ H.
//
// A MeasureSpec is a finite list of atoms with rational masses, optionally
// completed by the heavy-tailed cycle family on Z: with total mass m the tail
// puts mass m/(n(n+1)) on (r_n, 0), where r_n is the cycle 0 -> 1 -> ... ->
// n-1 -> 0. Masses always sum to exactly one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lampshuffler/element.hpp"
#include "lampshuffler/rational.hpp"
#include "lampshuffler/rng.hpp"

namespace lampshuffler {

class MeasureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class G>
struct Atom {
  Element<G> element;
  Rational mass;
};

struct HeavyTail {
  Rational mass;
};

template <class G>
struct MeasureSpec {
  G group;
  std::vector<Atom<G>> atoms;
  std::optional<HeavyTail> tail;  // H = Z only
  std::string name = "custom";

  Rational total_mass() const {
    Rational t(0);
    for (const auto& a : atoms) t += a.mass;
    if (tail) t += tail->mass;
    return t;
  }

  // Throws unless masses are positive, sum to one and the tail sits on Z.
  void validate() const {
    if (atoms.empty() && !tail) throw MeasureError("measure has no atoms");
    for (const auto& a : atoms) {
      if (a.mass <= 0) throw MeasureError("atom masses must be positive");
    }
    if (tail) {
      if constexpr (!std::is_same_v<G, IntLine>) throw MeasureError("heavy tail family requires H = Z");
      if (tail->mass <= 0) throw MeasureError("tail mass must be positive");
    }
    if (total_mass() != Rational(1)) throw MeasureError("masses sum to " + to_string(total_mass()) + ", not 1");
  }

  bool finite() const { return !tail.has_value(); }
};

// Maximum of |p| over atom positions and of d(e, x) over permutation supports;
// the tail contributes nothing finite, so it is reported separately.
template <class G>
std::uint64_t support_radius(const MeasureSpec<G>& m) {
  std::uint64_t r = 0;
  for (const auto& a : m.atoms) {
    r = std::max(r, m.group.norm(a.element.pos));
    for (const auto& [x, fx] : a.element.perm.entries()) r = std::max(r, m.group.norm(x));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Built-in families

template <class G>
MeasureSpec<G> uniform_measure(const G& g, const std::vector<Element<G>>& elements, std::string name) {
  MeasureSpec<G> m{g, {}, std::nullopt, std::move(name)};
  const Rational p(1, static_cast<std::int64_t>(elements.size()));
  for (const auto& e : elements) m.atoms.push_back({e, p});
  m.validate();
  return m;
}

// Uniform on S_std.
template <class G>
MeasureSpec<G> simple_std(const G& g) {
  return uniform_measure(g, standard_generators(g).elements, "simple_std");
}

// Uniform on {(id,2), (id,-1), (δ_1,0), (δ_{-1},0)}; projected drift +1/4.
MeasureSpec<IntLine> drifted_std();

// Uniform on {(id,2), (id,-1)}: a pure translation walk with drift +1/2.
MeasureSpec<IntLine> drifted_translation();

// μ(id,1) = 1/8, μ(id,-1) = 3/8, μ(r_n,0) = 1/(2n(n+1)).
MeasureSpec<IntLine> counterexample_measure();

// Σ_M: permutations equal to x ↦ x + M on [-M, 0] mapping [1, M] onto [-M, -1].
// Enumerated in lexicographic order of (f(1), ..., f(M)) negated.
std::vector<FinPerm<IntLine>> sigma_set(int m);

// Generators (f, M+1), f ∈ Σ_M, with mass bias/M! each, and their inverses
// with mass (1 - bias)/M! each. bias = 1/2 is the uniform measure on S_K.
MeasureSpec<IntLine> sigma_measure(int m, Rational bias);

// Uniform on {(δ_x, x) : x a positive generator of F_k}.
MeasureSpec<FreeGroup> free_delta(int k);

// Point mass.
template <class G>
MeasureSpec<G> delta_measure(const G& g, const Element<G>& e) {
  return MeasureSpec<G>{g, {{e, Rational(1)}}, std::nullopt, "delta"};
}

// ---------------------------------------------------------------------------
// Projection to H

template <class G>
std::vector<std::pair<typename G::Point, Rational>> projection(const MeasureSpec<G>& m) {
  std::vector<std::pair<typename G::Point, Rational>> out;
  auto add = [&](const typename G::Point& p, const Rational& mass) {
    for (auto& [q, w] : out) {
      if (q == p) {
        w += mass;
        return;
      }
    }
    out.emplace_back(p, mass);
  };
  for (const auto& a : m.atoms) add(a.element.pos, a.mass);
  if (m.tail) add(m.group.identity(), m.tail->mass);
  typename G::Less less;
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return less(a.first, b.first); });
  return out;
}

// Exact mean and second moment of each coordinate of the projection (Z, Z^d).
struct ProjectionMoments {
  std::vector<Rational> mean;
  std::vector<Rational> second;  // E[X_i^2]
  Rational variance_trace() const {
    Rational t(0);
    for (std::size_t i = 0; i < mean.size(); ++i) t += second[i] - mean[i] * mean[i];
    return t;
  }
  bool centered() const {
    return std::all_of(mean.begin(), mean.end(), [](const Rational& r) { return r.numerator() == 0; });
  }
};

ProjectionMoments projection_moments(const MeasureSpec<IntLine>& m);
ProjectionMoments projection_moments(const MeasureSpec<Lattice>& m);

// ---------------------------------------------------------------------------
// Sampling

// One increment: an atom index, or a tail draw (r_N, 0).
struct Draw {
  std::int32_t atom = -1;
  std::uint64_t tail_n = 0;
  bool is_tail() const { return atom < 0; }
};

inline constexpr std::uint64_t kTailResolution = std::uint64_t{1} << 53;

// N = floor(2^53 / (k+1)) for k uniform on [0, 2^53): P(N >= n) = floor(2^53/n) / 2^53.
inline std::uint64_t sample_tail_index(CounterRng& rng) {
  const std::uint64_t k = rng() >> 11;
  return kTailResolution / (k + 1);
}

template <class G>
class Sampler {
 public:
  explicit Sampler(const MeasureSpec<G>& m) : spec_(&m) {
    m.validate();
    std::int64_t lcm = 1;
    auto fold = [&](const Rational& r) {
      lcm = std::lcm(lcm, r.denominator());
      if (lcm <= 0) throw MeasureError("common denominator of masses overflows");
    };
    for (const auto& a : m.atoms) fold(a.mass);
    if (m.tail) fold(m.tail->mass);
    denominator_ = static_cast<std::uint64_t>(lcm);
    std::uint64_t acc = 0;
    for (const auto& a : m.atoms) {
      acc += static_cast<std::uint64_t>(a.mass.numerator() * (lcm / a.mass.denominator()));
      cumulative_.push_back(acc);
    }
  }

  Draw draw(CounterRng& rng) const {
    const std::uint64_t u = rng.below(denominator_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return Draw{-1, sample_tail_index(rng)};
    return Draw{static_cast<std::int32_t>(it - cumulative_.begin()), 0};
  }

  const MeasureSpec<G>& spec() const { return *spec_; }
  std::uint64_t denominator() const { return denominator_; }

 private:
  const MeasureSpec<G>* spec_;
  std::uint64_t denominator_ = 1;
  std::vector<std::uint64_t> cumulative_;
};

inline constexpr std::uint64_t kMaterializeCap = 10'000'000;

template <class G>
Element<G> materialize(const MeasureSpec<G>& m, const Draw& d) {
  if (!d.is_tail()) return m.atoms[static_cast<std::size_t>(d.atom)].element;
  if constexpr (std::is_same_v<G, IntLine>) {
    if (d.tail_n > kMaterializeCap) {
      throw MeasureError("tail draw r_" + std::to_string(d.tail_n) + " is too large to materialize");
    }
    return {cycle_perm(static_cast<std::int64_t>(d.tail_n)), 0};
  } else {
    throw MeasureError("tail draws exist only on Z");
  }
}

template <class G>
Element<G> sample(const Sampler<G>& s, CounterRng& rng) {
  return materialize(s.spec(), s.draw(rng));
}

// ---------------------------------------------------------------------------
// Moments

enum class MomentMethod { Exact, TruncatedSeries };

struct MomentReport {
  Rational alpha;
  bool finite = true;
  long double value = 0;  // meaningful when finite and method == Exact
  MomentMethod method = MomentMethod::Exact;
  std::optional<Rational> exact;  // integral alpha on finite measures
  // Truncated series over the tail (n <= series_terms), diagnostics only.
  std::uint64_t series_terms = 0;
  long double partial_sum = 0;     // length proxy: length_lower
  long double partial_sum_3n = 0;  // length proxy: the 3n word bound for r_n
};

inline constexpr std::uint64_t kDefaultSeriesTerms = 1'000'000;

// Σ_g ℓ(g)^α μ(g) with ℓ = length_lower. The tail family has ℓ(r_n, 0) = n - 1,
// so its contribution is finite iff α < 1.
template <class G>
MomentReport moment(const MeasureSpec<G>& m, const Rational& alpha, std::uint64_t series_terms = kDefaultSeriesTerms) {
  if (alpha <= 0) throw MeasureError("moment order must be positive");
  MomentReport rep;
  rep.alpha = alpha;
  const long double a = to_long_double(alpha);
  long double atoms = 0;
  const bool integral = alpha.denominator() == 1 && alpha.numerator() <= 8;
  Rational exact(0);
  for (const auto& at : m.atoms) {
    const std::uint64_t len = length_lower(m.group, at.element);
    atoms += std::pow(static_cast<long double>(len), a) * to_long_double(at.mass);
    if (integral) {
      Rational term(1);
      for (std::int64_t i = 0; i < alpha.numerator(); ++i) term *= Rational(static_cast<std::int64_t>(len));
      exact += term * at.mass;
    }
  }
  rep.value = atoms;
  if (!m.tail) {
    if (integral) rep.exact = exact;
    return rep;
  }
  rep.method = MomentMethod::TruncatedSeries;
  rep.series_terms = series_terms;
  const long double tm = to_long_double(m.tail->mass);
  long double lower = 0, upper = 0;
  for (std::uint64_t n = 1; n <= series_terms; ++n) {
    const long double w = tm / (static_cast<long double>(n) * static_cast<long double>(n + 1));
    lower += std::pow(static_cast<long double>(n - 1), a) * w;
    upper += std::pow(3.0L * static_cast<long double>(n), a) * w;
  }
  rep.partial_sum = atoms + lower;
  rep.partial_sum_3n = atoms + upper;
  rep.finite = alpha < 1;
  rep.value = rep.finite ? rep.partial_sum : INFINITY;
  return rep;
}

// E|supp σ_1|^α. The tail has |supp r_n| = n for n >= 2, finite iff α < 1.
template <class G>
MomentReport support_moment(const MeasureSpec<G>& m, const Rational& alpha,
                            std::uint64_t series_terms = kDefaultSeriesTerms) {
  if (alpha <= 0) throw MeasureError("moment order must be positive");
  MomentReport rep;
  rep.alpha = alpha;
  const long double a = to_long_double(alpha);
  for (const auto& at : m.atoms) {
    rep.value += std::pow(static_cast<long double>(at.element.perm.support_size()), a) * to_long_double(at.mass);
  }
  if (!m.tail) return rep;
  rep.method = MomentMethod::TruncatedSeries;
  rep.series_terms = series_terms;
  const long double tm = to_long_double(m.tail->mass);
  long double s = 0;
  for (std::uint64_t n = 2; n <= series_terms; ++n) {
    s += std::pow(static_cast<long double>(n), a) * tm / (static_cast<long double>(n) * static_cast<long double>(n + 1));
  }
  rep.partial_sum = rep.value + s;
  rep.finite = alpha < 1;
  rep.value = rep.finite ? rep.partial_sum : INFINITY;
  return rep;
}

// Expected displacement of one increment, E Disp(σ_1). Finite measures only.
template <class G>
long double mean_displacement(const MeasureSpec<G>& m) {
  if (m.tail) return INFINITY;
  long double s = 0;
  for (const auto& a : m.atoms) s += static_cast<long double>(displacement(m.group, a.element.perm)) * to_long_double(a.mass);
  return s;
}

// ---------------------------------------------------------------------------
// JSON

// {"name": "simple_std"} | {"name": "sigma_M", "M": 3, "bias": "3/4"} |
// {"atoms": [{"pos": 1, "perm": [], "p": "1/8"}, ...], "tail": "1/2"}
template <class G>
MeasureSpec<G> measure_from_json(const G& g, const json& j);

template <class G>
json measure_to_json(const MeasureSpec<G>& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) {
    json e = element_to_json(m.group, a.element);
    e["p"] = to_string(a.mass);
    atoms.push_back(e);
  }
  json j = {{"name", m.name}, {"atoms", atoms}};
  if (m.tail) j["tail"] = to_string(m.tail->mass);
  return j;
}

}  // namespace lampshuffler
