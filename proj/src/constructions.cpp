#include "lampshuffler/constructions.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "lampshuffler/measure.hpp"

namespace lampshuffler {

namespace {

std::size_t t_size(int d, int m) {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(m);
  return n;
}

LatticePoint t_point(std::size_t idx, int d, int m) {
  LatticePoint p;
  for (int i = 0; i < d; ++i) {
    p.c[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(m));
    idx /= static_cast<std::size_t>(m);
  }
  return p;
}

bool is_identity(const TPerm& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != i) return false;
  }
  return true;
}

TPerm identity_tperm(int d, int m) {
  TPerm p(t_size(d, m));
  std::iota(p.begin(), p.end(), std::uint16_t{0});
  return p;
}

void check_params(int d, int m) {
  if (d < 1 || d > kMaxLatticeDim) throw ConstructionError("wreath dimension must lie in [1, 4]");
  if (m < 2) throw ConstructionError("wreath block size m must be at least 2");
  if (t_size(d, m) > 8) throw ConstructionError("|T| = m^d is limited to 8");
}

}  // namespace

std::size_t WreathElement::Hash::operator()(const WreathElement& w) const {
  std::uint64_t h = Lattice::Hash{}(w.shift);
  for (const auto& [k, p] : w.cosets) {
    h = mix64(h ^ Lattice::Hash{}(k));
    for (auto v : p) h = mix64(h + v);
  }
  return h;
}

LatticePoint coset_of(const LatticePoint& x, int d, int m) {
  LatticePoint r;
  for (int i = 0; i < d; ++i) {
    const std::int64_t v = x.c[static_cast<std::size_t>(i)];
    std::int64_t q = v / m;
    if (v % m != 0 && v < 0) --q;
    r.c[static_cast<std::size_t>(i)] = q * m;
  }
  return r;
}

WreathElement wreath_identity(int d, int m) {
  check_params(d, m);
  WreathElement w;
  w.d = d;
  w.m = m;
  return w;
}

WreathElement wreath_mul(const WreathElement& a, const WreathElement& b) {
  if (a.d != b.d || a.m != b.m) throw ConstructionError("wreath elements over different (d, m)");
  const Lattice lat(a.d);
  WreathElement r = wreath_identity(a.d, a.m);
  r.shift = lat.mul(a.shift, b.shift);
  std::vector<LatticePoint> keys;
  for (const auto& [k, p] : a.cosets) keys.push_back(k);
  for (const auto& [k, p] : b.cosets) keys.push_back(lat.mul(k, a.shift));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  const TPerm id = identity_tperm(a.d, a.m);
  for (const auto& h : keys) {
    auto ia = a.cosets.find(h);
    auto ib = b.cosets.find(lat.mul(h, lat.inv(a.shift)));
    const TPerm& pa = ia == a.cosets.end() ? id : ia->second;
    const TPerm& pb = ib == b.cosets.end() ? id : ib->second;
    TPerm c(id.size());
    for (std::size_t t = 0; t < c.size(); ++t) c[t] = pa[pb[t]];
    if (!is_identity(c)) r.cosets.emplace(h, std::move(c));
  }
  return r;
}

WreathElement wreath_inverse(const WreathElement& a) {
  const Lattice lat(a.d);
  WreathElement r = wreath_identity(a.d, a.m);
  r.shift = lat.inv(a.shift);
  for (const auto& [h, p] : a.cosets) {
    TPerm q(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) q[p[t]] = static_cast<std::uint16_t>(t);
    r.cosets.emplace(lat.mul(h, r.shift), std::move(q));
  }
  return r;
}

WreathElement wreath_generator(int d, int m, const TPerm& sigma, const LatticePoint& s) {
  WreathElement w = wreath_identity(d, m);
  if (sigma.size() != t_size(d, m)) throw ConstructionError("permutation is not on T");
  if (!is_identity(sigma)) w.cosets.emplace(LatticePoint{}, sigma);
  w.shift = s;
  return w;
}

Element<Lattice> wreath_embed(const WreathElement& w) {
  const Lattice lat(w.d);
  std::vector<FinPerm<Lattice>::Entry> pairs;
  for (const auto& [h, p] : w.cosets) {
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (p[t] == t) continue;
      pairs.emplace_back(lat.mul(h, t_point(t, w.d, w.m)), lat.mul(h, t_point(p[t], w.d, w.m)));
    }
  }
  return {FinPerm<Lattice>::from_pairs(std::move(pairs)), w.shift};
}

std::vector<TPerm> sym_t(int d, int m) {
  check_params(d, m);
  TPerm p = identity_tperm(d, m);
  std::vector<TPerm> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::vector<WreathElement> wreath_generators(int d, int m) {
  const Lattice lat(d);
  std::vector<LatticePoint> shifts{lat.identity()};
  for (int i = 0; i < d; ++i) {
    shifts.push_back(lat.unit(i, m));
    shifts.push_back(lat.unit(i, -m));
  }
  std::vector<WreathElement> out;
  for (const auto& s : shifts) {
    for (const auto& sigma : sym_t(d, m)) {
      if (is_identity(sigma) && s == lat.identity()) continue;
      out.push_back(wreath_generator(d, m, sigma, s));
    }
  }
  return out;
}

GeneratingSet<Lattice> ext_generators(int d, int m) {
  const Lattice lat(d);
  std::vector<LatticePoint> shifts{lat.identity()};
  for (int i = 0; i < d; ++i) {
    shifts.push_back(lat.unit(i, 1));
    shifts.push_back(lat.unit(i, -1));
    shifts.push_back(lat.unit(i, m));
    shifts.push_back(lat.unit(i, -m));
  }
  GeneratingSet<Lattice> out;
  for (const auto& s : shifts) {
    for (const auto& sigma : sym_t(d, m)) {
      if (is_identity(sigma) && s == lat.identity()) continue;
      out.elements.push_back(wreath_embed(wreath_generator(d, m, sigma, s)));
    }
  }
  return out;
}

WreathElement random_wreath(int d, int m, int coset_radius, CounterRng& rng) {
  const auto perms = sym_t(d, m);
  WreathElement w = wreath_identity(d, m);
  const auto span = static_cast<std::uint64_t>(2 * coset_radius + 1);
  std::uint64_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= span;
  for (std::uint64_t c = 0; c < cells; ++c) {
    if (rng.below(2) == 0) continue;
    LatticePoint h;
    std::uint64_t rest = c;
    for (int i = 0; i < d; ++i) {
      h.c[static_cast<std::size_t>(i)] = (static_cast<std::int64_t>(rest % span) - coset_radius) * m;
      rest /= span;
    }
    const auto& p = perms[1 + rng.below(perms.size() - 1)];
    w.cosets.emplace(h, p);
  }
  for (int i = 0; i < d; ++i) {
    w.shift.c[static_cast<std::size_t>(i)] = (static_cast<std::int64_t>(rng.below(span)) - coset_radius) * m;
  }
  return w;
}

QiReport qi_constants(int d, int m, unsigned radius, std::size_t budget) {
  check_params(d, m);
  const Lattice lat(d);
  QiReport rep;
  rep.radius = radius;
  rep.qi_c = 2.0 * d * static_cast<double>(1 << d) + d;

  const auto wgens = wreath_generators(d, m);
  const auto wball = breadth_first_ball<WreathElement, WreathElement::Hash>(
      wreath_identity(d, m), std::span<const WreathElement>(wgens), radius, wreath_mul, budget);
  const auto egens = ext_generators(d, m);
  const auto eball = bfs_ball(lat, egens, radius, budget);
  rep.ball_size = wball.distance.size();

  std::unordered_set<Element<Lattice>, Element<Lattice>::Hash> images;
  for (const auto& [w, dw] : wball.distance) {
    const Element<Lattice> e = wreath_embed(w);
    if (!images.insert(e).second) rep.injective = false;
    for (const auto& [x, fx] : e.perm.entries()) {
      if (!(coset_of(x, d, m) == coset_of(fx, d, m))) rep.cosets_preserved = false;
    }
    auto it = eball.distance.find(e);
    if (it == eball.distance.end()) {
      ++rep.trivial_violations;
      continue;
    }
    const unsigned de = it->second;
    if (de > dw) ++rep.trivial_violations;
    if (dw == 0) continue;
    if (static_cast<double>(dw) > rep.qi_c * de) ++rep.bound_violations;
    rep.max_ratio = std::max(rep.max_ratio, static_cast<double>(dw) / de);
  }
  return rep;
}

// ---------------------------------------------------------------------------

GeneratingSet<IntLine> k_subgroup_gens(int m) {
  if (m < 3) throw ConstructionError("K requires M >= 3");
  const IntLine z;
  GeneratingSet<IntLine> out;
  const auto set = sigma_set(m);
  for (const auto& f : set) out.elements.push_back({f, m + 1});
  for (const auto& f : set) out.elements.push_back(inverse(z, Element<IntLine>{f, m + 1}));
  return out;
}

FinPerm<IntLine> k_inverse_perm(const FinPerm<IntLine>& f, int m) {
  const IntLine z;
  const auto finv = inverse(z, f);
  std::vector<FinPerm<IntLine>::Entry> pairs;
  for (std::int64_t x = -m - 1; x <= -1; ++x) pairs.emplace_back(x, x - m);
  for (std::int64_t x = -2 * m - 1; x <= -m - 2; ++x) pairs.emplace_back(x, -m - 1 + finv(x + m + 1));
  return FinPerm<IntLine>::from_pairs(std::move(pairs));
}

GrowthGate k_growth_gate(int m, unsigned lo, unsigned hi, std::size_t budget) {
  const IntLine z;
  GrowthGate gate;
  gate.sizes = ball_growth(z, k_subgroup_gens(m), hi + 1, budget);
  std::size_t fact = 1;
  for (int i = 2; i <= m; ++i) fact *= static_cast<std::size_t>(i);
  gate.bound = 2 * fact;
  for (unsigned n = lo; n <= hi; ++n) {
    const std::size_t inc = gate.sizes[n + 1] - gate.sizes[n];
    gate.increments.push_back(inc);
    gate.max_increment = std::max(gate.max_increment, inc);
  }
  gate.pass = gate.max_increment <= gate.bound;
  return gate;
}

double min_growth_ratio(const std::vector<std::size_t>& sizes, unsigned lo, unsigned hi) {
  if (hi + 1 >= sizes.size()) throw ConstructionError("ball sizes do not reach the requested radius");
  double r = INFINITY;
  for (unsigned n = lo; n <= hi; ++n) {
    r = std::min(r, static_cast<double>(sizes[n + 1]) / static_cast<double>(sizes[n]));
  }
  return r;
}

}  // namespace lampshuffler
