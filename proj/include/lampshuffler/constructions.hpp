#pragma once

// Subgroups of FSym(Z^d) ⋊ Z^d built from explicit generators: the wreath
// product Sym(T) ≀ (mZ)^d with T = {0, ..., m-1}^d, and the subgroup K of
// FSym(Z) ⋊ Z generated by the (f, M+1), f ∈ Σ_M.

#include <cstdint>
#include <map>
#include <vector>

#include "lampshuffler/bfs.hpp"
#include "lampshuffler/element.hpp"
#include "lampshuffler/rng.hpp"

namespace lampshuffler {

class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A permutation of T, as images of the indices 0..m^d-1 (index = Σ t_i m^i).
using TPerm = std::vector<std::uint16_t>;

struct WreathElement {
  int d = 1;
  int m = 2;
  std::map<LatticePoint, TPerm> cosets;  // keys in (mZ)^d, values never the identity
  LatticePoint shift{};                   // in (mZ)^d

  friend bool operator==(const WreathElement&, const WreathElement&) = default;

  struct Hash {
    std::size_t operator()(const WreathElement& w) const;
  };
};

WreathElement wreath_identity(int d, int m);
WreathElement wreath_mul(const WreathElement& a, const WreathElement& b);
WreathElement wreath_inverse(const WreathElement& a);
// Lamp σ on the coset at 0, then shift s.
WreathElement wreath_generator(int d, int m, const TPerm& sigma, const LatticePoint& s);

// Coset representative of x in (mZ)^d, by floor division.
LatticePoint coset_of(const LatticePoint& x, int d, int m);

Element<Lattice> wreath_embed(const WreathElement& w);

// All of Sym(T), identity first.
std::vector<TPerm> sym_t(int d, int m);

// {(σ, s) : σ ∈ Sym(T), s ∈ S_H ∪ {0}} minus the identity, S_H = {±m e_i}.
std::vector<WreathElement> wreath_generators(int d, int m);
// Same permutations with s ∈ {0, ±e_i, ±m e_i}, as elements of FSym(Z^d) ⋊ Z^d.
GeneratingSet<Lattice> ext_generators(int d, int m);

WreathElement random_wreath(int d, int m, int coset_radius, CounterRng& rng);

struct QiReport {
  unsigned radius = 0;
  double max_ratio = 1;      // max ‖g‖_wreath / ‖embed g‖_ext over g ≠ e; 1 on the trivial ball
  double qi_c = 0;        // 2d·2^d + d
  std::size_t ball_size = 0;
  std::size_t bound_violations = 0;    // ‖g‖_wreath > C ‖embed g‖_ext
  std::size_t trivial_violations = 0;  // ‖embed g‖_ext > ‖g‖_wreath
  bool injective = true;
  bool cosets_preserved = true;
};

QiReport qi_constants(int d, int m, unsigned radius, std::size_t budget = kDefaultBfsBudget);

// ---------------------------------------------------------------------------
// The subgroup K

// Positive generators (f, M+1), f ∈ Σ_M, followed by their inverses.
GeneratingSet<IntLine> k_subgroup_gens(int m);

// Closed form of the permutation of (f, M+1)^{-1}: x ↦ x - M on [-M-1, -1],
// x ↦ -M-1 + f^{-1}(x+M+1) on [-2M-1, -M-2], identity elsewhere.
FinPerm<IntLine> k_inverse_perm(const FinPerm<IntLine>& f, int m);

struct GrowthGate {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> increments;  // |B(n+1)| - |B(n)| for n in [lo, hi]
  std::size_t max_increment = 0;
  std::size_t bound = 0;
  bool pass = false;
};

// K: every increment |B(n+1)| - |B(n)|, n ∈ [lo, hi], is at most 2·M!.
GrowthGate k_growth_gate(int m, unsigned lo, unsigned hi, std::size_t budget = kDefaultBfsBudget);

// min over n ∈ [lo, hi] of |B(n+1)| / |B(n)|.
double min_growth_ratio(const std::vector<std::size_t>& sizes, unsigned lo, unsigned hi);

}  // namespace lampshuffler
