#pragma once

// Breadth-first enumeration of Cayley-graph balls.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lampshuffler/element.hpp"

namespace lampshuffler {

inline constexpr std::size_t kDefaultBfsBudget = 5'000'000;

class BfsBudgetExceeded : public std::runtime_error {
 public:
  BfsBudgetExceeded(unsigned radius_completed, std::size_t budget)
      : std::runtime_error("ball exceeds node budget " + std::to_string(budget) + " after completing radius " +
                           std::to_string(radius_completed)),
        radius_completed(radius_completed) {}
  unsigned radius_completed;
};

template <class E, class Hash>
struct Ball {
  std::unordered_map<E, unsigned, Hash> distance;
  std::vector<std::size_t> sphere_sizes;  // |S(0)|, |S(1)|, ...

  std::vector<std::size_t> ball_sizes() const {
    std::vector<std::size_t> out;
    std::size_t acc = 0;
    for (auto s : sphere_sizes) out.push_back(acc += s);
    return out;
  }
};

// Exact word lengths of every element within `radius` of `identity`.
// The frontier is expanded in insertion order, generators in list order.
template <class E, class Hash, class Mul>
Ball<E, Hash> breadth_first_ball(const E& identity, std::span<const E> gens, unsigned radius, Mul mul,
                                 std::size_t budget = kDefaultBfsBudget) {
  Ball<E, Hash> ball;
  ball.distance.emplace(identity, 0);
  ball.sphere_sizes.push_back(1);
  std::vector<E> frontier{identity};
  for (unsigned r = 1; r <= radius; ++r) {
    std::vector<E> next;
    for (const auto& x : frontier) {
      for (const auto& s : gens) {
        E y = mul(x, s);
        if (ball.distance.find(y) != ball.distance.end()) continue;
        if (ball.distance.size() >= budget) throw BfsBudgetExceeded(r - 1, budget);
        ball.distance.emplace(y, r);
        next.push_back(std::move(y));
      }
    }
    ball.sphere_sizes.push_back(next.size());
    frontier = std::move(next);
  }
  return ball;
}

template <class G>
using ElementBall = Ball<Element<G>, typename Element<G>::Hash>;

template <class G>
ElementBall<G> bfs_ball(const G& g, const GeneratingSet<G>& gens, unsigned radius,
                        std::size_t budget = kDefaultBfsBudget) {
  return breadth_first_ball<Element<G>, typename Element<G>::Hash>(
      identity_element(g), std::span<const Element<G>>(gens.elements), radius,
      [&](const Element<G>& a, const Element<G>& b) { return compose(g, a, b); }, budget);
}

// |B(0)|, ..., |B(radius)|.
template <class G>
std::vector<std::size_t> ball_growth(const G& g, const GeneratingSet<G>& gens, unsigned radius,
                                     std::size_t budget = kDefaultBfsBudget) {
  return bfs_ball(g, gens, radius, budget).ball_sizes();
}

}  // namespace lampshuffler
