#include "lampshuffler/walk.hpp"

#include <cmath>

namespace lampshuffler {

std::vector<std::uint64_t> geometric_grid(std::uint64_t steps, double ratio, std::span<const std::uint64_t> extra) {
  if (!(ratio > 1.0)) throw WalkError("snapshot ratio must exceed 1");
  std::vector<std::uint64_t> grid{0};
  for (double x = 1.0; x <= static_cast<double>(steps); x *= ratio) {
    grid.push_back(static_cast<std::uint64_t>(std::ceil(x)));
  }
  for (auto e : extra) {
    if (e <= steps) grid.push_back(e);
  }
  grid.push_back(steps);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace detail {

std::optional<std::uint64_t> sweep_length_of(const IntervalPerm& f, std::int64_t pos) {
  if (f.is_identity()) return abs_u64(pos);
  const std::int64_t lo = f.support_min();
  const std::int64_t hi = f.support_max();
  if (static_cast<std::uint64_t>(hi - lo) >= kSweepSpanCap) return std::nullopt;
  std::vector<std::int64_t> values(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t x = lo; x <= hi; ++x) values[static_cast<std::size_t>(x - lo)] = x;
  for (const auto& r : f.runs()) {
    for (std::int64_t x = r.lo; x <= r.hi; ++x) values[static_cast<std::size_t>(x - lo)] = x + r.offset;
  }
  return sweep_length(lo, values, pos);
}

}  // namespace detail

ConfinementCheck check_confinement(const TrajectoryReport<IntLine>& report, double epsilon, double c1, double d,
                                   double d_prime, std::uint64_t n) {
  if (!(epsilon > 0)) throw WalkError("confinement requires epsilon > 0");
  if (!(c1 > 0)) throw WalkError("confinement requires c1 > 0");
  const Checkpoint* cp = nullptr;
  for (const auto& c : report.checkpoints) {
    if (c.n == n) cp = &c;
  }
  if (!cp) throw WalkError("no checkpoint recorded at n = " + std::to_string(n));
  if (report.increment_disp_prefix.size() <= n) throw WalkError("increment displacement prefix is too short");

  ConfinementCheck out;
  out.n = n;
  out.epsilon = epsilon;
  out.c1 = c1;
  out.d = d;
  out.d_prime = d_prime;
  const double nn = static_cast<double>(n);
  const double s = static_cast<double>(cp->pos);
  out.pos_in_band = (c1 - epsilon) * nn <= s && s <= (c1 + epsilon) * nn;

  const double upper = (c1 + 2 * epsilon) * nn;
  out.tail_identity = cp->runs.empty() || static_cast<double>(cp->runs.back().hi) <= upper;

  const auto bound = static_cast<std::int64_t>(std::ceil((c1 - 2 * epsilon) * nn));
  auto below = [bound](const std::vector<IntervalPerm::Run>& runs) {
    std::vector<IntervalPerm::Run> out;
    for (const auto& r : runs) {
      if (r.lo >= bound) break;
      out.push_back({r.lo, std::min(r.hi, bound - 1), r.offset});
    }
    return out;
  };
  out.head_stable = below(cp->runs) == below(report.final_runs);

  const double eps_tilde = 4 * epsilon / (c1 + 2 * epsilon);
  const auto width = static_cast<std::uint64_t>(std::floor(eps_tilde * nn));
  out.window_start = n > width ? n - width : 1;
  const auto& pre = report.increment_disp_prefix;
  out.window_disp = pre[n] - pre[out.window_start - 1];
  out.window_bound = d * eps_tilde * nn;
  out.window_disp_ok = static_cast<double>(out.window_disp) < out.window_bound;

  out.in_qn = out.pos_in_band && out.tail_identity && out.head_stable && out.window_disp_ok;
  return out;
}

}  // namespace lampshuffler
