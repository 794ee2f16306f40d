#include "lampshuffler/perm_store.hpp"

#include <iterator>

namespace lampshuffler {

std::int64_t IntervalPerm::at(std::int64_t x) const {
  auto it = runs_.upper_bound(x);
  if (it == runs_.begin()) return x;
  --it;
  return x <= it->second.hi ? x + it->second.offset : x;
}

void IntervalPerm::add_stats(const Run& r, int sign) {
  const std::uint64_t len = static_cast<std::uint64_t>(r.hi - r.lo) + 1;
  const std::uint64_t d = len * abs_u64(r.offset);
  if (sign > 0) {
    disp_ += d;
    support_ += len;
  } else {
    disp_ -= d;
    support_ -= len;
  }
}

void IntervalPerm::split_at(std::int64_t x) {
  auto it = runs_.upper_bound(x);
  if (it == runs_.begin()) return;
  --it;
  if (it->first == x || it->second.hi < x) return;
  const Tail right{it->second.hi, it->second.offset};
  it->second.hi = x - 1;
  runs_.emplace_hint(std::next(it), x, right);
}

void IntervalPerm::erase_range(std::int64_t lo, std::int64_t hi) {
  split_at(lo);
  if (hi < INT64_MAX) split_at(hi + 1);
  auto it = runs_.lower_bound(lo);
  while (it != runs_.end() && it->first <= hi) {
    add_stats(Run{it->first, it->second.hi, it->second.offset}, -1);
    it = runs_.erase(it);
  }
}

void IntervalPerm::insert_run(const Run& r) {
  Run merged = r;
  auto next = runs_.upper_bound(r.lo);
  if (next != runs_.begin()) {
    auto prev = std::prev(next);
    if (prev->second.hi + 1 == r.lo && prev->second.offset == r.offset) {
      merged.lo = prev->first;
      add_stats(Run{prev->first, prev->second.hi, prev->second.offset}, -1);
      runs_.erase(prev);
    }
  }
  if (next != runs_.end() && next->first == r.hi + 1 && next->second.offset == r.offset) {
    merged.hi = next->second.hi;
    add_stats(Run{next->first, next->second.hi, next->second.offset}, -1);
    runs_.erase(next);
  }
  runs_.emplace(merged.lo, Tail{merged.hi, merged.offset});
  add_stats(merged, +1);
}

void IntervalPerm::right_compose(std::span<const Run> tau) {
  // Read every new value from the old F before writing anything.
  std::vector<Run> fresh;
  for (const auto& t : tau) {
    if (t.offset == 0) continue;
    // New F(x) = F(x + c) for x in [t.lo, t.hi]; walk the source range.
    const std::int64_t src_lo = checked_add(t.lo, t.offset);
    const std::int64_t src_hi = checked_add(t.hi, t.offset);
    std::int64_t cursor = src_lo;
    auto it = runs_.upper_bound(src_lo);
    if (it != runs_.begin()) {
      auto prev = std::prev(it);
      if (prev->second.hi >= src_lo) it = prev;
    }
    auto emit = [&](std::int64_t a, std::int64_t b, std::int64_t off) {
      const Run r{a - t.offset, b - t.offset, t.offset + off};
      if (!fresh.empty() && fresh.back().hi + 1 == r.lo && fresh.back().offset == r.offset) {
        fresh.back().hi = r.hi;
      } else {
        fresh.push_back(r);
      }
    };
    while (cursor <= src_hi) {
      if (it == runs_.end() || it->first > src_hi) {
        emit(cursor, src_hi, 0);
        break;
      }
      if (it->first > cursor) {
        emit(cursor, it->first - 1, 0);
        cursor = it->first;
      }
      const std::int64_t end = std::min(it->second.hi, src_hi);
      emit(cursor, end, it->second.offset);
      if (end == INT64_MAX) break;
      cursor = end + 1;
      ++it;
    }
  }
  for (const auto& t : tau) {
    if (t.offset != 0) erase_range(t.lo, t.hi);
  }
  for (const auto& r : fresh) {
    if (r.offset != 0) insert_run(r);
  }
}

std::vector<IntervalPerm::Run> IntervalPerm::runs() const {
  std::vector<Run> out;
  out.reserve(runs_.size());
  for (const auto& [lo, t] : runs_) out.push_back({lo, t.hi, t.offset});
  return out;
}

std::vector<IntervalPerm::Run> IntervalPerm::runs_below(std::int64_t bound) const {
  std::vector<Run> out;
  for (const auto& [lo, t] : runs_) {
    if (lo >= bound) break;
    out.push_back({lo, std::min(t.hi, bound - 1), t.offset});
  }
  return out;
}

FinPerm<IntLine> IntervalPerm::to_finperm() const {
  std::vector<FinPerm<IntLine>::Entry> entries;
  entries.reserve(support_);
  for (const auto& [lo, t] : runs_) {
    for (std::int64_t x = lo; x <= t.hi; ++x) entries.emplace_back(x, x + t.offset);
  }
  return FinPerm<IntLine>::from_sorted_unchecked(std::move(entries));
}

IntervalPerm IntervalPerm::from_finperm(const FinPerm<IntLine>& f) {
  IntervalPerm p;
  for (const auto& r : runs_of(f)) p.insert_run(r);
  return p;
}

std::vector<IntervalPerm::Run> runs_of(const FinPerm<IntLine>& f, std::int64_t shift) {
  std::vector<IntervalPerm::Run> out;
  for (const auto& [x, fx] : f.entries()) {
    const std::int64_t lo = checked_add(x, shift);
    const std::int64_t off = fx - x;
    if (!out.empty() && out.back().hi + 1 == lo && out.back().offset == off) {
      out.back().hi = lo;
    } else {
      out.push_back({lo, lo, off});
    }
  }
  return out;
}

}  // namespace lampshuffler
