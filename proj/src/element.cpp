#include "lampshuffler/element.hpp"

#include <algorithm>

namespace lampshuffler {

FinPerm<IntLine> cycle_perm(std::int64_t n) {
  std::vector<FinPerm<IntLine>::Entry> entries;
  if (n <= 1) return {};
  entries.reserve(static_cast<std::size_t>(n));
  for (std::int64_t x = 0; x < n - 1; ++x) entries.emplace_back(x, x + 1);
  entries.emplace_back(n - 1, 0);
  return FinPerm<IntLine>::from_sorted_unchecked(std::move(entries));
}

std::string to_string(StdGenerator s) {
  switch (s) {
    case StdGenerator::Right: return "t";
    case StdGenerator::Left: return "T";
    case StdGenerator::SwapRight: return "d";
    case StdGenerator::SwapLeft: return "D";
  }
  return "?";
}

Element<IntLine> generator_element(StdGenerator s) {
  IntLine z;
  switch (s) {
    case StdGenerator::Right: return translation(z, 1);
    case StdGenerator::Left: return translation(z, -1);
    case StdGenerator::SwapRight: return {delta(z, std::int64_t{1}), 0};
    case StdGenerator::SwapLeft: return {delta(z, std::int64_t{-1}), 0};
  }
  return identity_element(z);
}

namespace {

// Counts, for each index i, the number of later indices holding a smaller value.
std::vector<std::int64_t> later_smaller_counts(const std::vector<std::int64_t>& ranks) {
  const std::size_t n = ranks.size();
  std::vector<std::int64_t> tree(n + 1, 0), counts(n, 0);
  for (std::size_t k = n; k-- > 0;) {
    std::int64_t c = 0;
    for (std::size_t r = static_cast<std::size_t>(ranks[k]); r > 0; r -= r & (~r + 1)) c += tree[r];
    counts[k] = c;
    for (std::size_t r = static_cast<std::size_t>(ranks[k]) + 1; r <= n; r += r & (~r + 1)) ++tree[r];
  }
  return counts;
}

struct Sweep {
  std::int64_t lo;
  const std::vector<std::int64_t>& values;
  std::int64_t pos;
  std::vector<StdGenerator>* word;

  std::uint64_t run() {
    std::vector<std::int64_t> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) ranks[i] = values[i] - lo;
    const auto counts = later_smaller_counts(ranks);
    std::int64_t cursor = 0;
    std::uint64_t length = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const std::int64_t c = counts[k];
      if (c == 0) continue;
      const std::int64_t i = lo + static_cast<std::int64_t>(k);
      walk(cursor, i + c - 1, length);
      cursor = i + c - 1;
      for (std::int64_t s = 0; s < c; ++s) {
        emit(StdGenerator::SwapRight, length);
        if (s + 1 < c) {
          emit(StdGenerator::Left, length);
          --cursor;
        }
      }
    }
    walk(cursor, pos, length);
    return length;
  }

  void emit(StdGenerator g, std::uint64_t& length) {
    ++length;
    if (word) word->push_back(g);
  }

  void walk(std::int64_t from, std::int64_t to, std::uint64_t& length) {
    if (word) {
      const auto step = to > from ? StdGenerator::Right : StdGenerator::Left;
      for (std::int64_t k = 0; k < (to > from ? to - from : from - to); ++k) word->push_back(step);
    }
    length += abs_u64(to - from);
  }
};

}  // namespace

std::uint64_t sweep_length(std::int64_t lo, const std::vector<std::int64_t>& values, std::int64_t pos) {
  return Sweep{lo, values, pos, nullptr}.run();
}

SweepWord length_upper(const Element<IntLine>& a, bool emit_word) {
  SweepWord out;
  if (a.perm.is_identity()) {
    out.length = abs_u64(a.pos);
    if (emit_word) {
      out.word.assign(out.length, a.pos > 0 ? StdGenerator::Right : StdGenerator::Left);
    }
    return out;
  }
  const auto entries = a.perm.entries();
  const std::int64_t lo = entries.front().first;
  const std::int64_t hi = entries.back().first;
  std::vector<std::int64_t> values(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t x = lo; x <= hi; ++x) values[static_cast<std::size_t>(x - lo)] = x;
  for (const auto& [x, fx] : entries) values[static_cast<std::size_t>(x - lo)] = fx;
  out.length = Sweep{lo, values, a.pos, emit_word ? &out.word : nullptr}.run();
  return out;
}

}  // namespace lampshuffler
