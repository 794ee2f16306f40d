#include "lampshuffler/base_group.hpp"

#include <algorithm>
#include <tuple>

namespace lampshuffler {

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::Z: return "Z";
    case GroupKind::Zd: return "Zd";
    case GroupKind::Free: return "Free";
  }
  return "?";
}

IntLine::Point IntLine::from_json(const json& j) const {
  if (!j.is_number_integer()) throw GroupError("Z point must be an integer, got " + j.dump());
  return j.get<std::int64_t>();
}

Lattice::Lattice(int d) : dim(d) {
  if (d < 1 || d > kMaxLatticeDim) {
    throw GroupError("Zd dimension must lie in [1, " + std::to_string(kMaxLatticeDim) + "], got " +
                     std::to_string(d));
  }
}

std::vector<Lattice::Point> Lattice::generators() const {
  std::vector<Point> gens;
  for (int i = 0; i < dim; ++i) {
    gens.push_back(unit(i, 1));
    gens.push_back(unit(i, -1));
  }
  return gens;
}

json Lattice::to_json(const Point& a) const {
  json j = json::array();
  for (int i = 0; i < dim; ++i) j.push_back(a.c[i]);
  return j;
}

Lattice::Point Lattice::from_json(const json& j) const {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw GroupError("Zd point must be an array of " + std::to_string(dim) + " integers, got " + j.dump());
  }
  Point p;
  for (int i = 0; i < dim; ++i) p.c[i] = j[i].get<std::int64_t>();
  return p;
}

// ---------------------------------------------------------------------------
// WordTrie

WordTrie& WordTrie::instance() {
  static WordTrie trie;
  return trie;
}

WordTrie::WordTrie() : chunks_(new std::atomic<Node*>[kMaxChunks]) {
  for (std::uint32_t i = 0; i < kMaxChunks; ++i) chunks_[i].store(nullptr, std::memory_order_relaxed);
  auto* first = new Node[kChunkSize];
  first[0] = Node{0, 0, 0, 0x243f6a8885a308d3ULL, 0};
  chunks_[0].store(first, std::memory_order_release);
  count_ = 1;
}

static std::uint64_t child_key(std::uint32_t parent, int letter) {
  return (static_cast<std::uint64_t>(parent) << 32) | static_cast<std::uint32_t>(letter);
}

FreeWord WordTrie::append(FreeWord w, int letter) {
  if (letter == 0) throw GroupError("free group letter 0 is not a generator");
  const Node& n = node(w.id);
  if (w.id != 0 && n.letter == -letter) return FreeWord{n.parent};
  const std::uint64_t key = child_key(w.id, letter);
  {
    std::shared_lock lock(mutex_);
    auto it = children_.find(key);
    if (it != children_.end()) return FreeWord{it->second};
  }
  std::unique_lock lock(mutex_);
  auto it = children_.find(key);
  if (it != children_.end()) return FreeWord{it->second};
  const std::uint32_t id = count_;
  const std::uint32_t chunk = id >> kChunkBits;
  if (chunk >= kMaxChunks) throw GroupError("free group word trie exhausted");
  Node* block = chunks_[chunk].load(std::memory_order_acquire);
  if (block == nullptr) {
    block = new Node[kChunkSize];
    chunks_[chunk].store(block, std::memory_order_release);
  }
  const Node& pj = node(n.jump);
  const std::uint32_t jump = n.length - pj.length == pj.length - node(pj.jump).length ? pj.jump : w.id;
  block[id & (kChunkSize - 1)] = Node{w.id, letter, n.length + 1,
                                      mix64(n.hash ^ (static_cast<std::uint64_t>(letter_rank(letter)) * 0x9e3779b97f4a7c15ULL)),
                                      jump};
  ++count_;
  children_.emplace(key, id);
  return FreeWord{id};
}

FreeWord WordTrie::parent(FreeWord w) const { return FreeWord{node(w.id).parent}; }
int WordTrie::last_letter(FreeWord w) const { return node(w.id).letter; }
std::uint32_t WordTrie::length(FreeWord w) const { return node(w.id).length; }
std::uint64_t WordTrie::hash(FreeWord w) const { return node(w.id).hash; }

std::vector<int> WordTrie::letters(FreeWord w) const {
  std::vector<int> out;
  out.reserve(length(w));
  while (w.id != 0) {
    const Node& n = node(w.id);
    out.push_back(n.letter);
    w.id = n.parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

FreeWord WordTrie::from_letters(const std::vector<int>& letters) {
  FreeWord w;
  for (int l : letters) w = append(w, l);
  return w;
}

std::uint32_t WordTrie::ancestor(std::uint32_t id, std::uint32_t len) const {
  while (node(id).length > len) {
    const Node& n = node(id);
    id = node(n.jump).length >= len ? n.jump : n.parent;
  }
  return id;
}

std::pair<FreeWord, FreeWord> WordTrie::below_common_ancestor(FreeWord a, FreeWord b) const {
  // equal lengths give equal jump lengths, so both sides move in lockstep
  while (node(a.id).parent != node(b.id).parent) {
    const Node &na = node(a.id), &nb = node(b.id);
    if (na.jump != nb.jump) {
      a.id = na.jump;
      b.id = nb.jump;
    } else {
      a.id = na.parent;
      b.id = nb.parent;
    }
  }
  return {a, b};
}

int WordTrie::compare(FreeWord a, FreeWord b) const {
  if (a == b) return 0;
  const auto la = length(a), lb = length(b);
  if (la != lb) return la < lb ? -1 : 1;
  // the first differing letters from the root sit just below the common ancestor
  std::tie(a, b) = below_common_ancestor(a, b);
  return letter_rank(node(a.id).letter) < letter_rank(node(b.id).letter) ? -1 : 1;
}

std::size_t WordTrie::size() const {
  std::shared_lock lock(mutex_);
  return count_;
}

// ---------------------------------------------------------------------------
// FreeGroup

FreeGroup::FreeGroup(int k) : rank(k) {
  if (k < 1) throw GroupError("free group rank must be >= 1, got " + std::to_string(k));
}

FreeGroup::Point FreeGroup::mul(Point a, Point b) const {
  auto& trie = WordTrie::instance();
  if (b.id == 0) return a;
  for (int l : trie.letters(b)) a = trie.append(a, l);
  return a;
}

FreeGroup::Point FreeGroup::inv(Point a) const {
  auto& trie = WordTrie::instance();
  FreeWord r;
  while (a.id != 0) {
    r = trie.append(r, -trie.last_letter(a));
    a = trie.parent(a);
  }
  return r;
}

std::uint64_t FreeGroup::distance(Point a, Point b) const {
  // Tree distance: |a| + |b| - 2 |common prefix|.
  auto& trie = WordTrie::instance();
  const std::uint64_t la = trie.length(a), lb = trie.length(b);
  if (la > lb) a = trie.truncate(a, static_cast<std::uint32_t>(lb));
  if (lb > la) b = trie.truncate(b, static_cast<std::uint32_t>(la));
  if (a == b) return la + lb - 2 * std::min(la, lb);
  const auto common = trie.length(trie.parent(trie.below_common_ancestor(a, b).first));
  return la + lb - 2 * std::uint64_t{common};
}

std::vector<FreeGroup::Point> FreeGroup::generators() const {
  std::vector<Point> gens;
  for (int i = 1; i <= rank; ++i) {
    gens.push_back(letter(i));
    gens.push_back(letter(-i));
  }
  return gens;
}

FreeGroup::Point FreeGroup::letter(int l) const {
  if (l == 0 || l > rank || l < -rank) {
    throw GroupError("letter " + std::to_string(l) + " is not a generator of F_" + std::to_string(rank));
  }
  return WordTrie::instance().append(FreeWord{}, l);
}

FreeGroup::Point FreeGroup::word(const std::vector<int>& letters) const {
  FreeWord w;
  for (int l : letters) w = mul(w, letter(l));
  return w;
}

FreeGroup::Point FreeGroup::from_json(const json& j) const {
  if (!j.is_array()) throw GroupError("free group point must be an array of letters, got " + j.dump());
  return word(j.get<std::vector<int>>());
}

// ---------------------------------------------------------------------------
// Dynamic facade

ReducedWord ReducedWord::reduce(const std::vector<int>& letters) {
  ReducedWord w;
  for (int l : letters) {
    if (l == 0) throw GroupError("free group letter 0 is not a generator");
    if (!w.letters.empty() && w.letters.back() == -l) {
      w.letters.pop_back();
    } else {
      w.letters.push_back(l);
    }
  }
  return w;
}

BaseGroupDescriptor BaseGroupDescriptor::from_json(const json& j) {
  BaseGroupDescriptor g;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "Z") {
    g.kind = GroupKind::Z;
  } else if (kind == "Zd") {
    g.kind = GroupKind::Zd;
    g.d = j.at("d").get<int>();
    if (g.d < 1) throw GroupError("Zd descriptor requires d >= 1");
  } else if (kind == "Free") {
    g.kind = GroupKind::Free;
    g.k = j.at("k").get<int>();
    if (g.k < 1) throw GroupError("Free descriptor requires k >= 1");
  } else {
    throw GroupError("unknown group kind '" + kind + "'");
  }
  return g;
}

json BaseGroupDescriptor::to_json() const {
  switch (kind) {
    case GroupKind::Z: return {{"kind", "Z"}};
    case GroupKind::Zd: return {{"kind", "Zd"}, {"d", d}};
    case GroupKind::Free: return {{"kind", "Free"}, {"k", k}};
  }
  return {};
}

std::vector<BasePoint> BaseGroupDescriptor::generators() const {
  std::vector<BasePoint> gens;
  switch (kind) {
    case GroupKind::Z:
      gens = {std::int64_t{1}, std::int64_t{-1}};
      break;
    case GroupKind::Zd:
      for (int i = 0; i < d; ++i) {
        for (std::int64_t s : {1, -1}) {
          IntVec v(d, 0);
          v[i] = s;
          gens.emplace_back(v);
        }
      }
      break;
    case GroupKind::Free:
      for (int i = 1; i <= k; ++i) {
        gens.emplace_back(ReducedWord{{i}});
        gens.emplace_back(ReducedWord{{-i}});
      }
      break;
  }
  return gens;
}

BasePoint BaseGroupDescriptor::identity() const {
  switch (kind) {
    case GroupKind::Z: return std::int64_t{0};
    case GroupKind::Zd: return IntVec(d, 0);
    case GroupKind::Free: return ReducedWord{};
  }
  return std::int64_t{0};
}

bool BaseGroupDescriptor::admits(const BasePoint& p) const {
  switch (kind) {
    case GroupKind::Z: return std::holds_alternative<std::int64_t>(p);
    case GroupKind::Zd: return std::holds_alternative<IntVec>(p) && static_cast<int>(std::get<IntVec>(p).size()) == d;
    case GroupKind::Free: {
      if (!std::holds_alternative<ReducedWord>(p)) return false;
      const auto& w = std::get<ReducedWord>(p).letters;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0 || w[i] > k || w[i] < -k) return false;
        if (i > 0 && w[i] == -w[i - 1]) return false;
      }
      return true;
    }
  }
  return false;
}

static void require(const BasePoint& p, const BaseGroupDescriptor& g) {
  if (!g.admits(p)) {
    throw GroupError("point does not belong to carrier " + g.to_json().dump());
  }
}

BasePoint base_mul(const BasePoint& a, const BasePoint& b, const BaseGroupDescriptor& g) {
  require(a, g);
  require(b, g);
  switch (g.kind) {
    case GroupKind::Z: return checked_add(std::get<std::int64_t>(a), std::get<std::int64_t>(b));
    case GroupKind::Zd: {
      IntVec r(g.d);
      for (int i = 0; i < g.d; ++i) r[i] = checked_add(std::get<IntVec>(a)[i], std::get<IntVec>(b)[i]);
      return r;
    }
    case GroupKind::Free: {
      auto letters = std::get<ReducedWord>(a).letters;
      const auto& rhs = std::get<ReducedWord>(b).letters;
      letters.insert(letters.end(), rhs.begin(), rhs.end());
      return ReducedWord::reduce(letters);
    }
  }
  throw GroupError("unreachable");
}

BasePoint base_inv(const BasePoint& a, const BaseGroupDescriptor& g) {
  require(a, g);
  switch (g.kind) {
    case GroupKind::Z: return checked_neg(std::get<std::int64_t>(a));
    case GroupKind::Zd: {
      IntVec r(g.d);
      for (int i = 0; i < g.d; ++i) r[i] = checked_neg(std::get<IntVec>(a)[i]);
      return r;
    }
    case GroupKind::Free: {
      auto letters = std::get<ReducedWord>(a).letters;
      std::reverse(letters.begin(), letters.end());
      for (int& l : letters) l = -l;
      return ReducedWord{letters};
    }
  }
  throw GroupError("unreachable");
}

std::uint64_t base_norm(const BasePoint& a, const BaseGroupDescriptor& g) {
  require(a, g);
  switch (g.kind) {
    case GroupKind::Z: return abs_u64(std::get<std::int64_t>(a));
    case GroupKind::Zd: {
      std::uint64_t s = 0;
      for (auto v : std::get<IntVec>(a)) s += abs_u64(v);
      return s;
    }
    case GroupKind::Free: return std::get<ReducedWord>(a).letters.size();
  }
  return 0;
}

}  // namespace lampshuffler
