#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "phyloclust/distance.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/parallel.hpp"
#include "phyloclust/tree.hpp"

namespace phyloclust {

/// Fixed-width bitset over a tip index space.
class TipSet {
 public:
  TipSet() = default;
  explicit TipSet(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  std::size_t bits() const { return bits_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  TipSet& operator|=(const TipSet& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
    return *this;
  }

  TipSet complement() const {
    TipSet out(bits_);
    for (std::size_t k = 0; k < words_.size(); ++k) out.words_[k] = ~words_[k];
    if (bits_ % 64) out.words_.back() &= (std::uint64_t{1} << (bits_ % 64)) - 1;
    return out;
  }

  bool intersects(const TipSet& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k]) return true;
    return false;
  }

  bool subset_of(const TipSet& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < words_.size(); ++k)
      for (std::uint64_t w = words_[k]; w; w &= w - 1) out.push_back(64 * k + std::countr_zero(w));
    return out;
  }

  std::size_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ bits_;
    for (auto w : words_) h = (h ^ w) * 0x100000001b3ULL + (h >> 29);
    return static_cast<std::size_t>(h);
  }

  friend bool operator==(const TipSet&, const TipSet&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

struct TipSetHash {
  std::size_t operator()(const TipSet& s) const { return s.hash(); }
};

struct Clade {
  TipSet tips;
  int node = -1;
};

/// Tip bitset for every node, indexed by node id. `tip_position` maps tip labels to bit positions.
inline std::vector<TipSet> node_tipsets(const PhyloTree& tree, const std::unordered_map<std::string, std::size_t>& tip_position) {
  std::vector<TipSet> sets(tree.node_count(), TipSet(tip_position.size()));
  for (int v : tree.postorder()) {
    const auto& node = tree.nodes[v];
    if (node.children.empty()) {
      auto it = tip_position.find(node.label);
      if (it == tip_position.end()) throw Error(ErrorKind::TipSetMismatch, "tip '" + node.label + "' not in reference");
      sets[v].set(it->second);
    } else {
      for (int c : node.children) sets[v] |= sets[c];
    }
  }
  return sets;
}

/// Tip label -> position in the tree's left-to-right tip order.
inline std::unordered_map<std::string, std::size_t> tip_positions(const PhyloTree& tree) {
  std::unordered_map<std::string, std::size_t> out;
  for (const auto& label : tree.tip_labels()) out.emplace(label, out.size());
  return out;
}

/// One clade per internal node, post-order; bit positions follow tree.tips() order.
inline std::vector<Clade> enumerate_clades(const PhyloTree& tree) {
  const auto sets = node_tipsets(tree, tip_positions(tree));
  std::vector<Clade> out;
  for (int v : tree.postorder())
    if (!tree.is_tip(v)) out.push_back({sets[v], v});
  return out;
}

/// Sum of branch lengths along the path between each pair of tips; ids in tree.tips() order.
inline DistanceMatrix patristic_matrix(const PhyloTree& tree) {
  const auto tips = tree.tips();
  if (tips.size() < 2) throw Error(ErrorKind::DegenerateTree, "patristic matrix needs at least 2 tips");
  std::vector<std::size_t> position(tree.node_count(), 0);
  for (std::size_t i = 0; i < tips.size(); ++i) position[tips[i]] = i;
  DistanceMatrix m(tree.tip_labels(), DistanceKind::Patristic);

  // below[v]: (tip position, distance from v) for every tip under v.
  std::vector<std::vector<std::pair<std::size_t, double>>> below(tree.node_count());
  for (int v : tree.postorder()) {
    const auto& node = tree.nodes[v];
    if (node.children.empty()) {
      below[v].emplace_back(position[v], 0.0);
      continue;
    }
    auto& acc = below[v];
    for (int c : node.children) {
      auto& list = below[c];
      const double len = tree.nodes[c].length;
      for (auto& entry : list) entry.second += len;
      for (const auto& [a, da] : acc)
        for (const auto& [b, db] : list) m.set(a, b, da + db);
      if (acc.empty())
        acc = std::move(list);
      else
        acc.insert(acc.end(), list.begin(), list.end());
      std::vector<std::pair<std::size_t, double>>().swap(list);
    }
  }
  return m;
}

namespace detail {

/// Copy in pre-order with unary nodes spliced out. A unary root hands the root to its child;
/// an interior unary node merges its branch into the child's, keeping whichever support is present.
inline PhyloTree compact_tree(const PhyloTree& in) {
  PhyloTree out;
  out.missing_lengths = in.missing_lengths;
  out.support_scale = in.support_scale;
  if (in.root < 0) return out;
  int start = in.root;
  while (in.nodes[start].children.size() == 1) start = in.nodes[start].children.front();

  struct Item {
    int source;
    int parent;
    double length;
    std::optional<double> support;
  };
  std::vector<Item> stack{{start, -1, 0.0, std::nullopt}};
  while (!stack.empty()) {
    Item item = stack.back();
    stack.pop_back();
    int v = item.source;
    double length = item.length;
    std::optional<double> support = item.support;
    while (in.nodes[v].children.size() == 1) {
      const int child = in.nodes[v].children.front();
      length += in.nodes[child].length;
      if (in.nodes[child].support) support = in.nodes[child].support;
      v = child;
    }
    const int id = out.add_node(item.parent, item.parent < 0 ? 0.0 : length, in.nodes[v].label);
    out.nodes[id].support = item.parent < 0 ? in.nodes[v].support : support;
    const auto& ch = in.nodes[v].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it)
      stack.push_back({*it, id, in.nodes[*it].length, in.nodes[*it].support});
  }
  return out;
}

}  // namespace detail

/// Re-roots on the edge separating the outgroup from the ingroup, then drops the outgroup.
/// Branch lengths and per-bipartition supports are carried over.
inline PhyloTree root_at_outgroup(const PhyloTree& tree, const std::vector<std::string>& outgroup) {
  const auto positions = tip_positions(tree);
  if (outgroup.empty()) throw Error(ErrorKind::InvalidArgument, "empty outgroup");
  TipSet out_set(positions.size());
  for (const auto& id : outgroup) {
    auto it = positions.find(id);
    if (it == positions.end()) throw Error(ErrorKind::OutgroupMissing, id);
    out_set.set(it->second);
  }
  if (out_set.count() == positions.size()) throw Error(ErrorKind::InvalidArgument, "outgroup covers every tip");
  const TipSet in_set = out_set.complement();
  const auto sets = node_tipsets(tree, positions);

  for (int v : tree.preorder()) {
    if (v == tree.root || sets[v] != in_set) continue;
    PhyloTree sub;
    std::vector<std::pair<int, int>> stack{{v, -1}};
    while (!stack.empty()) {
      auto [src, parent] = stack.back();
      stack.pop_back();
      const auto& node = tree.nodes[src];
      const int id = sub.add_node(parent, parent < 0 ? 0.0 : node.length, node.label);
      if (parent >= 0) sub.nodes[id].support = node.support;
      for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.emplace_back(*it, id);
    }
    return detail::compact_tree(sub);
  }

  int cut = -1;
  for (int v : tree.preorder())
    if (v != tree.root && sets[v] == out_set) {
      cut = v;
      break;
    }
  if (cut < 0) throw Error(ErrorKind::OutgroupNotMonophyletic, "no edge separates the outgroup");

  // Walk the unrooted tree from the cut edge's inner end, never crossing back into the outgroup.
  // An edge keeps the length and support stored on its original lower endpoint.
  PhyloTree rerooted;
  struct Item {
    int source;
    int from;
    int parent;
    double length;
    std::optional<double> support;
  };
  std::vector<Item> stack{{tree.nodes[cut].parent, cut, -1, 0.0, std::nullopt}};
  while (!stack.empty()) {
    Item item = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes[item.source];
    const int id = rerooted.add_node(item.parent, item.length, node.label);
    rerooted.nodes[id].support = item.support;
    std::vector<Item> next;
    for (int c : node.children)
      if (c != item.from) next.push_back({c, item.source, id, tree.nodes[c].length, tree.nodes[c].support});
    if (node.parent >= 0 && node.parent != item.from)
      next.push_back({node.parent, item.source, id, node.length, node.support});
    for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(*it);
  }
  rerooted.missing_lengths = tree.missing_lengths;
  rerooted.support_scale = tree.support_scale;
  return detail::compact_tree(rerooted);
}

namespace detail {

inline void check_same_tips(const std::unordered_map<std::string, std::size_t>& positions, const PhyloTree& t) {
  const auto labels = t.tip_labels();
  if (labels.size() != positions.size())
    throw Error(ErrorKind::TipSetMismatch, "tree has " + std::to_string(labels.size()) + " tips, expected " +
                                               std::to_string(positions.size()));
  for (const auto& l : labels)
    if (!positions.count(l)) throw Error(ErrorKind::TipSetMismatch, "unexpected tip '" + l + "'");
}

}  // namespace detail

/// Support of each reference clade = fraction of sample trees holding the identical rooted tip set.
inline PhyloTree annotate_support(const PhyloTree& reference, const std::vector<PhyloTree>& sample, unsigned threads = 0) {
  if (sample.empty()) throw Error(ErrorKind::EmptyList, "empty tree sample");
  const auto positions = tip_positions(reference);
  for (const auto& t : sample) detail::check_same_tips(positions, t);
  const auto ref_sets = node_tipsets(reference, positions);

  std::vector<int> internal;
  for (int v : reference.postorder())
    if (!reference.is_tip(v)) internal.push_back(v);
  std::vector<std::size_t> hits(reference.node_count(), 0);
  std::vector<std::vector<std::size_t>> per_tree(sample.size());
  parallel_for(
      sample.size(), threads,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
          const auto sets = node_tipsets(sample[k], positions);
          std::unordered_set<TipSet, TipSetHash> clades;
          for (std::size_t v = 0; v < sets.size(); ++v)
            if (!sample[k].is_tip(static_cast<int>(v))) clades.insert(sets[v]);
          for (int v : internal)
            if (clades.count(ref_sets[v])) per_tree[k].push_back(static_cast<std::size_t>(v));
        }
      },
      1);
  for (const auto& list : per_tree)
    for (auto v : list) ++hits[v];
  PhyloTree out = reference;
  for (int v : internal) out.nodes[v].support = static_cast<double>(hits[v]) / static_cast<double>(sample.size());
  out.support_scale = SupportScale::Proportion;
  return out;
}

/// Clades found in more than half the sample. Support = frequency, branch length = mean over the
/// trees holding the clade. Children are ordered by their smallest tip position in the first tree.
inline PhyloTree majority_consensus(const std::vector<PhyloTree>& sample) {
  if (sample.empty()) throw Error(ErrorKind::EmptyList, "empty tree sample");
  const auto positions = tip_positions(sample.front());
  const auto labels = sample.front().tip_labels();
  struct Tally {
    std::size_t count = 0;
    double length_sum = 0.0;
  };
  std::unordered_map<TipSet, Tally, TipSetHash> tally;
  std::vector<TipSet> first_seen;  // insertion order, for determinism
  for (const auto& t : sample) {
    detail::check_same_tips(positions, t);
    const auto sets = node_tipsets(t, positions);
    for (int v : t.preorder()) {
      auto [it, fresh] = tally.try_emplace(sets[v]);
      if (fresh) first_seen.push_back(sets[v]);
      ++it->second.count;
      it->second.length_sum += v == t.root ? 0.0 : t.nodes[v].length;
    }
  }
  const std::size_t n_trees = sample.size();
  std::vector<TipSet> kept;
  for (const auto& s : first_seen)
    if (2 * tally[s].count > n_trees) kept.push_back(s);
  auto first_member = [](const TipSet& s) { return s.members().front(); };
  std::stable_sort(kept.begin(), kept.end(), [&](const TipSet& a, const TipSet& b) {
    if (a.count() != b.count()) return a.count() > b.count();
    return first_member(a) < first_member(b);
  });

  // Attach each clade under the deepest already-placed clade containing it.
  PhyloTree draft;
  std::vector<int> deepest(labels.size(), -1);
  for (const auto& s : kept) {
    const auto members = s.members();
    const int parent = deepest[members.front()];
    const Tally& t = tally[s];
    const double mean_length = parent < 0 ? 0.0 : t.length_sum / static_cast<double>(t.count);
    const int id = draft.add_node(parent, mean_length, s.count() == 1 ? labels[members.front()] : std::string{});
    if (s.count() > 1) draft.nodes[id].support = static_cast<double>(t.count) / static_cast<double>(n_trees);
    for (auto m : members) deepest[m] = id;
  }
  std::vector<std::size_t> min_tip(draft.node_count(), labels.size());
  for (int v : draft.postorder()) {
    if (draft.is_tip(v)) min_tip[v] = positions.at(draft.nodes[v].label);
    for (int c : draft.nodes[v].children) min_tip[v] = std::min(min_tip[v], min_tip[c]);
  }
  for (auto& node : draft.nodes)
    std::sort(node.children.begin(), node.children.end(), [&](int a, int b) { return min_tip[a] < min_tip[b]; });
  draft.support_scale = SupportScale::Proportion;
  return detail::compact_tree(draft);
}

}  // namespace phyloclust
