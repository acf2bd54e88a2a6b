#pragma once

#include <string>
#include <vector>

#include "phyloclust.hpp"

namespace testing_helpers {

using namespace phyloclust;

inline std::string name(std::size_t i) { return "t" + std::to_string(i); }

inline std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(name(i));
  return out;
}

/// Random rooted binary tree with n tips, branch lengths uniform on (0, max_len), supports uniform on [0,1].
inline PhyloTree random_tree(std::size_t n, Rng& rng, double max_len = 0.1) {
  PhyloTree t;
  const int root = t.add_node(-1);
  std::vector<int> open{root};
  std::size_t leaves = 1;
  // Grow by splitting a random leaf until n leaves exist.
  while (leaves < n) {
    const std::size_t k = rng.index(open.size());
    const int v = open[k];
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(k));
    for (int c = 0; c < 2; ++c) open.push_back(t.add_node(v, rng.uniform(0.0, max_len)));
    ++leaves;
  }
  for (std::size_t i = 0; i < open.size(); ++i) t.nodes[open[i]].label = name(i);
  for (std::size_t v = 0; v < t.node_count(); ++v)
    if (!t.is_tip(static_cast<int>(v)) && static_cast<int>(v) != root) t.nodes[v].support = rng.uniform();
  t.support_scale = SupportScale::Proportion;
  return t;
}

inline Partition random_partition(const std::vector<std::string>& ids, std::size_t max_clusters, Rng& rng) {
  std::vector<std::size_t> code(ids.size());
  for (auto& c : code) c = rng.index(max_clusters);
  return Partition::from_membership(ids, code);
}

}  // namespace testing_helpers
