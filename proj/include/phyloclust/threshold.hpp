#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phyloclust/alignment.hpp"
#include "phyloclust/distance.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/phylo.hpp"
#include "phyloclust/tree.hpp"

namespace phyloclust {

enum class DistanceStatistic {
  MaxPairwiseP,     // ClusterPicker
  MedianPatristic,  // PhyloPart
  MaxPatristic,
};

inline std::string_view to_string(DistanceStatistic s) {
  switch (s) {
    case DistanceStatistic::MaxPairwiseP: return "max-pairwise-p";
    case DistanceStatistic::MedianPatristic: return "median-patristic";
    case DistanceStatistic::MaxPatristic: return "max-patristic";
  }
  return "?";
}

struct ClusterCriteria {
  double support_min = 0.0;
  double distance_max = 0.0;
  DistanceStatistic statistic = DistanceStatistic::MaxPairwiseP;

  void validate() const {
    if (!(support_min >= 0.0 && support_min <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "support_min must lie in [0,1]");
    if (!(distance_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "distance_max must be positive");
  }

  friend bool operator==(const ClusterCriteria&, const ClusterCriteria&) = default;
};

/// p-distances between the tree's tips (tree.tips() order), read from the alignment.
inline DistanceMatrix tip_p_distances(const PhyloTree& tree, const Alignment& alignment, unsigned threads = 0) {
  Alignment subset;
  for (const auto& label : tree.tip_labels()) {
    const auto k = alignment.find(label);
    if (k == Alignment::npos) throw Error(ErrorKind::MissingSequence, label);
    subset.add(alignment[k]);
  }
  return build_distance_matrix(subset, DistanceKind::PDistance, SaturationPolicy::undefined(), threads);
}

/// Within-clade distance statistic for every node of a fixed tree. Max statistics are computed
/// bottom-up once; medians are computed on first request and cached.
class CladeStatistics {
 public:
  /// `tip_distances` must be indexed in tree.tips() order.
  CladeStatistics(const PhyloTree& tree, DistanceMatrix tip_distances, DistanceStatistic statistic)
      : tree_(&tree), distances_(std::move(tip_distances)), statistic_(statistic) {
    const auto tips = tree.tips();
    if (distances_.size() != tips.size()) throw Error(ErrorKind::SizeMismatch, "distance matrix does not match tree tips");
    tips_under_.resize(tree.node_count());
    std::vector<std::size_t> position(tree.node_count());
    for (std::size_t i = 0; i < tips.size(); ++i) position[tips[i]] = i;
    max_.assign(tree.node_count(), 0.0);
    undefined_.assign(tree.node_count(), false);
    median_.assign(tree.node_count(), std::nullopt);
    for (int v : tree.postorder()) {
      const auto& node = tree.nodes[v];
      auto& acc = tips_under_[v];
      if (node.children.empty()) {
        acc.push_back(position[v]);
        continue;
      }
      double m = 0.0;
      bool undefined = false;
      for (int c : node.children) {
        m = std::max(m, max_[c]);
        undefined = undefined || undefined_[c];
        for (auto a : acc)
          for (auto b : tips_under_[c]) {
            if (!distances_.defined(a, b)) {
              undefined = true;
              continue;
            }
            m = std::max(m, distances_(a, b));
          }
        acc.insert(acc.end(), tips_under_[c].begin(), tips_under_[c].end());
      }
      max_[v] = m;
      undefined_[v] = undefined;
    }
  }

  /// nullopt when an undefined distance lies inside the clade (the clade cannot qualify).
  std::optional<double> value(int node) {
    if (undefined_[node]) return std::nullopt;
    if (statistic_ != DistanceStatistic::MedianPatristic) return max_[node];
    if (!median_[node]) median_[node] = median_within(node);
    return *median_[node];
  }

  const std::vector<std::size_t>& tips_under(int node) const { return tips_under_[node]; }
  const PhyloTree& tree() const { return *tree_; }
  DistanceStatistic statistic() const { return statistic_; }

 private:
  double median_within(int node) const {
    const auto& tips = tips_under_[node];
    if (tips.size() < 2) return 0.0;
    std::vector<double> values;
    values.reserve(tips.size() * (tips.size() - 1) / 2);
    for (std::size_t a = 0; a < tips.size(); ++a)
      for (std::size_t b = a + 1; b < tips.size(); ++b) values.push_back(distances_(tips[a], tips[b]));
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
  }

  const PhyloTree* tree_;
  DistanceMatrix distances_;
  DistanceStatistic statistic_;
  std::vector<std::vector<std::size_t>> tips_under_;
  std::vector<double> max_;
  std::vector<bool> undefined_;
  std::vector<std::optional<double>> median_;
};

/// Builds the statistic table for `statistic`; the alignment is only read for MaxPairwiseP.
inline CladeStatistics make_clade_statistics(const PhyloTree& tree, const Alignment* alignment,
                                             DistanceStatistic statistic, unsigned threads = 0) {
  if (statistic == DistanceStatistic::MaxPairwiseP) {
    if (!alignment) throw Error(ErrorKind::InvalidArgument, "max pairwise p-distance needs an alignment");
    return CladeStatistics(tree, tip_p_distances(tree, *alignment, threads), statistic);
  }
  return CladeStatistics(tree, patristic_matrix(tree), statistic);
}

/// Top-down: the first node on each root-to-tip path that has enough support and a small enough
/// within-clade statistic becomes a cluster. The root counts as fully supported. Leftover tips are singletons.
inline Partition threshold_cluster(CladeStatistics& stats, const ClusterCriteria& criteria) {
  criteria.validate();
  const PhyloTree& tree = stats.tree();
  if (criteria.support_min > 0.0)
    for (int v = 0; v < static_cast<int>(tree.node_count()); ++v)
      if (v != tree.root && !tree.is_tip(v) && !tree.nodes[v].support)
        throw Error(ErrorKind::UnannotatedSupport, "internal node without support value");

  std::vector<std::vector<std::size_t>> groups;
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (tree.is_tip(v)) continue;
    const double support = v == tree.root ? 1.0 : tree.nodes[v].support.value_or(0.0);
    if (support >= criteria.support_min) {
      const auto stat = stats.value(v);
      if (stat && *stat <= criteria.distance_max) {
        groups.push_back(stats.tips_under(v));
        continue;
      }
    }
    const auto& ch = tree.nodes[v].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  const auto labels = tree.tip_labels();
  return Partition::from_groups(labels, groups);
}

inline Partition threshold_cluster(const PhyloTree& tree, const Alignment* alignment, const ClusterCriteria& criteria,
                                   unsigned threads = 0) {
  auto stats = make_clade_statistics(tree, alignment, criteria.statistic, threads);
  return threshold_cluster(stats, criteria);
}

/// Nearest-rank percentile of all pairwise patristic distances.
inline double percentile_cutoff(const PhyloTree& tree, double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) throw Error(ErrorKind::InvalidArgument, "percentile must lie in (0,100)");
  if (tree.tip_count() < 2) throw Error(ErrorKind::DegenerateTree, "fewer than 2 tips");
  std::vector<double> values = patristic_matrix(tree).triangle();
  // The epsilon keeps exact ranks such as 15% of 100 from rounding up to 16.
  const auto rank =
      static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(values.size()) / 100.0 - 1e-9));
  const std::size_t k = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace phyloclust
