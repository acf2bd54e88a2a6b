#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "phyloclust/community.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/text.hpp"
#include "phyloclust/threshold.hpp"

namespace phyloclust {

namespace detail {

inline void require_same_ids(const Partition& p, const Partition& q) {
  if (p.size() != q.size())
    throw Error(ErrorKind::IdSetMismatch, std::to_string(p.size()) + " vs " + std::to_string(q.size()) + " ids");
  for (const auto& id : p.ids())
    if (!q.contains(id)) throw Error(ErrorKind::IdSetMismatch, "'" + id + "' missing from second partition");
}

inline std::uint64_t choose2(std::uint64_t k) { return k < 2 ? 0 : k * (k - 1) / 2; }

}  // namespace detail

/// Hubert-Arabie adjusted Rand index from the contingency table of the two labelings.
/// When both partitions are trivial (expected index equals its maximum) the result is 1 for
/// identical groupings and 0 otherwise.
inline double adjusted_rand_index(const Partition& p, const Partition& q) {
  detail::require_same_ids(p, q);
  const auto& ids = p.ids();
  const auto a = p.membership(ids);
  const auto b = q.membership(ids);
  std::unordered_map<std::uint64_t, std::uint64_t> cells;
  std::unordered_map<int, std::uint64_t> rows, cols;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ++cells[(static_cast<std::uint64_t>(a[i]) << 32) | static_cast<std::uint32_t>(b[i])];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  std::uint64_t sum_cells = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [k, v] : cells) sum_cells += detail::choose2(v);
  for (const auto& [k, v] : rows) sum_rows += detail::choose2(v);
  for (const auto& [k, v] : cols) sum_cols += detail::choose2(v);
  const std::uint64_t pairs = detail::choose2(ids.size());
  // M == E  <=>  (sum_rows + sum_cols) * pairs == 2 * sum_rows * sum_cols, checked exactly.
  using wide = unsigned __int128;
  if (pairs == 0 || static_cast<wide>(sum_rows + sum_cols) * pairs == static_cast<wide>(2) * sum_rows * sum_cols)
    return a == b ? 1.0 : 0.0;
  const long double expected = static_cast<long double>(sum_rows) * sum_cols / pairs;
  const long double maximum = 0.5L * (static_cast<long double>(sum_rows) + sum_cols);
  return static_cast<double>((sum_cells - expected) / (maximum - expected));
}

/// A reference clustering known on a subset R of the universe.
struct ReferenceSet {
  Partition reference;
  std::vector<std::string> universe;

  void validate() const {
    std::unordered_set<std::string> all(universe.begin(), universe.end());
    if (all.size() != universe.size()) throw Error(ErrorKind::DuplicateId, "universe has repeated ids");
    for (const auto& id : reference.ids())
      if (!all.count(id)) throw Error(ErrorKind::IdSetMismatch, "reference id '" + id + "' not in universe");
  }
};

/// Returns (transformed candidate, expanded gold standard) over ref.universe.
/// Candidate clusters touching R are numbered 1..K_c by first appearance in universe order and every
/// id sharing no cluster with R gets K_c+1. The gold standard numbers reference clusters 1..K_r and
/// gives K_r+1 to ids outside R.
inline std::pair<Partition, Partition> partial_gold_transform(const Partition& candidate, const ReferenceSet& ref) {
  ref.validate();
  for (const auto& id : ref.universe)
    if (!candidate.contains(id)) throw Error(ErrorKind::IdSetMismatch, "candidate lacks '" + id + "'");
  if (candidate.size() != ref.universe.size())
    throw Error(ErrorKind::IdSetMismatch, "candidate covers ids outside the universe");

  std::unordered_set<std::string> touching;
  for (const auto& id : ref.reference.ids()) touching.insert(candidate.label_of(id));
  std::unordered_map<std::string, int> cand_code;
  for (const auto& id : ref.universe) {
    const auto& label = candidate.label_of(id);
    if (touching.count(label)) cand_code.try_emplace(label, static_cast<int>(cand_code.size()) + 1);
  }
  const int outside_c = static_cast<int>(cand_code.size()) + 1;

  std::unordered_map<std::string, int> ref_code;
  for (const auto& id : ref.universe)
    if (ref.reference.contains(id))
      ref_code.try_emplace(ref.reference.label_of(id), static_cast<int>(ref_code.size()) + 1);
  const int outside_r = static_cast<int>(ref_code.size()) + 1;

  Partition transformed, gold;
  for (const auto& id : ref.universe) {
    const auto& label = candidate.label_of(id);
    auto it = cand_code.find(label);
    transformed.assign(id, std::to_string(it == cand_code.end() ? outside_c : it->second));
    gold.assign(id, std::to_string(ref.reference.contains(id) ? ref_code.at(ref.reference.label_of(id)) : outside_r));
  }
  return {std::move(transformed), std::move(gold)};
}

inline double partial_gold_ari(const Partition& candidate, const ReferenceSet& ref) {
  const auto [transformed, gold] = partial_gold_transform(candidate, ref);
  return adjusted_rand_index(transformed, gold);
}

struct SweepCell {
  ClusterCriteria criteria;
  double ari = 0.0;
};

struct SweepResult {
  ClusterCriteria best;
  double best_ari = -std::numeric_limits<double>::infinity();
  std::vector<SweepCell> grid;  // support-major, in the order given
};

inline constexpr double kSweepTieTolerance = 1e-12;

/// Scores every (support, distance) cell against the partial gold standard. The best cell has the
/// highest ARI; near-ties (within kSweepTieTolerance) go to the smaller distance, then the larger support.
inline SweepResult cutpoint_sweep(const std::function<Partition(const ClusterCriteria&)>& runner,
                                  std::span<const double> support_grid, std::span<const double> distance_grid,
                                  DistanceStatistic statistic, const ReferenceSet& ref) {
  if (support_grid.empty() || distance_grid.empty()) throw Error(ErrorKind::EmptyList, "empty sweep grid");
  SweepResult result;
  bool have = false;
  for (double s : support_grid)
    for (double d : distance_grid) {
      const ClusterCriteria c{s, d, statistic};
      const double ari = partial_gold_ari(runner(c), ref);
      result.grid.push_back({c, ari});
      bool better = false;
      if (!have || ari > result.best_ari + kSweepTieTolerance) {
        better = true;
      } else if (std::abs(ari - result.best_ari) <= kSweepTieTolerance) {
        better = d < result.best.distance_max || (d == result.best.distance_max && s > result.best.support_min);
      }
      if (better) {
        result.best = c;
        result.best_ari = ari;
        have = true;
      }
    }
  return result;
}

/// Average-linkage agglomeration on a dissimilarity matrix; returns the dendrogram's leaf order.
/// Ties merge the lexicographically smallest pair; the merged block with the smaller first index goes left.
inline std::vector<std::size_t> average_linkage_order(std::vector<double> dist, std::size_t n) {
  if (n == 0) return {};
  std::vector<std::vector<std::size_t>> leaves(n);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) leaves[i] = {i};
  std::vector<std::size_t> nearest(n, n);
  auto refresh = [&](std::size_t i) {
    nearest[i] = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (nearest[i] == n || dist[i * n + j] < dist[i * n + nearest[i]]) nearest[i] = j;
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);
  for (std::size_t round = 1; round < n; ++round) {
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nearest[i] == n) continue;
      const std::size_t j = nearest[i];
      const std::size_t lo = std::min(i, j), hi = std::max(i, j);
      if (bi == n || dist[lo * n + hi] < dist[bi * n + bj] ||
          (dist[lo * n + hi] == dist[bi * n + bj] && std::make_pair(lo, hi) < std::make_pair(bi, bj))) {
        bi = lo;
        bj = hi;
      }
    }
    const double sa = static_cast<double>(size[bi]), sb = static_cast<double>(size[bj]);
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == bi || x == bj) continue;
      const double d = (sa * dist[bi * n + x] + sb * dist[bj * n + x]) / (sa + sb);
      dist[bi * n + x] = dist[x * n + bi] = d;
    }
    active[bj] = false;
    size[bi] += size[bj];
    leaves[bi].insert(leaves[bi].end(), leaves[bj].begin(), leaves[bj].end());
    leaves[bj].clear();
    refresh(bi);
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == bi) continue;
      if (nearest[x] == bj || nearest[x] == bi) {
        refresh(x);
      } else if (dist[x * n + bi] < dist[x * n + nearest[x]] ||
                 (dist[x * n + bi] == dist[x * n + nearest[x]] && bi < nearest[x])) {
        nearest[x] = bi;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) return leaves[i];
  return {};
}

struct MethodCocluster {
  WeightedGraph frequency;        // rows/cols follow `ids`
  std::vector<std::string> ids;   // non-singleton in at least one partition, seriated
};

/// Fraction of partitions co-clustering each pair, restricted to ids that are non-singletons in at
/// least one partition, rows ordered by average linkage on 1 - frequency.
inline MethodCocluster method_cocluster_matrix(std::span<const Partition> partitions, std::span<const std::string> ids) {
  if (partitions.empty()) throw Error(ErrorKind::EmptyList, "no partitions");
  std::vector<std::vector<int>> codes;
  std::vector<bool> keep(ids.size(), false);
  for (const auto& p : partitions) {
    if (p.size() != ids.size()) throw Error(ErrorKind::IdSetMismatch, "partition does not cover the id list");
    for (const auto& id : ids)
      if (!p.contains(id)) throw Error(ErrorKind::IdSetMismatch, "'" + id + "' missing from a partition");
    codes.push_back(p.membership(ids));
    std::unordered_map<int, std::size_t> count;
    for (int c : codes.back()) ++count[c];
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (count[codes.back()[i]] > 1) keep[i] = true;
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (keep[i]) kept.push_back(i);
  const std::size_t k = kept.size();
  const double methods = static_cast<double>(partitions.size());
  std::vector<double> freq(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    freq[a * k + a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      std::size_t together = 0;
      for (const auto& c : codes) together += c[kept[a]] == c[kept[b]] ? 1 : 0;
      freq[a * k + b] = freq[b * k + a] = static_cast<double>(together) / methods;
    }
  }
  std::vector<double> dissimilarity(k * k);
  for (std::size_t x = 0; x < k * k; ++x) dissimilarity[x] = 1.0 - freq[x];
  const auto order = average_linkage_order(std::move(dissimilarity), k);

  MethodCocluster out;
  out.frequency = WeightedGraph(k);
  for (std::size_t a = 0; a < k; ++a) {
    out.ids.push_back(ids[kept[order[a]]]);
    for (std::size_t b = a + 1; b < k; ++b) out.frequency.set(a, b, freq[order[a] * k + order[b]]);
  }
  return out;
}

struct PartitionSummary {
  double mean_size = 0.0;
  double mean_size_no_singletons = 0.0;
  double median_size_no_singletons = 0.0;
  std::size_t max_size = 0;
  std::size_t num_singletons = 0;
  std::size_t num_clusters_ge2 = 0;
};

inline PartitionSummary partition_summary(const Partition& p) {
  if (p.empty()) throw Error(ErrorKind::EmptyPartition, "no ids");
  const auto sizes = p.cluster_sizes();
  PartitionSummary s;
  std::vector<std::size_t> multi;
  for (auto k : sizes) {
    s.max_size = std::max(s.max_size, k);
    if (k == 1)
      ++s.num_singletons;
    else
      multi.push_back(k);
  }
  s.num_clusters_ge2 = multi.size();
  s.mean_size = static_cast<double>(p.size()) / static_cast<double>(sizes.size());
  if (!multi.empty()) {
    std::sort(multi.begin(), multi.end());
    const double total = static_cast<double>(std::accumulate(multi.begin(), multi.end(), std::size_t{0}));
    s.mean_size_no_singletons = total / static_cast<double>(multi.size());
    const std::size_t mid = multi.size() / 2;
    s.median_size_no_singletons = multi.size() % 2 ? static_cast<double>(multi[mid])
                                                   : 0.5 * static_cast<double>(multi[mid - 1] + multi[mid]);
  }
  return s;
}

/// Cluster size -> number of clusters of that size.
inline std::map<std::size_t, std::size_t> cluster_size_distribution(const Partition& p) {
  std::map<std::size_t, std::size_t> out;
  for (auto k : p.cluster_sizes()) ++out[k];
  return out;
}

}  // namespace phyloclust
