#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "phyloclust/distance.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/parallel.hpp"
#include "phyloclust/partition.hpp"

namespace phyloclust {

/// Largest-gap clustering: each sequence befriends the neighbours that sit before the widest jump
/// in its own sorted distance row; clusters are the connected components of friendship.
///
/// This is a re-implementation driven by the published tuning constant (the fraction of each
/// sorted row searched for the widest gap), not a port of the original library.
struct GapConfig {
  double search_quantile = 0.90;

  void validate() const {
    if (!(search_quantile > 0.0 && search_quantile <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "gap search quantile must lie in (0,1]");
  }
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root wins, so the final forest does not depend on union order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Indices befriended by row i. Ties between equal distances keep index order; the widest gap is
/// searched among the first ceil(quantile*(n-1)) sorted entries and ties go to the earliest gap.
/// A zero widest gap yields no friends. When the range holds fewer than two entries no gap exists
/// and the nearest neighbour is returned (for n = 2, the other sequence).
inline std::vector<std::size_t> friend_set(std::size_t i, const DistanceMatrix& d, const GapConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = d.size();
  if (i >= n) throw Error(ErrorKind::InvalidArgument, "row index out of range");
  std::vector<std::pair<double, std::size_t>> row;
  row.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    if (!d.defined(i, j))
      throw Error(ErrorKind::UndefinedDistance, "(" + d.ids()[i] + ", " + d.ids()[j] + ")");
    row.emplace_back(d(i, j), j);
  }
  if (row.empty()) return {};
  std::sort(row.begin(), row.end());

  const auto searched = std::min<std::size_t>(
      row.size(), static_cast<std::size_t>(std::ceil(cfg.search_quantile * static_cast<double>(row.size()) - 1e-9)));
  std::size_t cut = 0;
  if (searched < 2) {
    cut = 1;
  } else {
    double widest = 0.0;
    for (std::size_t j = 1; j < searched; ++j) {
      const double gap = row[j].first - row[j - 1].first;
      if (gap > widest) {
        widest = gap;
        cut = j;
      }
    }
  }
  std::vector<std::size_t> friends;
  for (std::size_t k = 0; k < cut; ++k) friends.push_back(row[k].second);
  return friends;
}

/// Connected components of the symmetric closure of friend_set over all rows.
inline Partition gap_cluster(const DistanceMatrix& d, const GapConfig& cfg = {}, unsigned threads = 0) {
  cfg.validate();
  const std::size_t n = d.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "gap clustering needs at least 2 sequences");
  std::vector<std::vector<std::size_t>> friends(n);
  parallel_for(
      n, threads,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) friends[i] = friend_set(i, d, cfg);
      },
      16);
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : friends[i]) sets.unite(i, j);
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = sets.find(i);
  return Partition::from_membership(std::span<const std::string>(d.ids()), std::span<const std::size_t>(root));
}

}  // namespace phyloclust
