#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "phyloclust/error.hpp"
#include "phyloclust/gap.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

/// Dense symmetric weight matrix with zero diagonal.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  explicit WeightedGraph(std::size_t n) : n_(n), w_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double w) {
    if (i == j) throw Error(ErrorKind::InvalidArgument, "self-loops are not stored");
    w_[i * n_ + j] = w;
    w_[j * n_ + i] = w;
  }

  double degree(std::size_t i) const {
    double d = 0.0;
    for (std::size_t j = 0; j < n_; ++j) d += w_[i * n_ + j];
    return d;
  }

  double total_weight() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) m += w_[i * n_ + j];
    return m;
  }

  const std::vector<double>& data() const { return w_; }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

/// 1 between co-clustered ids, 0 elsewhere, rows in `id_order`.
inline WeightedGraph partition_adjacency(const Partition& p, std::span<const std::string> id_order) {
  for (const auto& id : id_order)
    if (!p.contains(id)) throw Error(ErrorKind::UnassignedId, id);
  const auto codes = p.membership(id_order);
  WeightedGraph g(id_order.size());
  for (std::size_t i = 0; i < codes.size(); ++i)
    for (std::size_t j = i + 1; j < codes.size(); ++j)
      if (codes[i] == codes[j]) g.set(i, j, 1.0);
  return g;
}

inline WeightedGraph average_adjacency(std::span<const WeightedGraph> graphs) {
  if (graphs.empty()) throw Error(ErrorKind::EmptyList, "no graphs to average");
  const std::size_t n = graphs.front().size();
  std::vector<double> sum(n * n, 0.0);
  for (const auto& g : graphs) {
    if (g.size() != n) throw Error(ErrorKind::SizeMismatch, "graphs differ in vertex count");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g.data()[k];
  }
  WeightedGraph out(n);
  const double count = static_cast<double>(graphs.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.set(i, j, sum[i * n + j] / count);
  return out;
}

/// Newman modularity Q = sum_c (e_c/m - (d_c/2m)^2) over the stored (loop-free) weights; 0 when m = 0.
inline double modularity(const WeightedGraph& g, std::span<const int> membership) {
  const double m = g.total_weight();
  if (m <= 0.0) return 0.0;
  const int k = membership.empty() ? 0 : *std::max_element(membership.begin(), membership.end()) + 1;
  std::vector<double> inner(k, 0.0), degree(k, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    degree[membership[i]] += g.degree(i);
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (membership[i] == membership[j]) inner[membership[i]] += g(i, j);
  }
  double q = 0.0;
  for (int c = 0; c < k; ++c) q += inner[c] / m - (degree[c] / (2 * m)) * (degree[c] / (2 * m));
  return q;
}

struct CommunityResult {
  std::vector<int> membership;  // dense codes, numbered by first vertex
  double modularity = 0.0;
};

/// Random-walk agglomerative community detection (walks of length `walk_length`, Ward merging of
/// adjacent communities, dendrogram cut at maximum modularity).
///
/// Each non-isolated vertex carries an implicit self-loop whose weight is the mean weight of its
/// edges; the loop enters the walk only, never the modularity. Isolated vertices stay singletons.
inline CommunityResult walktrap_communities(const WeightedGraph& g, std::size_t walk_length = 4) {
  const std::size_t n = g.size();
  CommunityResult result;
  result.membership.resize(n);
  std::iota(result.membership.begin(), result.membership.end(), 0);
  if (n == 0) return result;
  const double m = g.total_weight();
  if (m <= 0.0) return result;

  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  std::vector<double> walk_degree(n, 0.0), degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && g(i, j) > 0.0) adj[i].emplace_back(j, g(i, j));
    if (adj[i].empty()) continue;
    degree[i] = g.degree(i);
    const double loop = degree[i] / static_cast<double>(adj[i].size());
    adj[i].emplace_back(i, loop);
    walk_degree[i] = degree[i] + loop;
  }

  // Walk distributions P^t_{i.}, dense over all vertices.
  auto walk_from = [&](std::size_t start) {
    std::vector<double> p(n, 0.0), next(n, 0.0);
    p[start] = 1.0;
    for (std::size_t step = 0; step < walk_length; ++step) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t u = 0; u < n; ++u) {
        if (p[u] == 0.0) continue;
        const double share = p[u] / walk_degree[u];
        for (const auto& [v, w] : adj[u]) next[v] += share * w;
      }
      p.swap(next);
    }
    return p;
  };

  struct Community {
    std::size_t size = 0;
    std::vector<double> walk;
    std::map<int, double> delta;   // neighbour community -> delta sigma
    std::map<int, double> weight;  // neighbour community -> connecting edge weight
    double degree = 0.0;
    bool alive = false;
  };
  std::vector<Community> comm(n);
  const double vertices = static_cast<double>(n);
  auto distance2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (walk_degree[k] == 0.0) continue;
      const double d = a[k] - b[k];
      r += d * d / walk_degree[k];
    }
    return r;
  };
  auto ward = [&](const Community& a, const Community& b) {
    const double sa = static_cast<double>(a.size), sb = static_cast<double>(b.size);
    return sa * sb / (sa + sb) * distance2(a.walk, b.walk) / vertices;
  };

  for (std::size_t i = 0; i < n; ++i) {
    comm[i].size = 1;
    comm[i].degree = degree[i];
    comm[i].alive = !adj[i].empty();
    if (comm[i].alive) comm[i].walk = walk_from(i);
  }
  std::set<std::tuple<double, int, int>> queue;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, w] : adj[i]) {
      if (j <= i) continue;
      const double ds = ward(comm[i], comm[j]);
      comm[i].delta[static_cast<int>(j)] = ds;
      comm[j].delta[static_cast<int>(i)] = ds;
      comm[i].weight[static_cast<int>(j)] = w;
      comm[j].weight[static_cast<int>(i)] = w;
      queue.emplace(ds, static_cast<int>(i), static_cast<int>(j));
    }

  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) q -= (degree[i] / (2 * m)) * (degree[i] / (2 * m));
  double best_q = q;
  std::size_t best_step = 0;
  std::vector<std::pair<int, int>> merges;

  while (!queue.empty()) {
    const auto [ds_ab, a, b] = *queue.begin();
    const int c = static_cast<int>(comm.size());
    comm.emplace_back();
    Community& A = comm[a];
    Community& B = comm[b];
    Community merged;
    merged.size = A.size + B.size;
    merged.degree = A.degree + B.degree;
    merged.alive = true;
    merged.walk.resize(n);
    const double sa = static_cast<double>(A.size), sb = static_cast<double>(B.size);
    for (std::size_t k = 0; k < n; ++k) merged.walk[k] = (sa * A.walk[k] + sb * B.walk[k]) / (sa + sb);
    const double w_ab = A.weight.count(b) ? A.weight.at(b) : 0.0;
    q += w_ab / m - 2.0 * (A.degree / (2 * m)) * (B.degree / (2 * m));

    std::set<int> neighbours;
    for (const auto& [x, ds] : A.delta) neighbours.insert(x);
    for (const auto& [x, ds] : B.delta) neighbours.insert(x);
    neighbours.erase(a);
    neighbours.erase(b);
    for (const auto& [x, ds] : A.delta) queue.erase({ds, std::min(a, x), std::max(a, x)});
    for (const auto& [x, ds] : B.delta) queue.erase({ds, std::min(b, x), std::max(b, x)});
    for (int x : neighbours) {
      Community& X = comm[x];
      const double sx = static_cast<double>(X.size);
      double ds;
      if (A.delta.count(x) && B.delta.count(x))
        ds = ((sa + sx) * A.delta.at(x) + (sb + sx) * B.delta.at(x) - sx * ds_ab) / (sa + sb + sx);
      else
        ds = ward(merged, X);
      const double w = (A.weight.count(x) ? A.weight.at(x) : 0.0) + (B.weight.count(x) ? B.weight.at(x) : 0.0);
      X.delta.erase(a);
      X.delta.erase(b);
      X.weight.erase(a);
      X.weight.erase(b);
      X.delta[c] = ds;
      X.weight[c] = w;
      merged.delta[x] = ds;
      merged.weight[x] = w;
      queue.emplace(ds, x, c);
    }
    A = Community{};
    B = Community{};
    comm[c] = std::move(merged);
    merges.emplace_back(a, b);
    if (q > best_q + 1e-12) {
      best_q = q;
      best_step = merges.size();
    }
  }

  // Replay the merges up to the best cut.
  std::vector<int> owner(comm.size());
  std::iota(owner.begin(), owner.end(), 0);
  DisjointSets sets(n);
  std::vector<std::size_t> representative(comm.size());
  for (std::size_t i = 0; i < n; ++i) representative[i] = i;
  for (std::size_t s = 0; s < best_step; ++s) {
    const auto [a, b] = merges[s];
    sets.unite(representative[a], representative[b]);
    representative[n + s] = representative[a];
  }
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = sets.find(i);
  std::map<std::size_t, int> code;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = code.try_emplace(root[i], static_cast<int>(code.size()));
    result.membership[i] = it->second;
  }
  result.modularity = modularity(g, result.membership);
  return result;
}

/// Communities of a graph whose vertices are `ids`, as a Partition.
inline Partition walktrap_partition(const WeightedGraph& g, std::span<const std::string> ids, std::size_t walk_length = 4) {
  if (ids.size() != g.size()) throw Error(ErrorKind::SizeMismatch, "id list does not match graph size");
  const auto r = walktrap_communities(g, walk_length);
  return Partition::from_membership(ids, std::span<const int>(r.membership));
}

/// `i<TAB>j<TAB>weight` for every positive edge with i<j, after an `i\tj\tweight` header.
inline std::string write_edge_list(const WeightedGraph& g) {
  std::string out = "i\tj\tweight\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (g(i, j) != 0.0) out += std::to_string(i) + '\t' + std::to_string(j) + '\t' + text::format_double(g(i, j)) + '\n';
  return out;
}

inline WeightedGraph parse_edge_list(std::string_view body, std::size_t n) {
  WeightedGraph g(n);
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.rfind("i\t", 0) == 0) continue;
    const auto f = text::split(t, '\t');
    if (f.size() != 3) throw Error(ErrorKind::BadFormat, "edge row needs 3 fields");
    const auto i = text::to_double(f[0]), j = text::to_double(f[1]), w = text::to_double(f[2]);
    if (!i || !j || !w || *i < 0 || *j < 0 || *i >= static_cast<double>(n) || *j >= static_cast<double>(n))
      throw Error(ErrorKind::BadFormat, "bad edge row '" + std::string(t) + "'");
    g.set(static_cast<std::size_t>(*i), static_cast<std::size_t>(*j), *w);
  }
  return g;
}

}  // namespace phyloclust
