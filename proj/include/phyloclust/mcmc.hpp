#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phyloclust/alignment.hpp"
#include "phyloclust/community.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/matrix_io.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/rng.hpp"
#include "phyloclust/threshold.hpp"
#include "phyloclust/tree.hpp"

namespace phyloclust {

/// Constants of the sequence-level model. Kept for completeness; the branch-length surrogate
/// below does not read them.
struct ReservedConstants {
  std::array<double, 4> limiting_probabilities{0.38, 0.24, 0.16, 0.21};  // A, T, C, G
  std::array<std::array<double, 4>, 4> rate_matrix{{{-0.8891, 0.0659, 0.1324, 0.6908},
                                                    {0.1047, -0.7205, 0.5477, 0.0681},
                                                    {0.3096, 0.8069, -1.1801, 0.0636},
                                                    {1.2540, 0.0779, 0.0494, -1.3812}}};
  int discrete_states = 20;
  int tpm_samples = 100000;
  int discrete_gamma = 1;
};

struct ChainConfig {
  std::size_t iterations = 220000;
  std::size_t burn_in = 20000;
  std::size_t thin = 200;
  double init_support_min = 0.90;
  double init_distance_max = 0.045;
  double radius = 0.25;
  double concentration_shape = 500.0;
  double concentration_scale = 0.2;
  double cluster_count_rate = 2368.0;
  std::uint64_t seed = 1;
  double length_floor = 1e-9;
  double mu_step_fraction = 0.10;  // of the window width
  double alpha_log_step = 0.1;
  bool walk_moves = true;          // false keeps mu_w, mu_b and alpha fixed
  ReservedConstants reserved;

  void validate() const {
    if (iterations <= burn_in) throw Error(ErrorKind::InvalidArgument, "iterations must exceed burn_in");
    if (thin == 0) throw Error(ErrorKind::InvalidArgument, "thin must be at least 1");
    if (!(radius > 0 && radius < 1)) throw Error(ErrorKind::InvalidArgument, "radius must lie in (0,1)");
    if (!(concentration_shape > 0 && concentration_scale > 0))
      throw Error(ErrorKind::InvalidArgument, "concentration prior must be positive");
    if (!(cluster_count_rate > 0)) throw Error(ErrorKind::InvalidArgument, "cluster count rate must be positive");
    if (!(length_floor > 0)) throw Error(ErrorKind::InvalidArgument, "length floor must be positive");
    if (!(mu_step_fraction > 0) || !(alpha_log_step > 0))
      throw Error(ErrorKind::InvalidArgument, "walk steps must be positive");
  }

  std::size_t retained_count() const { return iterations > burn_in ? (iterations - burn_in) / thin : 0; }
};

/// Centres of the uniform priors on the two mean branch lengths.
struct RateWindows {
  double m_w = 0.0;
  double m_b = 0.0;
  bool within_fallback = false;   // no multi-member initial cluster: smallest-decile mean used
  bool between_fallback = false;  // no edge outside clusters: largest-decile mean used

  double lo_w(double r) const { return m_w * (1 - r); }
  double hi_w(double r) const { return m_w * (1 + r); }
  double lo_b(double r) const { return m_b * (1 - r); }
  double hi_b(double r) const { return m_b * (1 + r); }
};

/// A node flagged as cluster root owns every tip below it. Flags form an antichain covering the tips.
struct ChainState {
  std::vector<char> cluster_root;
  double mu_w = 0.0;
  double mu_b = 0.0;
  double alpha = 100.0;
  RateWindows windows;
};

namespace detail {

struct LogSums {
  std::size_t within_edges = 0;
  double within_sum = 0.0;
  std::size_t clusters = 0;
  double lgamma_sizes = 0.0;
};

/// Per-node quantities of the fixed tree.
class ChainTree {
 public:
  ChainTree(const PhyloTree& tree, double floor) : tree_(tree) {
    tree.validate();
    const std::size_t n = tree.node_count();
    length_.assign(n, 0.0);
    tips_.assign(n, 0);
    below_edges_.assign(n, 0);
    below_sum_.assign(n, 0.0);
    for (int v : tree.postorder()) {
      if (v != tree.root) {
        length_[v] = std::max(tree.nodes[v].length, floor);
        total_sum_ += length_[v];
        ++edges_;
      }
      if (tree.is_tip(v)) tips_[v] = 1;
      for (int c : tree.nodes[v].children) {
        tips_[v] += tips_[c];
        below_edges_[v] += below_edges_[c] + 1;
        below_sum_[v] += below_sum_[c] + length_[c];
      }
    }
    tip_order_ = tree.tips();
  }

  const PhyloTree& tree() const { return tree_; }
  double length(int v) const { return length_[v]; }
  std::size_t tips(int v) const { return tips_[v]; }
  std::size_t below_edges(int v) const { return below_edges_[v]; }
  double below_sum(int v) const { return below_sum_[v]; }
  std::size_t edges() const { return edges_; }
  double total_sum() const { return total_sum_; }
  std::size_t tip_count() const { return tip_order_.size(); }
  const std::vector<int>& tip_order() const { return tip_order_; }

  LogSums sums(const std::vector<char>& root_flag) const {
    LogSums s;
    for (std::size_t v = 0; v < root_flag.size(); ++v) {
      if (!root_flag[v]) continue;
      s.within_edges += below_edges_[v];
      s.within_sum += below_sum_[v];
      ++s.clusters;
      s.lgamma_sizes += std::lgamma(static_cast<double>(tips_[v]));
    }
    return s;
  }

 private:
  const PhyloTree& tree_;
  std::vector<double> length_;
  std::vector<std::size_t> tips_, below_edges_;
  std::vector<double> below_sum_;
  std::size_t edges_ = 0;
  double total_sum_ = 0.0;
  std::vector<int> tip_order_;
};

inline double log_posterior_from(const LogSums& s, const ChainTree& t, const ChainState& st, const ChainConfig& cfg) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto& w = st.windows;
  const double r = cfg.radius;
  if (!(st.mu_w >= w.lo_w(r) && st.mu_w <= w.hi_w(r))) return kNegInf;
  if (!(st.mu_b >= w.lo_b(r) && st.mu_b <= w.hi_b(r))) return kNegInf;
  if (st.mu_w > st.mu_b || !(st.alpha > 0)) return kNegInf;

  const double nw = static_cast<double>(s.within_edges);
  const double nb = static_cast<double>(t.edges() - s.within_edges);
  const double sb = t.total_sum() - s.within_sum;
  double lp = -nw * std::log(st.mu_w) - s.within_sum / st.mu_w - nb * std::log(st.mu_b) - sb / st.mu_b;

  const double n = static_cast<double>(t.tip_count());
  const double k = static_cast<double>(s.clusters);
  lp += k * std::log(st.alpha) + std::lgamma(st.alpha) - std::lgamma(st.alpha + n) + s.lgamma_sizes;

  const double lambda = cfg.cluster_count_rate;
  lp += k * std::log(lambda) - lambda - std::lgamma(k + 1);

  lp += -std::log(w.hi_w(r) - w.lo_w(r)) - std::log(w.hi_b(r) - w.lo_b(r));

  const double a = cfg.concentration_shape, theta = cfg.concentration_scale;
  lp += (a - 1) * std::log(st.alpha) - st.alpha / theta - std::lgamma(a) - a * std::log(theta);
  return lp;
}

/// Insert/erase/uniform-pick in O(1).
class IndexedSet {
 public:
  explicit IndexedSet(std::size_t universe) : pos_(universe, -1) {}
  bool contains(int v) const { return pos_[v] >= 0; }
  std::size_t size() const { return items_.size(); }
  int at(std::size_t k) const { return items_[k]; }

  void set(int v, bool member) {
    if (member == contains(v)) return;
    if (member) {
      pos_[v] = static_cast<int>(items_.size());
      items_.push_back(v);
    } else {
      const int last = items_.back();
      items_[pos_[v]] = last;
      pos_[last] = pos_[v];
      items_.pop_back();
      pos_[v] = -1;
    }
  }

 private:
  std::vector<int> items_;
  std::vector<int> pos_;
};

}  // namespace detail

/// Tips grouped by the cluster root above them, in tree.tips() order.
inline Partition state_partition(const PhyloTree& tree, const std::vector<char>& cluster_root) {
  std::vector<int> owner(tree.node_count(), -1);
  for (int v : tree.preorder()) {
    if (cluster_root[v])
      owner[v] = v;
    else if (v != tree.root)
      owner[v] = owner[tree.nodes[v].parent];
  }
  std::vector<std::string> ids;
  std::vector<int> code;
  for (int v : tree.tips()) {
    if (owner[v] < 0) throw Error(ErrorKind::InvalidArgument, "tip outside every cluster");
    ids.push_back(tree.nodes[v].label);
    code.push_back(owner[v]);
  }
  return Partition::from_membership(ids, code);
}

/// Highest nodes whose tips all share one label of `p`. Clusters that are not clades split into
/// several clade-shaped pieces.
inline std::vector<char> clade_roots_of(const PhyloTree& tree, const Partition& p) {
  std::vector<long> label(tree.node_count(), -2);  // -1 = mixed
  std::unordered_map<std::string, long> code;
  for (int v : tree.postorder()) {
    if (tree.is_tip(v)) {
      label[v] = code.try_emplace(p.label_of(tree.nodes[v].label), static_cast<long>(code.size())).first->second;
      continue;
    }
    long l = label[tree.nodes[v].children.front()];
    for (int c : tree.nodes[v].children)
      if (label[c] != l) l = -1;
    label[v] = l;
  }
  std::vector<char> roots(tree.node_count(), 0);
  for (int v : tree.preorder())
    roots[v] = label[v] >= 0 && (v == tree.root || label[tree.nodes[v].parent] < 0);
  return roots;
}

/// Starting state: threshold clusters at (init_support_min, init_distance_max, max pairwise p),
/// mean branch lengths inside and outside them as window centres, alpha at its prior mean.
inline ChainState initialize_chain(const PhyloTree& tree, const Alignment& alignment, const ChainConfig& cfg) {
  cfg.validate();
  const auto initial = threshold_cluster(
      tree, &alignment, ClusterCriteria{cfg.init_support_min, cfg.init_distance_max, DistanceStatistic::MaxPairwiseP});
  detail::ChainTree t(tree, cfg.length_floor);
  ChainState s;
  s.cluster_root = clade_roots_of(tree, initial);
  const auto sums = t.sums(s.cluster_root);
  if (t.edges() == 0) throw Error(ErrorKind::DegenerateTree, "tree has no branches");

  std::vector<double> lengths;
  for (std::size_t v = 0; v < tree.node_count(); ++v)
    if (static_cast<int>(v) != tree.root) lengths.push_back(t.length(static_cast<int>(v)));
  std::sort(lengths.begin(), lengths.end());
  const std::size_t decile = std::max<std::size_t>(1, (lengths.size() + 9) / 10);
  auto mean = [](auto first, auto last) {
    double sum = 0.0;
    for (auto it = first; it != last; ++it) sum += *it;
    return sum / static_cast<double>(last - first);
  };

  if (sums.within_edges > 0) {
    s.windows.m_w = sums.within_sum / static_cast<double>(sums.within_edges);
  } else {
    s.windows.m_w = mean(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(decile));
    s.windows.within_fallback = true;
  }
  if (sums.within_edges < t.edges()) {
    s.windows.m_b = (t.total_sum() - sums.within_sum) / static_cast<double>(t.edges() - sums.within_edges);
  } else {
    s.windows.m_b = mean(lengths.end() - static_cast<std::ptrdiff_t>(decile), lengths.end());
    s.windows.between_fallback = true;
  }
  s.mu_w = s.windows.m_w;
  s.mu_b = s.windows.m_b;
  if (s.mu_w > s.mu_b) {
    const double lo = std::max(s.windows.lo_w(cfg.radius), s.windows.lo_b(cfg.radius));
    const double hi = std::min(s.windows.hi_w(cfg.radius), s.windows.hi_b(cfg.radius));
    if (lo > hi) throw Error(ErrorKind::InvalidArgument, "within-cluster branches are longer than between-cluster ones");
    s.mu_w = s.mu_b = 0.5 * (lo + hi);
  }
  s.alpha = cfg.concentration_shape * cfg.concentration_scale;
  return s;
}

inline double log_posterior(const ChainState& s, const PhyloTree& tree, const ChainConfig& cfg) {
  if (s.cluster_root.size() != tree.node_count()) throw Error(ErrorKind::SizeMismatch, "state does not match tree");
  detail::ChainTree t(tree, cfg.length_floor);
  return detail::log_posterior_from(t.sums(s.cluster_root), t, s, cfg);
}

struct ChainSummary {
  std::vector<std::string> ids;
  Partition map_partition;
  double map_log_posterior = -std::numeric_limits<double>::infinity();
  std::size_t map_iteration = 0;
  std::vector<double> cocluster;  // strict upper triangle, row-major
  std::vector<std::pair<std::size_t, double>> trace;
  std::vector<std::vector<int>> retained_samples;  // cluster number per id, numbered by first appearance
  RateWindows windows;
  std::array<std::size_t, 4> proposed{};  // split, merge, walk-mu, walk-alpha
  std::array<std::size_t, 4> accepted{};

  std::size_t size() const { return ids.size(); }

  double cocluster_at(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    if (i > j) std::swap(i, j);
    const std::size_t n = ids.size();
    return cocluster[i * n - i * (i + 1) / 2 + (j - i - 1)];
  }

  Partition sample(std::size_t k) const {
    return Partition::from_membership(ids, retained_samples.at(k));
  }
};

/// Metropolis-Hastings over clade partitions, starting from `start`.
/// Moves: 0 split, 1 merge, 2 walk on mu_w or mu_b, 3 log-scale walk on alpha.
inline ChainSummary run_chain(const PhyloTree& tree, ChainState start, const ChainConfig& cfg) {
  cfg.validate();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  detail::ChainTree t(tree, cfg.length_floor);
  const std::size_t nodes = tree.node_count();
  if (start.cluster_root.size() != nodes) throw Error(ErrorKind::SizeMismatch, "state does not match tree");

  ChainState s = std::move(start);
  auto& root_flag = s.cluster_root;
  auto parent_of = [&](int v) { return tree.nodes[v].parent; };
  auto children_of = [&](int v) -> const std::vector<int>& { return tree.nodes[v].children; };

  detail::IndexedSet splittable(nodes), mergeable(nodes);
  auto refresh = [&](int v) {
    if (v < 0) return;
    splittable.set(v, root_flag[v] && !tree.is_tip(v));
    bool all = !tree.is_tip(v);
    for (int c : children_of(v)) all = all && root_flag[c];
    mergeable.set(v, all);
  };
  for (std::size_t v = 0; v < nodes; ++v) refresh(static_cast<int>(v));

  detail::LogSums sums = t.sums(root_flag);
  auto split = [&](int c) {
    root_flag[c] = 0;
    sums.within_edges -= t.below_edges(c);
    sums.within_sum -= t.below_sum(c);
    sums.lgamma_sizes -= std::lgamma(static_cast<double>(t.tips(c)));
    --sums.clusters;
    for (int ch : children_of(c)) {
      root_flag[ch] = 1;
      sums.within_edges += t.below_edges(ch);
      sums.within_sum += t.below_sum(ch);
      sums.lgamma_sizes += std::lgamma(static_cast<double>(t.tips(ch)));
      ++sums.clusters;
    }
    refresh(c);
    refresh(parent_of(c));
    for (int ch : children_of(c)) refresh(ch);
  };
  auto merge = [&](int v) {
    for (int ch : children_of(v)) {
      root_flag[ch] = 0;
      sums.within_edges -= t.below_edges(ch);
      sums.within_sum -= t.below_sum(ch);
      sums.lgamma_sizes -= std::lgamma(static_cast<double>(t.tips(ch)));
      --sums.clusters;
    }
    root_flag[v] = 1;
    sums.within_edges += t.below_edges(v);
    sums.within_sum += t.below_sum(v);
    sums.lgamma_sizes += std::lgamma(static_cast<double>(t.tips(v)));
    ++sums.clusters;
    refresh(v);
    refresh(parent_of(v));
    for (int ch : children_of(v)) refresh(ch);
  };

  ChainSummary out;
  out.windows = s.windows;
  const auto& tip_nodes = t.tip_order();
  const std::size_t n = tip_nodes.size();
  for (int v : tip_nodes) out.ids.push_back(tree.nodes[v].label);
  std::vector<double> counts(n * (n - 1) / 2, 0.0);
  std::vector<int> tip_slot(nodes, -1);
  for (std::size_t i = 0; i < n; ++i) tip_slot[tip_nodes[i]] = static_cast<int>(i);

  // Tips of each cluster, listed in tip order, for cheap co-clustering counts.
  auto membership = [&]() {
    std::vector<int> owner(nodes, -1);
    for (int v : tree.preorder())
      owner[v] = root_flag[v] ? v : (v == tree.root ? -1 : owner[parent_of(v)]);
    std::vector<int> code(n);
    std::unordered_map<int, int> renumber;
    for (std::size_t i = 0; i < n; ++i)
      code[i] = renumber.try_emplace(owner[tip_nodes[i]], static_cast<int>(renumber.size()) + 1).first->second;
    return code;
  };

  double current = detail::log_posterior_from(sums, t, s, cfg);
  if (current == kNegInf) throw Error(ErrorKind::InvalidArgument, "starting state has zero posterior");

  Rng rng(cfg.seed);
  const std::size_t move_kinds = cfg.walk_moves ? 4 : 2;
  std::vector<char> map_flags;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const auto move = rng.index(move_kinds);
    ++out.proposed[move];
    if (move == 0 || move == 1) {
      auto& forward = move == 0 ? splittable : mergeable;
      if (forward.size() > 0) {
        const int v = forward.at(rng.index(forward.size()));
        const double forward_count = static_cast<double>(forward.size());
        if (move == 0)
          split(v);
        else
          merge(v);
        const auto& reverse = move == 0 ? mergeable : splittable;
        const double proposed = detail::log_posterior_from(sums, t, s, cfg);
        const double log_ratio = proposed - current + std::log(forward_count) - std::log(static_cast<double>(reverse.size()));
        if (proposed != kNegInf && std::log(rng.uniform()) < log_ratio) {
          current = proposed;
          ++out.accepted[move];
        } else if (move == 0) {
          merge(v);
        } else {
          split(v);
        }
      }
    } else if (move == 2) {
      const bool within = rng.bernoulli(0.5);
      double& mu = within ? s.mu_w : s.mu_b;
      const double width = within ? s.windows.hi_w(cfg.radius) - s.windows.lo_w(cfg.radius)
                                  : s.windows.hi_b(cfg.radius) - s.windows.lo_b(cfg.radius);
      const double h = cfg.mu_step_fraction * width;
      const double old = mu;
      mu = old + rng.uniform(-h, h);
      const double proposed = detail::log_posterior_from(sums, t, s, cfg);
      if (proposed != kNegInf && std::log(rng.uniform()) < proposed - current) {
        current = proposed;
        ++out.accepted[move];
      } else {
        mu = old;
      }
    } else {
      const double old = s.alpha;
      s.alpha = old * std::exp(rng.uniform(-cfg.alpha_log_step, cfg.alpha_log_step));
      const double proposed = detail::log_posterior_from(sums, t, s, cfg);
      const double log_ratio = proposed - current + std::log(s.alpha / old);
      if (proposed != kNegInf && std::log(rng.uniform()) < log_ratio) {
        current = proposed;
        ++out.accepted[move];
      } else {
        s.alpha = old;
      }
    }

    if (it <= cfg.burn_in) continue;
    out.trace.emplace_back(it, current);
    if (current > out.map_log_posterior) {
      out.map_log_posterior = current;
      out.map_iteration = it;
      map_flags = root_flag;
    }
    if ((it - cfg.burn_in) % cfg.thin != 0) continue;
    auto code = membership();
    std::unordered_map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[code[i]].push_back(i);
    for (const auto& [label, members] : groups)
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          const std::size_t i = members[a], j = members[b];
          counts[i * n - i * (i + 1) / 2 + (j - i - 1)] += 1.0;
        }
    out.retained_samples.push_back(std::move(code));
  }

  const double retained = static_cast<double>(out.retained_samples.size());
  if (retained > 0)
    for (auto& c : counts) c /= retained;
  out.cocluster = std::move(counts);
  out.map_partition = state_partition(tree, map_flags);
  return out;
}

inline ChainSummary run_chain(const PhyloTree& tree, const Alignment& alignment, const ChainConfig& cfg) {
  return run_chain(tree, initialize_chain(tree, alignment, cfg), cfg);
}

/// Walktrap communities of the co-clustering graph (diagonal dropped).
inline Partition linkage_estimate(const ChainSummary& summary, std::size_t walk_length = 4) {
  const std::size_t n = summary.size();
  WeightedGraph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.set(i, j, summary.cocluster_at(i, j));
  return walktrap_partition(g, summary.ids, walk_length);
}

// Chain directory layout:
//   map_partition.csv   id,label
//   cocluster.pcdm      upper triangle of co-clustering frequencies
//   cocluster.ids       row order, one id per line
//   trace.tsv           iteration, log posterior
//   retained_samples.txt  one line per sample, cluster numbers in row order
inline void write_chain_dir(const ChainSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw Error(ErrorKind::Io, "cannot write " + (dir / name).string());
  };
  put("map_partition.csv", write_partition(s.map_partition));
  put("cocluster.pcdm", write_pcdm(s.size(), s.cocluster));
  std::string ids;
  for (const auto& id : s.ids) ids += id + '\n';
  put("cocluster.ids", ids);
  std::string trace = "iteration\tlog_posterior\n";
  for (const auto& [it, lp] : s.trace) trace += std::to_string(it) + '\t' + text::format_double(lp) + '\n';
  put("trace.tsv", trace);
  std::string samples;
  for (const auto& code : s.retained_samples) {
    for (std::size_t i = 0; i < code.size(); ++i) {
      if (i) samples += ' ';
      samples += std::to_string(code[i]);
    }
    samples += '\n';
  }
  put("retained_samples.txt", samples);
}

/// Reads back what linkage needs: ids, co-clustering matrix, MAP partition, retained samples.
inline ChainSummary read_chain_dir(const std::filesystem::path& dir) {
  auto slurp = [&](const char* name) {
    std::ifstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot read " + (dir / name).string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  ChainSummary s;
  const std::string id_text = slurp("cocluster.ids");
  for (auto line : text::split(id_text, '\n')) {
    auto id = text::trim(line);
    if (!id.empty()) s.ids.emplace_back(id);
  }
  auto tri = read_pcdm(slurp("cocluster.pcdm"));
  if (tri.n != s.ids.size()) throw Error(ErrorKind::SizeMismatch, "cocluster.pcdm does not match cocluster.ids");
  s.cocluster = std::move(tri.values);
  s.map_partition = parse_partition(slurp("map_partition.csv"));
  if (std::filesystem::exists(dir / "retained_samples.txt")) {
    std::istringstream in(slurp("retained_samples.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      std::istringstream row(line);
      std::vector<int> code;
      int c;
      while (row >> c) code.push_back(c);
      if (code.size() != s.ids.size()) throw Error(ErrorKind::SizeMismatch, "retained sample length differs from ids");
      s.retained_samples.push_back(std::move(code));
    }
  }
  return s;
}

}  // namespace phyloclust
