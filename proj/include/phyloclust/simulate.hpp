#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phyloclust/alignment.hpp"
#include "phyloclust/date.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/metadata.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/rng.hpp"
#include "phyloclust/tree.hpp"

namespace phyloclust {

struct SimConfig {
  std::vector<std::size_t> cluster_sizes;
  double within_mean = 0.01;
  double between_mean = 0.15;
  std::optional<double> stem_min;  // defaults to 3 * within_mean
  std::size_t seq_length = 918;
  double kappa = 2.0;
  Date date_start = Date::ymd(2002, 1, 1);
  Date date_end = Date::ymd(2016, 2, 1);
  double phi_fraction = 0.3;
  double mask_fraction = 0.0;  // residues replaced by 'N'
  std::uint64_t seed = 1;

  double stem() const { return stem_min.value_or(3.0 * within_mean); }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (auto k : cluster_sizes) n += k;
    return n;
  }

  void validate() const {
    if (cluster_sizes.empty()) throw Error(ErrorKind::InvalidArgument, "no clusters");
    for (auto k : cluster_sizes)
      if (k == 0) throw Error(ErrorKind::InvalidArgument, "empty cluster");
    if (total_size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 sequences");
    if (!(within_mean > 0 && within_mean < between_mean))
      throw Error(ErrorKind::InvalidArgument, "need 0 < within_mean < between_mean");
    if (!(stem() > 0)) throw Error(ErrorKind::InvalidArgument, "stem_min must be positive");
    if (seq_length == 0) throw Error(ErrorKind::InvalidArgument, "seq_length must be positive");
    if (!(kappa > 0)) throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
    if (!(date_start <= date_end)) throw Error(ErrorKind::InvalidArgument, "date range reversed");
    if (!(phi_fraction >= 0 && phi_fraction <= 1)) throw Error(ErrorKind::InvalidArgument, "phi_fraction outside [0,1]");
    if (!(mask_fraction >= 0 && mask_fraction <= 1)) throw Error(ErrorKind::InvalidArgument, "mask_fraction outside [0,1]");
  }
};

struct SimulatedTree {
  PhyloTree tree;
  Partition planted;
};

namespace detail {

/// Random rooted binary topology over `leaves` leaves, uniform over labeled topologies: leaf k is
/// attached to the branch above a uniformly chosen existing node (the root's branch included).
/// Returns parent links; nodes [0, leaves) are the leaves, node order otherwise arbitrary.
inline std::vector<int> random_topology(std::size_t leaves, Rng& rng, int& root) {
  std::vector<int> parent(leaves, -1);
  parent.reserve(2 * leaves);
  root = 0;
  for (std::size_t k = 1; k < leaves; ++k) {
    std::vector<int> existing;  // nodes currently in the tree
    existing.reserve(2 * k);
    for (std::size_t v = 0; v < k; ++v) existing.push_back(static_cast<int>(v));
    for (std::size_t v = leaves; v < parent.size(); ++v) existing.push_back(static_cast<int>(v));
    const int target = existing[rng.index(existing.size())];
    const int joint = static_cast<int>(parent.size());
    parent.push_back(parent[target]);
    parent[target] = joint;
    parent[k] = joint;
    if (target == root) root = joint;
  }
  return parent;
}

}  // namespace detail

/// Clusters are random binary clades with Exponential(within_mean) branches, hung from a random
/// backbone whose branches are stem_min + Exponential(between_mean). Every internal support is 1.
inline SimulatedTree simulate_tree(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng topo = rng.substream(1);
  Rng lengths = rng.substream(2);

  // Working forest: parent link and branch length per node, tips labelled.
  std::vector<int> parent;
  std::vector<double> length;
  std::vector<std::string> label;
  std::vector<int> cluster_roots;
  std::vector<std::string> ids;
  std::vector<std::size_t> planted_code;
  std::size_t next_tip = 0;
  const std::size_t width = std::to_string(cfg.total_size()).size();
  auto tip_name = [&](std::size_t k) {
    std::string s = std::to_string(k + 1);
    return "s" + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
  };

  for (std::size_t c = 0; c < cfg.cluster_sizes.size(); ++c) {
    const std::size_t size = cfg.cluster_sizes[c];
    int local_root = 0;
    const auto local = detail::random_topology(size, topo, local_root);
    const int offset = static_cast<int>(parent.size());
    for (std::size_t v = 0; v < local.size(); ++v) {
      parent.push_back(local[v] < 0 ? -1 : local[v] + offset);
      length.push_back(static_cast<int>(v) == local_root ? 0.0 : lengths.exponential(cfg.within_mean));
      if (v < size) {
        label.push_back(tip_name(next_tip++));
        ids.push_back(label.back());
        planted_code.push_back(c);
      } else {
        label.emplace_back();
      }
    }
    cluster_roots.push_back(local_root + offset);
  }

  int backbone_root = 0;
  const auto backbone = detail::random_topology(cluster_roots.size(), topo, backbone_root);
  std::vector<int> backbone_node(backbone.size());
  for (std::size_t v = 0; v < backbone.size(); ++v) {
    if (v < cluster_roots.size()) {
      backbone_node[v] = cluster_roots[v];
    } else {
      backbone_node[v] = static_cast<int>(parent.size());
      parent.push_back(-1);
      length.push_back(0.0);
      label.emplace_back();
    }
  }
  for (std::size_t v = 0; v < backbone.size(); ++v) {
    const int node = backbone_node[v];
    if (backbone[v] < 0) {
      length[node] = 0.0;
      continue;
    }
    parent[node] = backbone_node[backbone[v]];
    length[node] = cfg.stem() + lengths.exponential(cfg.between_mean);
  }

  // Assemble in pre-order from the backbone root.
  std::vector<std::vector<int>> children(parent.size());
  for (std::size_t v = 0; v < parent.size(); ++v)
    if (parent[v] >= 0) children[parent[v]].push_back(static_cast<int>(v));
  SimulatedTree out;
  std::vector<std::pair<int, int>> stack{{backbone_node[backbone_root], -1}};
  while (!stack.empty()) {
    auto [src, into] = stack.back();
    stack.pop_back();
    const int id = out.tree.add_node(into, into < 0 ? 0.0 : length[src], label[src]);
    if (!children[src].empty() && into >= 0) out.tree.nodes[id].support = 1.0;
    for (auto it = children[src].rbegin(); it != children[src].rend(); ++it) stack.emplace_back(*it, id);
  }
  if (!out.tree.is_tip(out.tree.root)) out.tree.nodes[out.tree.root].support = 1.0;
  out.tree.support_scale = SupportScale::Proportion;
  out.planted = Partition::from_membership(std::span<const std::string>(ids), std::span<const std::size_t>(planted_code));
  return out;
}

/// Finite-time K80 transition probabilities for a branch of length t with kappa = transition /
/// transversion rate ratio, normalized to one expected substitution per unit length.
struct K80Probabilities {
  double same;
  double transition;
  double transversion_each;
};

inline K80Probabilities k80_probabilities(double t, double kappa) {
  const double beta = 1.0 / (kappa + 2.0);
  const double e1 = std::exp(-4.0 * beta * t);
  const double e2 = std::exp(-2.0 * (kappa + 1.0) * beta * t);
  return {0.25 + 0.25 * e1 + 0.5 * e2, 0.25 + 0.25 * e1 - 0.5 * e2, 0.25 - 0.25 * e1};
}

/// Evolves an i.i.d. uniform root sequence down the tree; tips come back in tree.tips() order.
/// Each node draws from its own seeded sub-stream.
inline Alignment simulate_alignment(const PhyloTree& tree, const SimConfig& cfg) {
  if (cfg.seq_length == 0) throw Error(ErrorKind::InvalidArgument, "seq_length must be positive");
  static constexpr char kBase[4] = {'A', 'C', 'G', 'T'};
  Rng base(mix_seed(cfg.seed) ^ 0x5eedULL);
  std::vector<std::vector<std::uint8_t>> seq(tree.node_count());
  for (int v : tree.preorder()) {
    Rng rng = base.substream(static_cast<std::uint64_t>(v));
    auto& s = seq[v];
    s.resize(cfg.seq_length);
    if (v == tree.root) {
      for (auto& b : s) b = static_cast<std::uint8_t>(rng.index(4));
      continue;
    }
    const auto& from = seq[tree.nodes[v].parent];
    const auto p = k80_probabilities(tree.nodes[v].length, cfg.kappa);
    for (std::size_t i = 0; i < cfg.seq_length; ++i) {
      const double u = rng.uniform();
      const std::uint8_t b = from[i];
      if (u < p.same)
        s[i] = b;
      else if (u < p.same + p.transition)
        s[i] = b ^ 2u;
      else
        s[i] = u < p.same + p.transition + p.transversion_each ? b ^ 1u : b ^ 3u;
    }
  }
  Alignment out;
  for (int v : tree.tips()) {
    std::string residues(cfg.seq_length, 'N');
    for (std::size_t i = 0; i < cfg.seq_length; ++i) residues[i] = kBase[seq[v][i]];
    if (cfg.mask_fraction > 0) {
      Rng mask = base.substream(0x6d61736bULL ^ (static_cast<std::uint64_t>(v) << 20));
      for (auto& c : residues)
        if (mask.bernoulli(cfg.mask_fraction)) c = 'N';
    }
    out.add({tree.nodes[v].label, std::move(residues)});
  }
  return out;
}

/// Collection date uniform over the configured range; stage PHI with probability phi_fraction,
/// otherwise chronic untreated; risk group MSM.
inline std::vector<CaseMetadata> simulate_metadata(const Partition& p, const SimConfig& cfg) {
  if (!(cfg.phi_fraction >= 0 && cfg.phi_fraction <= 1)) throw Error(ErrorKind::InvalidArgument, "phi_fraction outside [0,1]");
  Rng rng = Rng(cfg.seed).substream(3);
  const auto span_days = static_cast<std::uint64_t>(cfg.date_end.days() - cfg.date_start.days()) + 1;
  std::vector<CaseMetadata> out;
  out.reserve(p.size());
  for (const auto& id : p.ids()) {
    CaseMetadata m;
    m.id = id;
    m.collection_date = Date::from_days(cfg.date_start.days() + static_cast<int>(rng.index(span_days)));
    m.stage = rng.bernoulli(cfg.phi_fraction) ? Stage::PHI : Stage::ChronicUntreated;
    m.risk_group = "MSM";
    out.push_back(std::move(m));
  }
  return out;
}

/// Named configurations used by the CLI and the acceptance suite.
///  - "acceptance": 20 clusters of 5..50, within 0.01, between 0.15, 918 sites, kappa 2
///  - "paper-scale": 3,707 sequences with a heavy-tailed cluster-size mix, largest cluster 125
///  - "small": 6 clusters of 2..8 over 300 sites, for quick runs
inline SimConfig sim_preset(std::string_view name, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.seed = seed;
  Rng rng = Rng(seed).substream(0x9e3779b9ULL);
  if (name == "acceptance") {
    for (int c = 0; c < 20; ++c) cfg.cluster_sizes.push_back(5 + rng.index(46));
  } else if (name == "paper-scale") {
    constexpr std::size_t total = 3707;
    std::size_t sum = 125;
    cfg.cluster_sizes.push_back(125);
    // Sizes 1..60 with weight proportional to 1/k^2.
    std::vector<double> cdf;
    double acc = 0;
    for (int k = 1; k <= 60; ++k) cdf.push_back(acc += 1.0 / (k * k));
    while (sum < total) {
      const double u = rng.uniform() * acc;
      std::size_t k = 1;
      while (cdf[k - 1] < u) ++k;
      k = std::min(k, total - sum);
      cfg.cluster_sizes.push_back(k);
      sum += k;
    }
  } else if (name == "small") {
    for (int c = 0; c < 6; ++c) cfg.cluster_sizes.push_back(2 + rng.index(7));
    cfg.seq_length = 300;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + std::string(name) + "'");
  }
  return cfg;
}

}  // namespace phyloclust
