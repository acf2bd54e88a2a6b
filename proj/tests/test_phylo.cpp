#include <gtest/gtest.h>

#include <map>
#include <set>

#include "helpers.hpp"

using namespace phyloclust;
using namespace testing_helpers;

namespace {

// Walks both tips up to their lowest common ancestor, one parent link at a time.
double path_walk(const PhyloTree& t, int a, int b) {
  std::map<int, double> up;
  double acc = 0.0;
  for (int v = a; v >= 0; v = t.nodes[v].parent) {
    up[v] = acc;
    acc += t.nodes[v].length;
  }
  acc = 0.0;
  for (int v = b; v >= 0; v = t.nodes[v].parent) {
    if (auto it = up.find(v); it != up.end()) return acc + it->second;
    acc += t.nodes[v].length;
  }
  return -1.0;
}

std::map<std::pair<std::string, std::string>, double> naive_patristic(const PhyloTree& t) {
  std::map<std::pair<std::string, std::string>, double> out;
  const auto tips = t.tips();
  for (int a : tips)
    for (int b : tips)
      if (a != b) out[{t.nodes[a].label, t.nodes[b].label}] = path_walk(t, a, b);
  return out;
}

using LabelSet = std::vector<std::string>;

std::set<LabelSet> clades_by_label(const PhyloTree& t) {
  std::set<LabelSet> out;
  for (int v : t.postorder()) {
    if (t.is_tip(v)) continue;
    LabelSet s;
    std::vector<int> stack{v};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (t.is_tip(u)) s.push_back(t.nodes[u].label);
      for (int c : t.nodes[u].children) stack.push_back(c);
    }
    std::sort(s.begin(), s.end());
    out.insert(s);
  }
  return out;
}

LabelSet tips_below(const PhyloTree& t, int v) {
  LabelSet s;
  std::vector<int> stack{v};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (t.is_tip(u)) s.push_back(t.nodes[u].label);
    for (int c : t.nodes[u].children) stack.push_back(c);
  }
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST(Patristic, Cherry) {
  const auto t = parse_newick("(a:0.1,b:0.2);");
  const auto m = patristic_matrix(t);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.3);
  EXPECT_EQ(m.kind(), DistanceKind::Patristic);
}

TEST(Patristic, ZeroStar) {
  const auto m = patristic_matrix(parse_newick("(a:0,b:0,c:0,d:0);"));
  for (double v : m.triangle()) EXPECT_EQ(v, 0.0);
}

TEST(Patristic, MatchesPathWalkOracle) {
  Rng rng(101);
  for (int rep = 0; rep < 40; ++rep) {
    const auto t = random_tree(2 + rng.index(63), rng);
    const auto m = patristic_matrix(t);
    const auto oracle = naive_patristic(t);
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j)
        EXPECT_NEAR(m(i, j), oracle.at({m.ids()[i], m.ids()[j]}), 1e-12);
  }
}

TEST(Patristic, MetricProperties) {
  Rng rng(5);
  const auto t = random_tree(30, rng);
  const auto m = patristic_matrix(t);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      EXPECT_EQ(m(i, j), m(j, i));
      for (std::size_t k = 0; k < m.size(); ++k) EXPECT_LE(m(i, k), m(i, j) + m(j, k) + 1e-12);
    }
}

TEST(Clades, Counts) {
  EXPECT_EQ(enumerate_clades(parse_newick("((a,b),c);")).size(), 2u);
  EXPECT_EQ(enumerate_clades(parse_newick("(((a,b),(c,d)),((e,f),(g,h)));")).size(), 7u);
}

TEST(Clades, ParentIsUnionOfChildren) {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_tree(2 + rng.index(60), rng);
    const auto clades = enumerate_clades(t);
    std::map<int, TipSet> by_node;
    for (const auto& c : clades) by_node[c.node] = c.tips;
    const auto pos = tip_positions(t);
    for (const auto& c : clades) {
      TipSet expect(pos.size());
      for (int ch : t.nodes[c.node].children) {
        if (t.is_tip(ch))
          expect.set(pos.at(t.nodes[ch].label));
        else
          expect |= by_node.at(ch);
      }
      EXPECT_TRUE(expect == c.tips);
      EXPECT_EQ(c.tips.count(), tips_below(t, c.node).size());
    }
  }
}

TEST(Rooting, OutgroupSiblingRemoved) {
  const auto t = parse_newick("(((a:0.1,b:0.2)0.9:0.3,c:0.4)0.8:0.5,(o1:0.1,o2:0.1)1:0.2);");
  const auto r = root_at_outgroup(t, {"o1", "o2"});
  EXPECT_EQ(r.tip_count(), 3u);
  EXPECT_EQ(write_newick(r), "((a:0.1,b:0.2)0.9:0.3,c:0.4);\n");
}

TEST(Rooting, MissingOutgroup) {
  const auto t = parse_newick("((a,b),c);");
  try {
    root_at_outgroup(t, {"zz"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutgroupMissing);
  }
}

TEST(Rooting, NotMonophyletic) {
  const auto t = parse_newick("(((a,b),(c,d)),(e,f));");
  try {
    root_at_outgroup(t, {"a", "c"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutgroupNotMonophyletic);
  }
}

TEST(Rooting, DeepOutgroupPreservesIngroupDistances) {
  Rng rng(33);
  for (int rep = 0; rep < 30; ++rep) {
    const auto t = random_tree(5 + rng.index(40), rng);
    std::vector<int> candidates;
    for (std::size_t v = 0; v < t.node_count(); ++v)
      if (static_cast<int>(v) != t.root && t.nodes[v].parent != t.root) candidates.push_back(static_cast<int>(v));
    if (candidates.empty()) continue;
    const int v = candidates[rng.index(candidates.size())];
    const auto outgroup = tips_below(t, v);
    const auto r = root_at_outgroup(t, outgroup);
    EXPECT_EQ(r.tip_count(), t.tip_count() - outgroup.size());
    const auto before = naive_patristic(t);
    const auto after = naive_patristic(r);
    for (const auto& [pair, d] : after) EXPECT_NEAR(d, before.at(pair), 1e-12);
    r.validate();
    for (std::size_t u = 0; u < r.node_count(); ++u)
      if (!r.is_tip(static_cast<int>(u))) EXPECT_GE(r.nodes[u].children.size(), 2u);
  }
}

TEST(Rooting, SupportFollowsBipartition) {
  // Re-rooting at o keeps the {a,b} bipartition's support on the {a,b} clade.
  const auto t = parse_newick("((a:1,b:1)0.7:1,(c:1,(d:1,o:1)0.6:1)0.9:1);");
  const auto r = root_at_outgroup(t, {"o"});
  const auto labels = clades_by_label(r);
  EXPECT_TRUE(labels.count({"a", "b"}));
  for (std::size_t v = 0; v < r.node_count(); ++v) {
    if (r.is_tip(static_cast<int>(v)) || static_cast<int>(v) == r.root) continue;
    if (tips_below(r, static_cast<int>(v)) == LabelSet{"a", "b"}) EXPECT_DOUBLE_EQ(*r.nodes[v].support, 0.7);
  }
}

TEST(Support, CopiesGiveOne) {
  Rng rng(2);
  const auto t = random_tree(12, rng);
  const std::vector<PhyloTree> sample(10, t);
  const auto a = annotate_support(t, sample, 2);
  for (std::size_t v = 0; v < a.node_count(); ++v)
    if (!a.is_tip(static_cast<int>(v))) EXPECT_DOUBLE_EQ(*a.nodes[v].support, 1.0);
}

TEST(Support, SeventyPercent) {
  const auto ref = parse_newick("((a,b),(c,d));");
  std::vector<PhyloTree> sample;
  for (int i = 0; i < 700; ++i) sample.push_back(parse_newick("((a,b),(c,d));"));
  for (int i = 0; i < 300; ++i) sample.push_back(parse_newick("((a,c),(b,d));"));
  const auto a = annotate_support(ref, sample, 3);
  const int ab = a.nodes[a.root].children[0];
  EXPECT_DOUBLE_EQ(*a.nodes[ab].support, 0.70);
}

TEST(Support, MatchesContainmentScan) {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 4 + rng.index(10);
    const auto ref = random_tree(n, rng);
    std::vector<PhyloTree> sample;
    for (int k = 0; k < 25; ++k) sample.push_back(random_tree(n, rng));
    sample.push_back(ref);
    const auto a = annotate_support(ref, sample, 2);
    std::vector<std::set<LabelSet>> per_tree;
    for (const auto& s : sample) per_tree.push_back(clades_by_label(s));
    for (std::size_t v = 0; v < a.node_count(); ++v) {
      if (a.is_tip(static_cast<int>(v))) continue;
      const auto clade = tips_below(a, static_cast<int>(v));
      double hits = 0;
      for (const auto& c : per_tree) hits += c.count(clade) ? 1 : 0;
      EXPECT_DOUBLE_EQ(*a.nodes[v].support, hits / static_cast<double>(sample.size()));
    }
  }
}

TEST(Support, TipSetMismatch) {
  try {
    annotate_support(parse_newick("((a,b),c);"), {parse_newick("((a,b),d);")});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TipSetMismatch);
  }
}

TEST(Consensus, IdenticalSample) {
  const auto t = parse_newick("((a:0.1,b:0.2):0.3,(c:0.1,d:0.4):0.2);");
  const auto c = majority_consensus({t, t, t});
  EXPECT_EQ(clades_by_label(c), clades_by_label(t));
  for (std::size_t v = 0; v < c.node_count(); ++v)
    if (!c.is_tip(static_cast<int>(v)) && static_cast<int>(v) != c.root) EXPECT_DOUBLE_EQ(*c.nodes[v].support, 1.0);
  EXPECT_NEAR(patristic_matrix(c)(0, 1), 0.3, 1e-12);
}

TEST(Consensus, TwoThirds) {
  const auto c = majority_consensus(
      {parse_newick("((a:1,b:1):2,c:1);"), parse_newick("((a:1,c:1):4,b:1);"), parse_newick("((a:1,b:1):4,c:1);")});
  const auto labels = clades_by_label(c);
  EXPECT_TRUE(labels.count({"a", "b"}));
  EXPECT_FALSE(labels.count({"a", "c"}));
  for (std::size_t v = 0; v < c.node_count(); ++v)
    if (tips_below(c, static_cast<int>(v)) == LabelSet{"a", "b"}) {
      EXPECT_NEAR(*c.nodes[v].support, 2.0 / 3.0, 1e-12);
      EXPECT_DOUBLE_EQ(c.nodes[v].length, 3.0);
    }
}

TEST(Consensus, CompatibleAndIdempotent) {
  Rng rng(19);
  std::vector<PhyloTree> sample;
  const auto base = random_tree(10, rng);
  for (int k = 0; k < 9; ++k) sample.push_back(k % 3 ? base : random_tree(10, rng));
  const auto c = majority_consensus(sample);
  const auto clades = clades_by_label(c);
  for (const auto& x : clades)
    for (const auto& y : clades) {
      std::vector<std::string> common;
      std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
      EXPECT_TRUE(common.empty() || common == x || common == y);
    }
  auto again = sample;
  again.push_back(c);
  EXPECT_EQ(clades_by_label(majority_consensus(again)), clades);
}
