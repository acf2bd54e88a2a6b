#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "helpers.hpp"

using namespace phyloclust;
using namespace testing_helpers;

namespace {

// ARI from the four pair-agreement counts over every unordered pair.
double pair_counting_ari(const std::vector<int>& x, const std::vector<int>& y) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const bool sx = x[i] == x[j], sy = y[i] == y[j];
      if (sx && sy)
        ++a;
      else if (sx)
        ++b;
      else if (sy)
        ++c;
      else
        ++d;
    }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) return (b == 0 && c == 0) ? 1.0 : 0.0;
  return 2.0 * (a * d - b * c) / denom;
}

Partition from_codes(const std::vector<std::string>& ids, const std::vector<int>& codes) {
  return Partition::from_membership(ids, codes);
}

std::vector<int> labels_as_ints(const Partition& p, const std::vector<std::string>& order) {
  std::vector<int> out;
  for (const auto& id : order) out.push_back(std::stoi(p.label_of(id)));
  return out;
}

ReferenceSet first_k_reference(const std::vector<std::string>& ids, const std::vector<int>& codes) {
  ReferenceSet ref;
  ref.universe = ids;
  for (std::size_t i = 0; i < codes.size(); ++i) ref.reference.assign(ids[i], std::to_string(codes[i]));
  return ref;
}

}  // namespace

TEST(Ari, Identical) {
  const auto ids = names(5);
  const auto p = from_codes(ids, {1, 1, 2, 2, 3});
  EXPECT_DOUBLE_EQ(adjusted_rand_index(p, p), 1.0);
}

TEST(Ari, CrossedPairs) {
  const auto ids = names(4);
  const double v = adjusted_rand_index(from_codes(ids, {1, 1, 2, 2}), from_codes(ids, {1, 2, 1, 2}));
  EXPECT_NEAR(v, pair_counting_ari({1, 1, 2, 2}, {1, 2, 1, 2}), 1e-15);
  EXPECT_NEAR(v, -0.5, 1e-15);
}

TEST(Ari, LabelNamesAndIdOrderIrrelevant) {
  Partition p, q;
  p.assign("a", "x");
  p.assign("b", "x");
  p.assign("c", "y");
  q.assign("c", "1");
  q.assign("b", "2");
  q.assign("a", "2");
  EXPECT_DOUBLE_EQ(adjusted_rand_index(p, q), 1.0);
}

TEST(Ari, MatchesPairCountingOracle) {
  Rng rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.index(12);
    const auto ids = names(n);
    std::vector<int> x(n), y(n);
    const std::size_t kx = 1 + rng.index(n), ky = 1 + rng.index(n);
    for (auto& v : x) v = static_cast<int>(rng.index(kx));
    for (auto& v : y) v = static_cast<int>(rng.index(ky));
    EXPECT_NEAR(adjusted_rand_index(from_codes(ids, x), from_codes(ids, y)), pair_counting_ari(x, y), 1e-12);
  }
}

TEST(Ari, Symmetric) {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto ids = names(2 + rng.index(100));
    const auto p = random_partition(ids, 1 + rng.index(10), rng);
    const auto q = random_partition(ids, 1 + rng.index(10), rng);
    EXPECT_NEAR(adjusted_rand_index(p, q), adjusted_rand_index(q, p), 1e-12);
  }
}

TEST(Ari, IdMismatch) {
  try {
    adjusted_rand_index(from_codes(names(3), {1, 1, 2}), from_codes(names(4), {1, 1, 2, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IdSetMismatch);
  }
}

TEST(PartialGold, WorkedExample) {
  const auto ids = names(10);
  const auto ref = first_k_reference(ids, {1, 1, 1, 2, 2, 2});
  const auto [transformed, gold] = partial_gold_transform(from_codes(ids, {1, 1, 2, 3, 3, 3, 3, 4, 4, 5}), ref);
  EXPECT_EQ(labels_as_ints(transformed, ids), (std::vector<int>{1, 1, 2, 3, 3, 3, 3, 4, 4, 4}));
  EXPECT_EQ(labels_as_ints(gold, ids), (std::vector<int>{1, 1, 1, 2, 2, 2, 3, 3, 3, 3}));
}

TEST(PartialGold, AllSingletonCandidate) {
  const auto ids = names(9);
  const auto ref = first_k_reference(ids, {1, 1, 2, 2});
  std::vector<int> codes(9);
  for (int i = 0; i < 9; ++i) codes[i] = i;
  const auto [transformed, gold] = partial_gold_transform(from_codes(ids, codes), ref);
  EXPECT_EQ(labels_as_ints(transformed, ids), (std::vector<int>{1, 2, 3, 4, 5, 5, 5, 5, 5}));
  EXPECT_EQ(labels_as_ints(gold, ids), (std::vector<int>{1, 1, 2, 2, 3, 3, 3, 3, 3}));
}

TEST(PartialGold, KeepsRelationsAmongTouchingIds) {
  Rng rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 10 + rng.index(50);
    const auto ids = names(n);
    const auto cand = random_partition(ids, 1 + rng.index(n), rng);
    std::vector<int> refcodes(1 + rng.index(n - 1));
    for (auto& c : refcodes) c = static_cast<int>(rng.index(4));
    const auto ref = first_k_reference(ids, refcodes);
    const auto [transformed, gold] = partial_gold_transform(cand, ref);
    std::set<std::string> touching;
    for (const auto& id : ref.reference.ids()) touching.insert(cand.label_of(id));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool ti = touching.count(cand.label_of(ids[i])) > 0, tj = touching.count(cand.label_of(ids[j])) > 0;
        const bool before = cand.label_of(ids[i]) == cand.label_of(ids[j]);
        const bool after = transformed.label_of(ids[i]) == transformed.label_of(ids[j]);
        if (ti && tj) EXPECT_EQ(before, after);
        if (!ti && !tj) EXPECT_TRUE(after);
        if (ti != tj) EXPECT_FALSE(after);
      }
  }
}

TEST(PartialGold, Errors) {
  const auto ids = names(4);
  ReferenceSet ref;
  ref.universe = ids;
  ref.reference.assign("zz", "1");
  EXPECT_THROW(partial_gold_transform(from_codes(ids, {1, 1, 2, 2}), ref), Error);
  const auto ok = first_k_reference(ids, {1, 1});
  EXPECT_THROW(partial_gold_transform(from_codes(names(3), {1, 1, 2}), ok), Error);
}

namespace {

// A runner that looks up a fixed partition for each (support, distance) cell.
struct TableRunner {
  std::map<std::pair<double, double>, Partition> table;
  Partition operator()(const ClusterCriteria& c) const { return table.at({c.support_min, c.distance_max}); }
};

const std::vector<double> kSupports{0.70, 0.90, 0.95};
const std::vector<double> kDistances{0.015, 0.03, 0.045, 0.068, 0.077};

}  // namespace

TEST(Sweep, FindsConstructedArgmax) {
  const auto ids = names(8);
  const auto ref = first_k_reference(ids, {1, 1, 1, 2, 2});
  TableRunner runner;
  for (double s : kSupports)
    for (double d : kDistances) runner.table[{s, d}] = from_codes(ids, {1, 2, 3, 4, 5, 6, 7, 8});
  runner.table[{0.90, 0.045}] = from_codes(ids, {1, 1, 1, 2, 2, 3, 4, 5});
  const auto r = cutpoint_sweep(runner, kSupports, kDistances, DistanceStatistic::MaxPatristic, ref);
  EXPECT_EQ(r.grid.size(), 15u);
  EXPECT_DOUBLE_EQ(r.best.support_min, 0.90);
  EXPECT_DOUBLE_EQ(r.best.distance_max, 0.045);
  EXPECT_DOUBLE_EQ(r.best_ari, 1.0);
  for (const auto& cell : r.grid) EXPECT_LE(cell.ari, r.best_ari);
}

TEST(Sweep, TiesGoToSmallerDistanceThenLargerSupport) {
  const auto ids = names(6);
  const auto ref = first_k_reference(ids, {1, 1, 2, 2});
  TableRunner runner;
  const auto good = from_codes(ids, {1, 1, 2, 2, 3, 4});
  for (double s : kSupports)
    for (double d : kDistances) runner.table[{s, d}] = good;
  const auto r = cutpoint_sweep(runner, kSupports, kDistances, DistanceStatistic::MaxPatristic, ref);
  EXPECT_DOUBLE_EQ(r.best.distance_max, 0.015);
  EXPECT_DOUBLE_EQ(r.best.support_min, 0.95);
}

TEST(Sweep, ArgmaxInvariantToGridOrder) {
  Rng rng(13);
  const auto ids = names(20);
  std::vector<int> refcodes(10);
  for (auto& c : refcodes) c = static_cast<int>(rng.index(3));
  const auto ref = first_k_reference(ids, refcodes);
  for (int rep = 0; rep < 10; ++rep) {
    TableRunner runner;
    for (double s : kSupports)
      for (double d : kDistances) runner.table[{s, d}] = random_partition(ids, 2 + rng.index(5), rng);
    auto s2 = kSupports, d2 = kDistances;
    std::reverse(s2.begin(), s2.end());
    std::rotate(d2.begin(), d2.begin() + 2, d2.end());
    const auto a = cutpoint_sweep(runner, kSupports, kDistances, DistanceStatistic::MaxPatristic, ref);
    const auto b = cutpoint_sweep(runner, s2, d2, DistanceStatistic::MaxPatristic, ref);
    EXPECT_EQ(a.best.support_min, b.best.support_min);
    EXPECT_EQ(a.best.distance_max, b.best.distance_max);
    EXPECT_EQ(a.best_ari, b.best_ari);
  }
}

TEST(Sweep, SingleCell) {
  const auto ids = names(4);
  const auto ref = first_k_reference(ids, {1, 1});
  TableRunner runner;
  runner.table[{0.7, 0.05}] = from_codes(ids, {1, 1, 2, 3});
  const std::vector<double> s{0.7}, d{0.05};
  const auto r = cutpoint_sweep(runner, s, d, DistanceStatistic::MaxPatristic, ref);
  EXPECT_EQ(r.grid.size(), 1u);
  EXPECT_DOUBLE_EQ(r.best.distance_max, 0.05);
  EXPECT_THROW(cutpoint_sweep(runner, std::vector<double>{}, d, DistanceStatistic::MaxPatristic, ref), Error);
}

TEST(Sweep, EndToEndThresholdRunner) {
  SimConfig cfg;
  cfg.cluster_sizes = {6, 6, 6, 1, 1, 1};
  cfg.within_mean = 0.004;
  cfg.seq_length = 300;
  cfg.seed = 3;
  auto sim = simulate_tree(cfg);
  for (auto& n : sim.tree.nodes)
    if (!n.children.empty()) n.support = 1.0;
  sim.tree.support_scale = SupportScale::Proportion;
  auto stats = make_clade_statistics(sim.tree, nullptr, DistanceStatistic::MaxPatristic);
  ReferenceSet ref;
  ref.universe = sim.tree.tip_labels();
  std::sort(ref.universe.begin(), ref.universe.end());
  for (std::size_t i = 0; i < ref.universe.size(); i += 2) ref.reference.assign(ref.universe[i], sim.planted.label_of(ref.universe[i]));
  const auto r = cutpoint_sweep([&](const ClusterCriteria& c) { return threshold_cluster(stats, c); }, kSupports,
                                kDistances, DistanceStatistic::MaxPatristic, ref);
  EXPECT_EQ(r.grid.size(), 15u);
  EXPECT_GE(r.best_ari, -1.0);
  EXPECT_LE(r.best_ari, 1.0);
}

TEST(Cocluster, MatchesCounting) {
  Rng rng(4);
  const auto ids = names(25);
  std::vector<Partition> parts;
  for (int k = 0; k < 6; ++k) parts.push_back(random_partition(ids, 3 + rng.index(20), rng));
  const auto m = method_cocluster_matrix(parts, ids);
  std::set<std::string> kept(m.ids.begin(), m.ids.end());
  EXPECT_EQ(kept.size(), m.ids.size());
  for (const auto& id : ids) {
    bool multi = false;
    for (const auto& p : parts) {
      std::size_t same = 0;
      for (const auto& other : ids) same += p.label_of(other) == p.label_of(id) ? 1 : 0;
      multi = multi || same > 1;
    }
    EXPECT_EQ(kept.count(id) > 0, multi) << id;
  }
  for (std::size_t a = 0; a < m.ids.size(); ++a)
    for (std::size_t b = a + 1; b < m.ids.size(); ++b) {
      double together = 0;
      for (const auto& p : parts) together += p.label_of(m.ids[a]) == p.label_of(m.ids[b]) ? 1 : 0;
      EXPECT_DOUBLE_EQ(m.frequency(a, b), together / 6.0);
    }
}

TEST(Cocluster, BlocksAreContiguousAfterSeriation) {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  const std::vector<Partition> parts{from_codes(ids, {1, 2, 1, 2, 1, 2}), from_codes(ids, {1, 2, 1, 2, 1, 2})};
  const auto m = method_cocluster_matrix(parts, ids);
  ASSERT_EQ(m.ids.size(), 6u);
  // Each consecutive triple must be one planted block.
  auto block = [](const std::string& s) { return s == "a" || s == "c" || s == "e"; };
  EXPECT_EQ(block(m.ids[0]), block(m.ids[1]));
  EXPECT_EQ(block(m.ids[1]), block(m.ids[2]));
  EXPECT_EQ(block(m.ids[3]), block(m.ids[5]));
  EXPECT_NE(block(m.ids[2]), block(m.ids[3]));
}

TEST(Cocluster, Errors) {
  const auto ids = names(3);
  EXPECT_THROW(method_cocluster_matrix(std::span<const Partition>{}, ids), Error);
  const std::vector<Partition> bad{from_codes(names(2), {1, 1})};
  EXPECT_THROW(method_cocluster_matrix(bad, ids), Error);
}

TEST(AverageLinkage, KnownOrder) {
  // Points on a line at 0, 10, 1, 11: {0,2} and {1,3} merge first.
  const std::vector<double> x{0, 10, 1, 11};
  std::vector<double> d(16);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) d[i * 4 + j] = std::abs(x[i] - x[j]);
  EXPECT_EQ(average_linkage_order(d, 4), (std::vector<std::size_t>{0, 2, 1, 3}));
}

TEST(Summary, SmallExample) {
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto s = partition_summary(from_codes(ids, {1, 2, 2}));
  EXPECT_DOUBLE_EQ(s.mean_size, 1.5);
  EXPECT_DOUBLE_EQ(s.mean_size_no_singletons, 2.0);
  EXPECT_DOUBLE_EQ(s.median_size_no_singletons, 2.0);
  EXPECT_EQ(s.max_size, 2u);
  EXPECT_EQ(s.num_singletons, 1u);
  EXPECT_EQ(s.num_clusters_ge2, 1u);
}

TEST(Summary, MatchesRecount) {
  Rng rng(10);
  for (int rep = 0; rep < 30; ++rep) {
    const auto ids = names(1 + rng.index(200));
    const auto p = random_partition(ids, 1 + rng.index(80), rng);
    std::map<std::string, std::size_t> count;
    for (const auto& id : ids) ++count[p.label_of(id)];
    std::vector<std::size_t> multi;
    std::size_t singles = 0, largest = 0;
    for (const auto& [label, k] : count) {
      largest = std::max(largest, k);
      if (k == 1)
        ++singles;
      else
        multi.push_back(k);
    }
    const auto s = partition_summary(p);
    EXPECT_EQ(s.num_singletons, singles);
    EXPECT_EQ(s.num_clusters_ge2, multi.size());
    EXPECT_EQ(s.max_size, largest);
    EXPECT_DOUBLE_EQ(s.mean_size, static_cast<double>(ids.size()) / static_cast<double>(count.size()));
    const auto dist = cluster_size_distribution(p);
    std::size_t total = 0;
    for (const auto& [size, n] : dist) total += size * n;
    EXPECT_EQ(total, ids.size());
  }
  EXPECT_THROW(partition_summary(Partition{}), Error);
}
