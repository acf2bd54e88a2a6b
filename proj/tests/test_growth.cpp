#include <gtest/gtest.h>

#include <array>
#include <map>
#include <regex>

#include "helpers.hpp"

using namespace phyloclust;
using namespace testing_helpers;

namespace {

CaseMetadata meta(std::string id, Date d, Stage s) { return {std::move(id), d, s, "MSM"}; }

// A 20-member cluster: 8 PHIs through 2014, 7 chronic cases before mid-2012, 5 others.
struct Cohort {
  Partition p;
  std::vector<CaseMetadata> rows;
  Cohort() {
    for (int i = 0; i < 20; ++i) {
      const std::string id = "c" + std::to_string(i);
      p.assign(id, "big");
      if (i < 8)
        rows.push_back(meta(id, Date::ymd(2014, 1 + i, 3), Stage::PHI));
      else if (i < 15)
        rows.push_back(meta(id, Date::ymd(2009, 5, 1 + i), Stage::ChronicUntreated));
      else if (i < 17)
        rows.push_back(meta(id, Date::ymd(2013, 2, 1), Stage::ChronicTreated));
      else
        rows.push_back(meta(id, Date::ymd(2012, 3, 1), Stage::PHI));  // PHI before the reliable date
    }
    for (int i = 0; i < 3; ++i) {
      const std::string id = "s" + std::to_string(i);
      p.assign(id, "single" + std::to_string(i));
      rows.push_back(meta(id, Date::ymd(2015, 6, 1), Stage::PHI));
    }
  }
};

std::vector<CaseMetadata> random_cohort(const std::vector<std::string>& ids, Rng& rng) {
  std::vector<CaseMetadata> out;
  const Stage stages[] = {Stage::PHI, Stage::ChronicUntreated, Stage::ChronicTreated, Stage::Unknown};
  const auto lo = Date::ymd(2002, 1, 1).days(), hi = Date::ymd(2016, 6, 1).days();
  for (const auto& id : ids)
    out.push_back(meta(id, Date::from_days(lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo)))),
                       stages[rng.index(4)]));
  return out;
}

}  // namespace

TEST(Growth, TwentyMemberClusterWithEightPhis) {
  Cohort c;
  const auto rows = growth_report(c.p, c.rows);
  ASSERT_EQ(rows.size(), 4u);
  const auto& big = rows.front();
  EXPECT_EQ(big.cluster_label, "big");
  EXPECT_EQ(big.total_size, 20u);
  EXPECT_EQ(big.recent_phi_count, 8u);
  EXPECT_EQ(big.growth_lower_bound(), 8u);
  EXPECT_EQ(big.min_size_before, 7u);
  EXPECT_EQ(big.other_count, 5u);
  EXPECT_EQ(*big.first_recent_phi, Date::ymd(2014, 1, 3));
  EXPECT_EQ(*big.last_recent_phi, Date::ymd(2014, 8, 3));
  EXPECT_EQ(recent_phi_dates(big), "2014-01-03 - 2014-08-03");
}

TEST(Growth, AllChronicBeforeWindow) {
  Partition p;
  std::vector<CaseMetadata> rows;
  for (int i = 0; i < 4; ++i) {
    p.assign("x" + std::to_string(i), "1");
    rows.push_back(meta("x" + std::to_string(i), Date::ymd(2008, 1, 1), Stage::ChronicUntreated));
  }
  const auto r = growth_report(p, rows);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].recent_phi_count, 0u);
  EXPECT_FALSE(r[0].first_recent_phi.has_value());
  EXPECT_EQ(recent_phi_dates(r[0]), "");
}

TEST(Growth, SingleDateWhenOnePhi) {
  ClusterGrowthRow r;
  r.recent_phi_count = 1;
  r.first_recent_phi = r.last_recent_phi = Date::ymd(2015, 12, 23);
  EXPECT_EQ(recent_phi_dates(r), "2015-12-23");
}

TEST(Growth, MissingMetadata) {
  Partition p;
  p.assign("nobody", "1");
  try {
    growth_report(p, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingMetadata);
  }
}

TEST(Growth, WindowBoundaries) {
  Partition p;
  p.assign("a", "1");
  p.assign("b", "1");
  p.assign("c", "1");
  p.assign("d", "1");
  const std::vector<CaseMetadata> rows{meta("a", Date::ymd(2012, 7, 1), Stage::PHI),
                                       meta("b", Date::ymd(2016, 2, 1), Stage::PHI),
                                       meta("c", Date::ymd(2016, 2, 2), Stage::PHI),
                                       meta("d", Date::ymd(2012, 6, 30), Stage::ChronicTreated)};
  const auto r = growth_report(p, rows);
  EXPECT_EQ(r[0].recent_phi_count, 2u);
  EXPECT_EQ(r[0].min_size_before, 1u);
  EXPECT_EQ(r[0].other_count, 1u);
}

TEST(Growth, MatchesRecount) {
  Rng rng(7);
  const GrowthWindow w;
  for (int rep = 0; rep < 20; ++rep) {
    const auto ids = names(5 + rng.index(300));
    const auto p = random_partition(ids, 1 + rng.index(40), rng);
    const auto cohort = random_cohort(ids, rng);
    const auto rows = growth_report(p, cohort, w, 0);
    std::map<std::string, std::array<std::size_t, 4>> expect;  // total, before, phi, other
    std::size_t cohort_phi = 0;
    for (const auto& m : cohort) {
      auto& e = expect[p.label_of(m.id)];
      ++e[0];
      const bool chronic = m.stage == Stage::ChronicUntreated || m.stage == Stage::ChronicTreated;
      if (chronic && m.collection_date < Date::ymd(2012, 7, 1))
        ++e[1];
      else if (m.stage == Stage::PHI && !(m.collection_date < Date::ymd(2012, 7, 1)) &&
               !(Date::ymd(2016, 2, 1) < m.collection_date)) {
        ++e[2];
        ++cohort_phi;
      } else
        ++e[3];
    }
    ASSERT_EQ(rows.size(), expect.size());
    std::size_t report_phi = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      const auto& e = expect.at(r.cluster_label);
      EXPECT_EQ(r.total_size, e[0]);
      EXPECT_EQ(r.min_size_before, e[1]);
      EXPECT_EQ(r.recent_phi_count, e[2]);
      EXPECT_EQ(r.other_count, e[3]);
      EXPECT_EQ(r.min_size_before + r.recent_phi_count + r.other_count, r.total_size);
      EXPECT_EQ(r.first_recent_phi.has_value(), r.recent_phi_count > 0);
      if (k > 0) EXPECT_GE(rows[k - 1].total_size, r.total_size);
      report_phi += r.recent_phi_count;
    }
    EXPECT_EQ(report_phi, cohort_phi);
    EXPECT_EQ(phi_breakdown(p, cohort, w).total_recent_phi, cohort_phi);
  }
}

TEST(Growth, TopKKeepsLargest) {
  Rng rng(3);
  const auto ids = names(400);
  const auto p = random_partition(ids, 60, rng);
  const auto cohort = random_cohort(ids, rng);
  const auto all = growth_report(p, cohort, {}, 0);
  const auto top = growth_report(p, cohort, {}, 30);
  ASSERT_EQ(top.size(), 30u);
  for (std::size_t k = 0; k < 30; ++k) EXPECT_EQ(top[k], all[k]);
}

TEST(Growth, LowerBoundMonotoneInWindow) {
  Rng rng(12);
  const auto ids = names(300);
  const auto p = random_partition(ids, 20, rng);
  const auto cohort = random_cohort(ids, rng);
  GrowthWindow narrow;
  narrow.phi_reliable_start = Date::ymd(2013, 1, 1);
  narrow.window_end = Date::ymd(2015, 1, 1);
  const GrowthWindow wide;
  std::map<std::string, std::size_t> narrow_count;
  for (const auto& r : growth_report(p, cohort, narrow, 0)) narrow_count[r.cluster_label] = r.recent_phi_count;
  for (const auto& r : growth_report(p, cohort, wide, 0)) EXPECT_GE(r.recent_phi_count, narrow_count[r.cluster_label]);
}

TEST(Growth, InvalidWindow) {
  GrowthWindow w;
  w.phi_reliable_start = Date::ymd(2011, 1, 1);
  EXPECT_THROW(growth_report(Partition{}, {}, w), Error);
}

TEST(PhiBreakdown, Categories) {
  Partition p;
  std::vector<CaseMetadata> rows;
  auto add = [&](const std::string& id, const std::string& label, Stage s) {
    p.assign(id, label);
    rows.push_back(meta(id, Date::ymd(2014, 1, 1), s));
  };
  add("a", "1", Stage::PHI);
  add("b", "2", Stage::PHI);
  add("c", "2", Stage::ChronicTreated);
  for (int i = 0; i < 5; ++i) add("f" + std::to_string(i), "5", i < 3 ? Stage::PHI : Stage::ChronicUntreated);
  for (int i = 0; i < 3; ++i) add("t" + std::to_string(i), "3", Stage::PHI);
  const auto b = phi_breakdown(p, rows);
  EXPECT_EQ(b.singleton_count, 1u);
  EXPECT_EQ(b.pair_count, 1u);
  EXPECT_EQ(b.ge5_count, 3u);
  EXPECT_EQ(b.other_count, 3u);
  EXPECT_EQ(b.total_recent_phi, 8u);
}

TEST(PhiBreakdown, AllSingletons) {
  Partition p;
  std::vector<CaseMetadata> rows;
  for (int i = 0; i < 6; ++i) {
    p.assign("x" + std::to_string(i), std::to_string(i));
    rows.push_back(meta("x" + std::to_string(i), Date::ymd(2013, 1, 1), Stage::PHI));
  }
  const auto b = phi_breakdown(p, rows);
  EXPECT_EQ(b.singleton_count, b.total_recent_phi);
  EXPECT_EQ(b.total_recent_phi, 6u);
}

TEST(GrowthTsv, HeaderAndRow) {
  Cohort c;
  const auto tsv = write_growth_tsv(growth_report(c.p, c.rows));
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "cluster\ttotal_size\tmin_size_before\trecent_phi\tother\tfirst_recent_phi\tlast_recent_phi");
  EXPECT_NE(tsv.find("big\t20\t7\t8\t5\t2014-01-03\t2014-08-03\n"), std::string::npos);
}

TEST(GrowthSvg, SegmentWidthsProportional) {
  Rng rng(5);
  const auto ids = names(500);
  const auto p = random_partition(ids, 25, rng);
  const auto rows = growth_report(p, random_cohort(ids, rng), {}, 0);
  const SvgLayout layout;
  const auto svg = emit_growth_svg(rows, layout);
  std::size_t max_total = 0;
  for (const auto& r : rows) max_total = std::max(max_total, r.total_size);
  const std::regex rect(R"re(<rect class="[a-z-]+" x="[-0-9.]+" y="[-0-9.]+" width="([0-9.]+)"[^>]*data-count="(\d+)")re");
  std::size_t seen = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    const double width = std::stod((*it)[1]);
    const double count = std::stod((*it)[2]);
    EXPECT_NEAR(width, count * layout.plot_width / static_cast<double>(max_total), 0.5);
    ++seen;
  }
  std::size_t nonzero = 0;
  for (const auto& r : rows) nonzero += (r.min_size_before > 0) + (r.recent_phi_count > 0) + (r.other_count > 0);
  EXPECT_EQ(seen, nonzero);
}

TEST(GrowthSvg, SingleSegmentAndDeterminism) {
  ClusterGrowthRow r;
  r.cluster_label = "7";
  r.total_size = 4;
  r.other_count = 4;
  const std::vector<ClusterGrowthRow> rows{r};
  const auto a = emit_growth_svg(rows);
  EXPECT_EQ(a, emit_growth_svg(rows));
  EXPECT_NE(a.find("class=\"other\""), std::string::npos);
  EXPECT_EQ(a.find("class=\"before\""), std::string::npos);
  EXPECT_EQ(a.find("class=\"recent-phi\""), std::string::npos);
  EXPECT_THROW(emit_growth_svg({}), Error);
}
