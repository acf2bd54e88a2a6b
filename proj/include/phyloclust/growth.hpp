#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phyloclust/date.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/metadata.hpp"
#include "phyloclust/partition.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

struct GrowthWindow {
  Date window_start = Date::ymd(2012, 1, 1);
  Date phi_reliable_start = Date::ymd(2012, 7, 1);
  Date window_end = Date::ymd(2016, 2, 1);

  void validate() const {
    if (!(window_start < phi_reliable_start && phi_reliable_start < window_end))
      throw Error(ErrorKind::InvalidArgument, "growth window dates must be strictly increasing");
  }

  /// PHI sampled inside [phi_reliable_start, window_end]: infected inside the window.
  bool recent_phi(const CaseMetadata& m) const {
    return m.stage == Stage::PHI && m.collection_date >= phi_reliable_start && m.collection_date <= window_end;
  }

  /// Chronic case sampled before phi_reliable_start: assumed infected before the window.
  bool chronic_before(const CaseMetadata& m) const {
    return is_chronic(m.stage) && m.collection_date < phi_reliable_start;
  }
};

struct ClusterGrowthRow {
  std::string cluster_label;
  std::size_t total_size = 0;
  std::size_t min_size_before = 0;
  std::size_t recent_phi_count = 0;
  std::size_t other_count = 0;
  std::optional<Date> first_recent_phi;
  std::optional<Date> last_recent_phi;

  /// Growth lower bound over the window.
  std::size_t growth_lower_bound() const { return recent_phi_count; }

  friend bool operator==(const ClusterGrowthRow&, const ClusterGrowthRow&) = default;
};

namespace detail {

inline std::unordered_map<std::string, const CaseMetadata*> index_metadata(const std::vector<CaseMetadata>& meta) {
  std::unordered_map<std::string, const CaseMetadata*> out;
  for (const auto& m : meta) out.emplace(m.id, &m);
  return out;
}

// Numeric labels compare as numbers, others byte-wise; numbers sort first.
inline bool label_less(const std::string& a, const std::string& b) {
  const auto x = text::to_double(a), y = text::to_double(b);
  if (x && y && *x != *y) return *x < *y;
  if (x.has_value() != y.has_value()) return x.has_value();
  return a < b;
}

}  // namespace detail

/// One row per cluster for the `top_k` largest clusters (0 = all), largest first, ties by label.
inline std::vector<ClusterGrowthRow> growth_report(const Partition& p, const std::vector<CaseMetadata>& meta,
                                                   const GrowthWindow& w = {}, std::size_t top_k = 30) {
  w.validate();
  const auto index = detail::index_metadata(meta);
  std::map<std::string, ClusterGrowthRow> by_label;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto it = index.find(p.ids()[i]);
    if (it == index.end()) throw Error(ErrorKind::MissingMetadata, p.ids()[i]);
    const CaseMetadata& m = *it->second;
    auto& row = by_label[p.labels()[i]];
    row.cluster_label = p.labels()[i];
    ++row.total_size;
    if (w.chronic_before(m)) {
      ++row.min_size_before;
    } else if (w.recent_phi(m)) {
      ++row.recent_phi_count;
      if (!row.first_recent_phi || m.collection_date < *row.first_recent_phi) row.first_recent_phi = m.collection_date;
      if (!row.last_recent_phi || m.collection_date > *row.last_recent_phi) row.last_recent_phi = m.collection_date;
    } else {
      ++row.other_count;
    }
  }
  std::vector<ClusterGrowthRow> rows;
  for (auto& [label, row] : by_label) rows.push_back(std::move(row));
  std::sort(rows.begin(), rows.end(), [](const ClusterGrowthRow& a, const ClusterGrowthRow& b) {
    if (a.total_size != b.total_size) return a.total_size > b.total_size;
    return detail::label_less(a.cluster_label, b.cluster_label);
  });
  if (top_k > 0 && rows.size() > top_k) rows.resize(top_k);
  return rows;
}

struct PhiBreakdown {
  std::size_t singleton_count = 0;
  std::size_t pair_count = 0;
  std::size_t ge5_count = 0;
  std::size_t other_count = 0;  // clusters of size 3 or 4
  std::size_t total_recent_phi = 0;

  friend bool operator==(const PhiBreakdown&, const PhiBreakdown&) = default;
};

/// Classifies every recent PHI by the size of the cluster that holds it.
inline PhiBreakdown phi_breakdown(const Partition& p, const std::vector<CaseMetadata>& meta, const GrowthWindow& w = {}) {
  w.validate();
  const auto index = detail::index_metadata(meta);
  std::unordered_map<std::string, std::size_t> size;
  for (const auto& label : p.labels()) ++size[label];
  PhiBreakdown b;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto it = index.find(p.ids()[i]);
    if (it == index.end()) throw Error(ErrorKind::MissingMetadata, p.ids()[i]);
    if (!w.recent_phi(*it->second)) continue;
    ++b.total_recent_phi;
    const std::size_t k = size[p.labels()[i]];
    if (k == 1)
      ++b.singleton_count;
    else if (k == 2)
      ++b.pair_count;
    else if (k >= 5)
      ++b.ge5_count;
    else
      ++b.other_count;
  }
  return b;
}

inline std::string recent_phi_dates(const ClusterGrowthRow& row) {
  if (row.recent_phi_count == 0) return {};
  if (row.recent_phi_count == 1 || *row.first_recent_phi == *row.last_recent_phi) return row.first_recent_phi->iso();
  return row.first_recent_phi->iso() + " - " + row.last_recent_phi->iso();
}

inline std::string write_growth_tsv(const std::vector<ClusterGrowthRow>& rows) {
  std::string out = "cluster\ttotal_size\tmin_size_before\trecent_phi\tother\tfirst_recent_phi\tlast_recent_phi\n";
  for (const auto& r : rows) {
    out += r.cluster_label + '\t' + std::to_string(r.total_size) + '\t' + std::to_string(r.min_size_before) + '\t' +
           std::to_string(r.recent_phi_count) + '\t' + std::to_string(r.other_count) + '\t' +
           (r.first_recent_phi ? r.first_recent_phi->iso() : std::string("NA")) + '\t' +
           (r.last_recent_phi ? r.last_recent_phi->iso() : std::string("NA")) + '\n';
  }
  return out;
}

struct SvgLayout {
  double plot_width = 500.0;
  double bar_height = 14.0;
  double bar_gap = 4.0;
  double left_margin = 90.0;
  double right_margin = 200.0;
  double top_margin = 30.0;
};

/// Horizontal stacked bars (chronic-before, recent PHI, other), widths proportional to counts,
/// recent-PHI dates printed after each bar.
inline std::string emit_growth_svg(const std::vector<ClusterGrowthRow>& rows, const SvgLayout& layout = {}) {
  if (rows.empty()) throw Error(ErrorKind::EmptyList, "no rows to draw");
  std::size_t max_total = 0;
  for (const auto& r : rows) max_total = std::max(max_total, r.total_size);
  const double scale = max_total ? layout.plot_width / static_cast<double>(max_total) : 0.0;
  const double width = layout.left_margin + layout.plot_width + layout.right_margin;
  const double height =
      layout.top_margin + static_cast<double>(rows.size()) * (layout.bar_height + layout.bar_gap) + layout.bar_gap;
  auto num = [](double v) { return text::fixed(v, 2); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<g class=\"legend\">\n";
  const char* legend[] = {"minimum size before window", "recent PHI", "other"};
  const char* colour[] = {"#8b0000", "#f4a582", "#bdbdbd"};
  for (int k = 0; k < 3; ++k) {
    const double x = layout.left_margin + 170.0 * k;
    svg += "<rect x=\"" + num(x) + "\" y=\"6.00\" width=\"10.00\" height=\"10.00\" fill=\"" + colour[k] + "\"/>";
    svg += "<text x=\"" + num(x + 14.0) + "\" y=\"15.00\">" + legend[k] + "</text>\n";
  }
  svg += "</g>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = layout.top_margin + static_cast<double>(i) * (layout.bar_height + layout.bar_gap);
    svg += "<g class=\"bar\" data-cluster=\"" + r.cluster_label + "\">\n";
    svg += "<text x=\"" + num(layout.left_margin - 6.0) + "\" y=\"" + num(y + layout.bar_height - 3.0) +
           "\" text-anchor=\"end\">" + r.cluster_label + "</text>\n";
    double x = layout.left_margin;
    const std::size_t counts[] = {r.min_size_before, r.recent_phi_count, r.other_count};
    const char* segment[] = {"before", "recent-phi", "other"};
    for (int k = 0; k < 3; ++k) {
      const double w = scale * static_cast<double>(counts[k]);
      if (counts[k] > 0)
        svg += "<rect class=\"" + std::string(segment[k]) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
               num(w) + "\" height=\"" + num(layout.bar_height) + "\" fill=\"" + colour[k] + "\" data-count=\"" +
               std::to_string(counts[k]) + "\"/>\n";
      x += w;
    }
    const auto dates = recent_phi_dates(r);
    if (!dates.empty())
      svg += "<text x=\"" + num(x + 6.0) + "\" y=\"" + num(y + layout.bar_height - 3.0) + "\">" + dates + "</text>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace phyloclust
