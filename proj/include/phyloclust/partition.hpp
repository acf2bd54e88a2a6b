#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <numeric>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phyloclust/error.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

/// Cluster membership of sequence ids. Labels are opaque tokens compared only for equality;
/// a label held by a single id is a singleton cluster.
class Partition {
 public:
  Partition() = default;

  /// Labels are "1".."K" numbered by first appearance of each membership code in `ids` order.
  template <typename Code>
  static Partition from_membership(std::span<const std::string> ids, std::span<const Code> membership) {
    if (ids.size() != membership.size())
      throw Error(ErrorKind::SizeMismatch, "ids and membership differ in length");
    Partition p;
    std::unordered_map<Code, std::size_t> relabel;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto [it, fresh] = relabel.try_emplace(membership[i], relabel.size() + 1);
      p.assign(ids[i], std::to_string(it->second));
    }
    return p;
  }

  template <typename Code>
  static Partition from_membership(const std::vector<std::string>& ids, const std::vector<Code>& membership) {
    return from_membership(std::span<const std::string>(ids), std::span<const Code>(membership));
  }

  /// Partition whose clusters are the given groups of indices into `ids`; unmentioned ids are singletons.
  static Partition from_groups(std::span<const std::string> ids, const std::vector<std::vector<std::size_t>>& groups) {
    std::vector<std::size_t> code(ids.size());
    std::iota(code.begin(), code.end(), groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (std::size_t i : groups[g]) code[i] = g;
    return from_membership(ids, std::span<const std::size_t>(code));
  }

  void assign(std::string id, std::string label) {
    if (id.empty()) throw Error(ErrorKind::InvalidArgument, "empty id");
    if (!index_.try_emplace(id, ids_.size()).second) throw Error(ErrorKind::DuplicateId, id);
    ids_.push_back(std::move(id));
    labels_.push_back(std::move(label));
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

  const std::string& label_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error(ErrorKind::UnassignedId, std::string(id));
    return labels_[it->second];
  }

  /// Dense cluster codes 0..K-1 for `order`, numbered by first appearance.
  std::vector<int> membership(std::span<const std::string> order) const {
    std::vector<int> out;
    out.reserve(order.size());
    std::unordered_map<std::string_view, int> code;
    for (const auto& id : order) {
      const std::string& label = label_of(id);
      auto [it, fresh] = code.try_emplace(label, static_cast<int>(code.size()));
      out.push_back(it->second);
    }
    return out;
  }
  std::vector<int> membership() const { return membership(ids_); }

  /// Clusters as lists of indices into ids(), ordered by first appearance.
  std::vector<std::vector<std::size_t>> clusters() const {
    std::vector<std::vector<std::size_t>> out;
    const auto codes = membership();
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (static_cast<std::size_t>(codes[i]) == out.size()) out.emplace_back();
      out[codes[i]].push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes;
    for (const auto& c : clusters()) sizes.push_back(c.size());
    return sizes;
  }

  std::size_t cluster_count() const { return clusters().size(); }

  /// Same id set and same co-clustering relation, labels ignored.
  bool same_grouping(const Partition& other) const {
    if (size() != other.size()) return false;
    for (const auto& id : ids_)
      if (!other.contains(id)) return false;
    return membership() == other.membership(ids_);
  }

  /// Restriction to the given ids, keeping labels.
  Partition restricted(std::span<const std::string> order) const {
    Partition p;
    for (const auto& id : order) p.assign(id, label_of(id));
    return p;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Two-column `id,label` CSV with header, rows sorted by id (byte order), LF line endings.
inline std::string write_partition(const Partition& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.ids()[a] < p.ids()[b]; });
  std::string out = "id,label\n";
  for (std::size_t i : order) {
    out += p.ids()[i];
    out += ',';
    out += p.labels()[i];
    out += '\n';
  }
  return out;
}

/// Reads `id,label` rows (comma or tab); an optional header row `id,label` is skipped.
inline Partition parse_partition(std::istream& in) {
  Partition p;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const char delim = trimmed.find('\t') != std::string_view::npos && trimmed.find(',') == std::string_view::npos ? '\t' : ',';
    const auto fields = text::split(trimmed, delim);
    if (fields.size() != 2)
      throw Error(ErrorKind::BadFormat, "partition row needs exactly two fields: " + std::string(trimmed));
    const auto id = text::trim(fields[0]);
    const auto label = text::trim(fields[1]);
    if (first && text::iequals(id, "id") && text::iequals(label, "label")) {
      first = false;
      continue;
    }
    first = false;
    p.assign(std::string(id), std::string(label));
  }
  return p;
}

inline Partition parse_partition(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_partition(in);
}

}  // namespace phyloclust
