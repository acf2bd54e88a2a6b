#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "phyloclust/date.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

enum class Stage { PHI, ChronicUntreated, ChronicTreated, Unknown };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::PHI: return "PHI";
    case Stage::ChronicUntreated: return "CHRONIC_UNTREATED";
    case Stage::ChronicTreated: return "CHRONIC_TREATED";
    case Stage::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

inline std::optional<Stage> parse_stage(std::string_view token) {
  for (Stage s : {Stage::PHI, Stage::ChronicUntreated, Stage::ChronicTreated, Stage::Unknown})
    if (text::iequals(token, to_string(s))) return s;
  return std::nullopt;
}

inline bool is_chronic(Stage s) { return s == Stage::ChronicUntreated || s == Stage::ChronicTreated; }

struct CaseMetadata {
  std::string id;
  Date collection_date;
  Stage stage = Stage::Unknown;
  std::string risk_group;

  friend bool operator==(const CaseMetadata&, const CaseMetadata&) = default;
};

/// Header row must name id, collection_date, stage and risk_group in any order; extra columns are ignored.
/// Comma-delimited unless the header contains tabs and no commas.
inline std::vector<CaseMetadata> parse_metadata(std::istream& in) {
  std::string line;
  std::string_view header;
  while (std::getline(in, line)) {
    header = text::trim(line);
    if (!header.empty()) break;
  }
  if (header.empty()) throw Error(ErrorKind::EmptyInput, "metadata table has no header");
  const char delim = header.find(',') == std::string_view::npos && header.find('\t') != std::string_view::npos ? '\t' : ',';

  constexpr std::array<std::string_view, 4> required{"id", "collection_date", "stage", "risk_group"};
  std::array<std::size_t, 4> column{};
  {
    const auto names = text::split(header, delim);
    for (std::size_t r = 0; r < required.size(); ++r) {
      std::size_t found = names.size();
      for (std::size_t c = 0; c < names.size(); ++c)
        if (text::iequals(text::trim(names[c]), required[r])) found = c;
      if (found == names.size()) throw Error(ErrorKind::MissingColumn, std::string(required[r]));
      column[r] = found;
    }
  }

  std::vector<CaseMetadata> rows;
  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    ++row;
    const auto fields = text::split(trimmed, delim);
    auto field = [&](std::size_t r) -> std::string_view {
      if (column[r] >= fields.size())
        throw Error(ErrorKind::BadFormat, "row " + std::to_string(row) + " has too few fields");
      return text::trim(fields[column[r]]);
    };
    CaseMetadata m;
    m.id = std::string(field(0));
    if (m.id.empty()) throw Error(ErrorKind::BadFormat, "row " + std::to_string(row) + " has an empty id");
    const auto date = Date::parse(field(1));
    if (!date) throw Error(ErrorKind::BadDate, "row " + std::to_string(row) + ": '" + std::string(field(1)) + "'");
    m.collection_date = *date;
    const auto stage = parse_stage(field(2));
    if (!stage)
      throw Error(ErrorKind::UnknownStage, "'" + std::string(field(2)) + "' at row " + std::to_string(row));
    m.stage = *stage;
    m.risk_group = std::string(field(3));
    if (!seen.insert(m.id).second) throw Error(ErrorKind::DuplicateId, m.id);
    rows.push_back(std::move(m));
  }
  return rows;
}

inline std::vector<CaseMetadata> parse_metadata(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_metadata(in);
}

inline std::string write_metadata(const std::vector<CaseMetadata>& rows) {
  std::string out = "id,collection_date,stage,risk_group\n";
  for (const auto& m : rows) {
    out += m.id;
    out += ',';
    out += m.collection_date.iso();
    out += ',';
    out += to_string(m.stage);
    out += ',';
    out += m.risk_group;
    out += '\n';
  }
  return out;
}

}  // namespace phyloclust
