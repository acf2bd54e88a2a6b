#pragma once

#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phyloclust/error.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

struct SequenceRecord {
  std::string id;
  std::string residues;  // normalized: uppercase, U->T, '.'->'-'

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

/// True for the IUPAC nucleotide alphabet after normalization.
constexpr bool is_nucleotide_code(char c) {
  switch (c) {
    case 'A': case 'C': case 'G': case 'T':
    case 'R': case 'Y': case 'S': case 'W': case 'K': case 'M':
    case 'B': case 'D': case 'H': case 'V': case 'N': case '-':
      return true;
    default:
      return false;
  }
}

/// Upper-cases, maps U to T and '.' to '-'. Returns 0 for characters outside the alphabet.
constexpr char normalize_residue(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (c == 'U') c = 'T';
  if (c == '.') c = '-';
  return is_nucleotide_code(c) ? c : '\0';
}

/// Equal-length records with distinct ids, kept in input order.
class Alignment {
 public:
  Alignment() = default;

  explicit Alignment(std::vector<SequenceRecord> records) {
    for (auto& r : records) add(std::move(r));
  }

  /// Normalizes and validates one record.
  void add(SequenceRecord record) {
    if (record.id.empty()) throw Error(ErrorKind::BadFormat, "empty sequence id");
    for (char c : record.id)
      if (text::is_space(c)) throw Error(ErrorKind::BadFormat, "whitespace in id '" + record.id + "'");
    if (record.residues.empty()) throw Error(ErrorKind::BadFormat, "empty sequence for '" + record.id + "'");
    for (std::size_t site = 0; site < record.residues.size(); ++site) {
      const char n = normalize_residue(record.residues[site]);
      if (n == '\0')
        throw Error(ErrorKind::IllegalCharacter, std::string("'") + record.residues[site] + "' in '" + record.id +
                                                     "' at site " + std::to_string(site + 1));
      record.residues[site] = n;
    }
    if (!records_.empty() && record.residues.size() != length())
      throw Error(ErrorKind::RaggedAlignment, "expected " + std::to_string(length()) + " got " +
                                                  std::to_string(record.residues.size()) + " for '" + record.id + "'");
    if (!index_.try_emplace(record.id, records_.size()).second) throw Error(ErrorKind::DuplicateId, record.id);
    records_.push_back(std::move(record));
  }

  std::size_t size() const { return records_.size(); }
  std::size_t length() const { return records_.empty() ? 0 : records_.front().residues.size(); }
  bool empty() const { return records_.empty(); }

  const SequenceRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<SequenceRecord>& records() const { return records_; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.id);
    return out;
  }

  /// Index of `id`, or npos.
  std::size_t find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? npos : it->second;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const Alignment& a, const Alignment& b) { return a.records_ == b.records_; }

 private:
  std::vector<SequenceRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The id is the first whitespace-delimited token of the header; the rest of the header is ignored.
/// Sequence lines are joined and whitespace inside them is dropped.
inline Alignment parse_fasta(std::istream& in) {
  Alignment alignment;
  SequenceRecord current;
  bool open = false;
  auto flush = [&] {
    if (open) alignment.add(std::move(current));
    current = {};
  };
  std::string line;
  while (std::getline(in, line)) {
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '>') {
      flush();
      auto header = text::trim(trimmed.substr(1));
      const auto end = std::find_if(header.begin(), header.end(), text::is_space);
      current.id = std::string(header.begin(), end);
      if (current.id.empty()) throw Error(ErrorKind::BadFormat, "FASTA header without id");
      open = true;
      continue;
    }
    if (!open) throw Error(ErrorKind::BadFormat, "sequence data before first '>' header");
    for (char c : trimmed)
      if (!text::is_space(c)) current.residues += c;
  }
  flush();
  if (alignment.empty()) throw Error(ErrorKind::EmptyInput, "no FASTA records");
  return alignment;
}

inline Alignment parse_fasta(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

/// Writes normalized residues wrapped at `width` columns (0 = no wrapping).
inline std::string write_fasta(const Alignment& alignment, std::size_t width = 60) {
  std::string out;
  for (const auto& r : alignment) {
    out += '>';
    out += r.id;
    out += '\n';
    if (width == 0) {
      out += r.residues;
      out += '\n';
      continue;
    }
    for (std::size_t pos = 0; pos < r.residues.size(); pos += width) {
      out.append(r.residues, pos, width);
      out += '\n';
    }
  }
  return out;
}

}  // namespace phyloclust
