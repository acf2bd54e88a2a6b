#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phyloclust/distance.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/text.hpp"

namespace phyloclust {

/// Binary triangle: "PCDM", version byte, n as u64 LE, then the strict upper triangle
/// (i<j, row-major) as f64 LE. NaN marks an undefined entry.
struct PackedTriangle {
  std::uint64_t n = 0;
  std::vector<double> values;
};

inline constexpr std::uint8_t kPcdmVersion = 1;

inline std::string write_pcdm(std::uint64_t n, std::span<const double> upper) {
  if (upper.size() != DistanceMatrix::pair_count(n))
    throw Error(ErrorKind::SizeMismatch, "triangle size does not match n");
  std::string out = "PCDM";
  out += static_cast<char>(kPcdmVersion);
  auto put_u64 = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out += static_cast<char>((v >> (8 * b)) & 0xff);
  };
  put_u64(n);
  for (double v : upper) put_u64(std::bit_cast<std::uint64_t>(v));
  return out;
}

inline std::string write_pcdm(const DistanceMatrix& m) { return write_pcdm(m.size(), m.triangle()); }

inline PackedTriangle read_pcdm(std::string_view bytes) {
  if (bytes.size() < 13 || bytes.substr(0, 4) != "PCDM") throw Error(ErrorKind::BadFormat, "missing PCDM magic");
  if (static_cast<std::uint8_t>(bytes[4]) != kPcdmVersion)
    throw Error(ErrorKind::BadFormat, "unsupported PCDM version " + std::to_string(static_cast<int>(bytes[4])));
  auto get_u64 = [&](std::size_t pos) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[pos + b])) << (8 * b);
    return v;
  };
  PackedTriangle t;
  t.n = get_u64(5);
  const std::uint64_t count = DistanceMatrix::pair_count(t.n);
  if (bytes.size() != 13 + 8 * count) throw Error(ErrorKind::BadFormat, "PCDM payload has wrong length");
  t.values.resize(count);
  for (std::uint64_t k = 0; k < count; ++k) t.values[k] = std::bit_cast<double>(get_u64(13 + 8 * k));
  return t;
}

/// Rebuilds a distance matrix from a PCDM triangle; ids default to "0".."n-1".
inline DistanceMatrix distance_matrix_from_pcdm(const PackedTriangle& t, std::vector<std::string> ids,
                                                DistanceKind kind) {
  if (ids.empty())
    for (std::uint64_t i = 0; i < t.n; ++i) ids.push_back(std::to_string(i));
  if (ids.size() != t.n) throw Error(ErrorKind::SizeMismatch, "id list does not match matrix size");
  DistanceMatrix m(std::move(ids), kind);
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.n; ++i)
    for (std::size_t j = i + 1; j < t.n; ++j, ++k)
      m.set(i, j, std::isnan(t.values[k]) ? std::nullopt : std::optional<double>(t.values[k]));
  return m;
}

/// Square PHYLIP: first line n, then one row per sequence. Undefined entries are written as NA.
inline std::string write_phylip(const DistanceMatrix& m) {
  std::string out = std::to_string(m.size()) + "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.ids()[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += ' ';
      out += m.defined(i, j) ? text::format_double(m(i, j)) : std::string("NA");
    }
    out += '\n';
  }
  return out;
}

inline DistanceMatrix parse_phylip(std::string_view text, DistanceKind kind) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  if (!(in >> n) || n == 0) throw Error(ErrorKind::BadFormat, "PHYLIP header must be a positive count");
  std::vector<std::string> ids(n);
  std::vector<std::vector<std::string>> cells(n, std::vector<std::string>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> ids[i])) throw Error(ErrorKind::BadFormat, "PHYLIP row " + std::to_string(i + 1) + " missing");
    for (std::size_t j = 0; j < n; ++j)
      if (!(in >> cells[i][j])) throw Error(ErrorKind::BadFormat, "PHYLIP row " + std::to_string(i + 1) + " short");
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorKind::TrailingGarbage, "text after PHYLIP matrix");
  DistanceMatrix m(ids, kind);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (cells[i][j] != cells[j][i]) throw Error(ErrorKind::BadFormat, "PHYLIP matrix not symmetric");
      if (cells[i][j] == "NA") {
        m.set(i, j, std::nullopt);
        continue;
      }
      const auto v = text::to_double(cells[i][j]);
      if (!v || *v < 0) throw Error(ErrorKind::BadFormat, "bad distance '" + cells[i][j] + "'");
      m.set(i, j, *v);
    }
  return m;
}

}  // namespace phyloclust
