#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phyloclust/alignment.hpp"
#include "phyloclust/error.hpp"
#include "phyloclust/parallel.hpp"

namespace phyloclust {

/// Site counts for one pair of aligned sequences under pairwise deletion.
struct PairComparison {
  std::size_t compared_sites = 0;
  std::size_t mismatches = 0;
  std::size_t transitions = 0;    // A<->G, C<->T
  std::size_t transversions = 0;

  friend bool operator==(const PairComparison&, const PairComparison&) = default;
};

constexpr bool is_unambiguous_base(char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }
constexpr bool is_purine(char c) { return c == 'A' || c == 'G'; }

/// Sites where either residue is not A/C/G/T are dropped from every count.
inline PairComparison compare_pair(const SequenceRecord& x, const SequenceRecord& y) {
  if (x.residues.size() != y.residues.size())
    throw Error(ErrorKind::LengthMismatch, x.id + " vs " + y.id);
  PairComparison c;
  for (std::size_t i = 0; i < x.residues.size(); ++i) {
    const char a = x.residues[i];
    const char b = y.residues[i];
    if (!is_unambiguous_base(a) || !is_unambiguous_base(b)) continue;
    ++c.compared_sites;
    if (a == b) continue;
    ++c.mismatches;
    if (is_purine(a) == is_purine(b))
      ++c.transitions;
    else
      ++c.transversions;
  }
  return c;
}

inline std::optional<double> p_distance(const PairComparison& c) {
  if (c.compared_sites == 0) return std::nullopt;
  return static_cast<double>(c.mismatches) / static_cast<double>(c.compared_sites);
}

/// Kimura two-parameter distance; nullopt when nothing was compared or a log argument is <= 0.
inline std::optional<double> k80_from_proportions(double P, double Q) {
  const double a1 = 1.0 - 2.0 * P - Q;
  const double a2 = 1.0 - 2.0 * Q;
  if (a1 <= 0.0 || a2 <= 0.0) return std::nullopt;
  return -0.5 * std::log(a1) - 0.25 * std::log(a2);
}

inline std::optional<double> k80_distance(const PairComparison& c) {
  if (c.compared_sites == 0) return std::nullopt;
  const double n = static_cast<double>(c.compared_sites);
  return k80_from_proportions(static_cast<double>(c.transitions) / n, static_cast<double>(c.transversions) / n);
}

/// One-hot bitplanes per 64-site block: word [4*block + b] marks sites holding base b (A,C,G,T).
/// Ambiguity codes and gaps set no bit, which is exactly pairwise deletion.
class PackedSequence {
 public:
  explicit PackedSequence(std::string_view residues) : blocks_((residues.size() + 63) / 64), words_(4 * blocks_, 0) {
    for (std::size_t i = 0; i < residues.size(); ++i) {
      int b = -1;
      switch (residues[i]) {
        case 'A': b = 0; break;
        case 'C': b = 1; break;
        case 'G': b = 2; break;
        case 'T': b = 3; break;
        default: break;
      }
      if (b >= 0) words_[4 * (i / 64) + b] |= std::uint64_t{1} << (i % 64);
    }
  }

  std::size_t blocks() const { return blocks_; }
  const std::uint64_t* data() const { return words_.data(); }

 private:
  std::size_t blocks_;
  std::vector<std::uint64_t> words_;
};

inline PairComparison compare_packed(const PackedSequence& x, const PackedSequence& y) {
  PairComparison c;
  const std::uint64_t* a = x.data();
  const std::uint64_t* b = y.data();
  for (std::size_t k = 0; k < x.blocks(); ++k, a += 4, b += 4) {
    const std::uint64_t both = (a[0] | a[1] | a[2] | a[3]) & (b[0] | b[1] | b[2] | b[3]);
    const std::uint64_t same = (a[0] & b[0]) | (a[1] & b[1]) | (a[2] & b[2]) | (a[3] & b[3]);
    const std::uint64_t diff = both & ~same;
    const std::uint64_t purine_mismatch = (a[0] | a[2]) ^ (b[0] | b[2]);
    c.compared_sites += static_cast<std::size_t>(std::popcount(both));
    c.mismatches += static_cast<std::size_t>(std::popcount(diff));
    c.transversions += static_cast<std::size_t>(std::popcount(diff & purine_mismatch));
  }
  c.transitions = c.mismatches - c.transversions;
  return c;
}

enum class DistanceKind { PDistance, K80, Patristic };

inline std::string_view to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::PDistance: return "p";
    case DistanceKind::K80: return "k80";
    case DistanceKind::Patristic: return "patristic";
  }
  return "?";
}

enum class Definedness : std::uint8_t { Undefined = 0, Defined = 1, Capped = 2 };

/// Symmetric pairwise dissimilarities; only the strict upper triangle is stored.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::vector<std::string> ids, DistanceKind kind)
      : ids_(std::move(ids)),
        kind_(kind),
        values_(pair_count(ids_.size()), std::numeric_limits<double>::quiet_NaN()),
        flags_(values_.size(), Definedness::Undefined) {}

  static std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

  std::size_t size() const { return ids_.size(); }
  DistanceKind kind() const { return kind_; }
  const std::vector<std::string>& ids() const { return ids_; }

  /// NaN when undefined; 0 on the diagonal.
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return values_[slot(i, j)];
  }

  bool defined(std::size_t i, std::size_t j) const {
    return i == j || flags_[slot(i, j)] != Definedness::Undefined;
  }

  Definedness definedness(std::size_t i, std::size_t j) const {
    return i == j ? Definedness::Defined : flags_[slot(i, j)];
  }

  void set(std::size_t i, std::size_t j, std::optional<double> value) {
    const std::size_t s = slot(i, j);
    values_[s] = value.value_or(std::numeric_limits<double>::quiet_NaN());
    flags_[s] = value ? Definedness::Defined : Definedness::Undefined;
  }

  void set_capped(std::size_t i, std::size_t j, double value) {
    const std::size_t s = slot(i, j);
    values_[s] = value;
    flags_[s] = Definedness::Capped;
  }

  std::size_t count(Definedness d) const {
    std::size_t n = 0;
    for (auto f : flags_) n += f == d ? 1 : 0;
    return n;
  }

  bool all_defined() const { return count(Definedness::Undefined) == 0; }

  /// Row i with the diagonal entry included (0).
  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = (*this)(i, j);
    return out;
  }

  /// Upper-triangle values in row-major order (i<j).
  const std::vector<double>& triangle() const { return values_; }

 private:
  std::size_t slot(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    const std::size_t n = ids_.size();
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  }

  std::vector<std::string> ids_;
  DistanceKind kind_ = DistanceKind::PDistance;
  std::vector<double> values_;
  std::vector<Definedness> flags_;
};

/// What to do with pairs whose distance is undefined (no comparable sites, or K80 saturation).
struct SaturationPolicy {
  std::optional<double> cap;  // nullopt: leave undefined

  static SaturationPolicy undefined() { return {}; }
  static SaturationPolicy capped(double value) { return {value}; }
};

inline std::optional<double> distance_from(const PairComparison& c, DistanceKind kind) {
  switch (kind) {
    case DistanceKind::PDistance: return p_distance(c);
    case DistanceKind::K80: return k80_distance(c);
    case DistanceKind::Patristic: break;
  }
  throw Error(ErrorKind::InvalidArgument, "patristic distances come from a tree, not an alignment");
}

/// All n(n-1)/2 pairs, rows handed to `threads` workers; output does not depend on scheduling.
inline DistanceMatrix build_distance_matrix(const Alignment& alignment, DistanceKind kind,
                                            SaturationPolicy policy = SaturationPolicy::undefined(),
                                            unsigned threads = 0) {
  if (alignment.size() < 2) throw Error(ErrorKind::InvalidArgument, "distance matrix needs at least 2 sequences");
  if (kind == DistanceKind::Patristic)
    throw Error(ErrorKind::InvalidArgument, "patristic distances come from a tree, not an alignment");
  std::vector<PackedSequence> packed;
  packed.reserve(alignment.size());
  for (const auto& r : alignment) packed.emplace_back(r.residues);

  DistanceMatrix m(alignment.ids(), kind);
  const std::size_t n = alignment.size();
  parallel_for(
      n, threads,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          for (std::size_t j = i + 1; j < n; ++j) {
            const auto d = distance_from(compare_packed(packed[i], packed[j]), kind);
            if (!d && policy.cap)
              m.set_capped(i, j, *policy.cap);
            else
              m.set(i, j, d);
          }
      },
      4);
  return m;
}

}  // namespace phyloclust
