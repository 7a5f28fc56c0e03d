#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "condlabel/matrix.hpp"

namespace condlabel {

/// Label vocabulary with one d-dimensional word vector per label.
///
/// Row i of vectors() belongs to labels()[i]. Names are unique,
/// case-sensitive, and contain no whitespace. The table is immutable once
/// built, so concurrent readers need no synchronization.
class LabelEmbeddingTable {
 public:
  /// Throws InvalidArgument if the invariants above do not hold, if there are
  /// fewer than two labels, or if any component is non-finite.
  LabelEmbeddingTable(std::vector<std::string> labels, Matrix vectors);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return vectors_.cols; }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Matrix& vectors() const noexcept { return vectors_; }
  const std::string& name(std::size_t index) const;

  std::optional<std::size_t> index_of(std::string_view label) const;

  /// Throws NotFound for unknown labels or out-of-range indices.
  std::span<const double> lookup(std::string_view label) const;
  std::span<const double> lookup(std::size_t index) const;

  /// Copy with every row scaled to unit L2 norm (zero rows stay zero).
  LabelEmbeddingTable normalized() const;

  bool operator==(const LabelEmbeddingTable& other) const {
    return labels_ == other.labels_ && vectors_ == other.vectors_;
  }

 private:
  std::vector<std::string> labels_;
  Matrix vectors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Reads the "count dim" header text format. Vectors are used as stored
/// unless `normalize` is set.
LabelEmbeddingTable load_embeddings(const std::filesystem::path& path, bool normalize = false);
LabelEmbeddingTable parse_embeddings(std::string_view text, const std::string& source = "<memory>",
                                     bool normalize = false);

/// Writes with shortest round-trip decimal formatting, so load(save(t)) == t.
void save_embeddings(const LabelEmbeddingTable& table, const std::filesystem::path& path);
std::string format_embeddings(const LabelEmbeddingTable& table);

/// Labels "L0".."L{n-1}" with i.i.d. standard-normal components, each row
/// L2-normalized. Pure function of its arguments.
LabelEmbeddingTable random_embeddings(std::size_t num_labels, std::size_t d, std::uint64_t seed);

}  // namespace condlabel
