#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace efm {

// Synthetic level assigned to empty cells.
inline constexpr const char* kMissingLevel = "<missing>";

struct Attribute {
  std::string name;
  std::vector<std::string> levels;
  // Upper bin edges from equal-frequency discretization, one per level,
  // ascending. Empty for plain categorical attributes. Kept so test data can
  // be binned with the training boundaries.
  std::vector<double> bin_upper_edges;

  // -1 when the level name is unknown.
  int level_index(const std::string& level) const;
};

struct AttributeSchema {
  std::vector<Attribute> attributes;

  int attribute_index(const std::string& name) const;

  // All unordered attribute pairs (c, c') with c < c'.
  std::vector<std::pair<int, int>> interaction_universe() const;

  std::uint64_t content_hash() const;

  // Throws DataError on duplicate attribute names or duplicate levels
  // within an attribute.
  void validate() const;
};

struct RowKey {
  std::string item;
  std::string group;

  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct Observation {
  RowKey key;
  std::vector<int> active_levels;  // one level index per schema attribute
  double response = 0.0;           // > 0
};

enum class DatasetRole { training, test };

struct Dataset {
  AttributeSchema schema;
  std::vector<Observation> rows;
  DatasetRole role = DatasetRole::training;

  std::vector<double> responses() const;
};

struct KFoldPartition {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of_row;  // aligned with Dataset::rows, values in [0, k)

  // Throws DataError unless folds are disjoint, cover all rows and differ in
  // size by at most one.
  void validate(std::size_t n_rows) const;
};

}  // namespace efm
