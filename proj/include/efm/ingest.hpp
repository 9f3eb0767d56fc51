#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <utility>

#include "efm/schema.hpp"

namespace efm {

struct NumericColumn {
  std::string column;
  int bins = 4;
};

// Sidecar description of how CSV columns map onto a schema: response column,
// categorical attribute columns, numeric columns to discretize and optional
// key columns (item, then group).
struct SchemaSpec {
  std::string response_column;
  std::vector<std::string> attribute_columns;
  std::vector<NumericColumn> numeric_columns;
  std::vector<std::string> key_columns;

  void validate() const;
};

struct LoadOptions {
  DatasetRole role = DatasetRole::training;
  // Required for the test role; levels and bin edges are taken from here.
  const AttributeSchema* training_schema = nullptr;
  // When set, test rows with levels absent from the training schema are
  // mapped to the synthetic missing level instead of raising an error.
  bool remap_unseen_to_missing = false;
};

Dataset load_csv(const std::filesystem::path& path, const SchemaSpec& spec,
                 const LoadOptions& options = {});

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const SchemaSpec& spec);

struct EqualFrequencyBins {
  std::vector<double> upper_edges;  // one per bin, ascending
  std::vector<int> assignment;      // bin index per input value
};

// Equal-frequency binning; ties merge into the lower bin, so bin sizes may
// deviate when values repeat. Throws DataError when bins exceed the number
// of distinct values.
EqualFrequencyBins discretize_equal_frequency(std::span<const double> values, int bins);

// Values outside the training edges clamp to the nearest boundary bin.
int assign_bin(std::span<const double> upper_edges, double value);

std::pair<Dataset, Dataset> split_by_key(
    const Dataset& data, const std::function<bool(const RowKey&)>& in_train);

KFoldPartition partition_kfold(const Dataset& data, int k, std::uint64_t seed);

}  // namespace efm
