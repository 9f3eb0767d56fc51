#include "efm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "efm/errors.hpp"
#include "efm/rng.hpp"

namespace efm {

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string bin_label(std::span<const double> edges, std::size_t bin) {
  if (bin == 0) return "<=" + format_double(edges[0]);
  return "(" + format_double(edges[bin - 1]) + "," + format_double(edges[bin]) + "]";
}

int require_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in CSV header");
  return static_cast<int>(it - header.begin());
}

}  // namespace

void SchemaSpec::validate() const {
  if (response_column.empty()) throw ConfigError("schema spec: response column is required");
  if (attribute_columns.empty() && numeric_columns.empty()) {
    throw ConfigError("schema spec: at least one attribute column is required");
  }
  if (key_columns.size() > 2) throw ConfigError("schema spec: at most two key columns (item, group)");
  for (const NumericColumn& nc : numeric_columns) {
    if (nc.bins < 2) throw ConfigError("schema spec: numeric column '" + nc.column + "' needs bins >= 2");
  }
}

EqualFrequencyBins discretize_equal_frequency(std::span<const double> values, int bins) {
  if (values.empty()) throw DataError("cannot discretize an empty value list");
  if (bins < 2) throw DataError("equal-frequency binning needs bins >= 2");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();

  std::size_t distinct = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] != sorted[i - 1]) ++distinct;
  }
  if (static_cast<std::size_t>(bins) > distinct) {
    throw DataError("degenerate binning: " + std::to_string(bins) + " bins but only " +
                    std::to_string(distinct) + " distinct values");
  }

  // Cut indices at the ideal quantile positions, pushed past ties so a tie
  // block always stays in the lower bin.
  std::vector<std::size_t> cuts;  // exclusive end index of each bin
  std::size_t prev = 0;
  for (int b = 1; b < bins; ++b) {
    std::size_t pos = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
    if (pos <= prev) pos = prev + 1;
    while (pos < n && sorted[pos] == sorted[pos - 1]) ++pos;
    if (pos >= n) break;
    cuts.push_back(pos);
    prev = pos;
  }
  cuts.push_back(n);

  EqualFrequencyBins out;
  out.upper_edges.reserve(cuts.size());
  for (std::size_t end : cuts) out.upper_edges.push_back(sorted[end - 1]);

  out.assignment.reserve(values.size());
  for (double v : values) out.assignment.push_back(assign_bin(out.upper_edges, v));
  return out;
}

int assign_bin(std::span<const double> upper_edges, double value) {
  if (upper_edges.empty()) throw DataError("assign_bin: no bin edges");
  for (std::size_t b = 0; b + 1 < upper_edges.size(); ++b) {
    if (value <= upper_edges[b]) return static_cast<int>(b);
  }
  return static_cast<int>(upper_edges.size()) - 1;
}

Dataset load_csv(const std::filesystem::path& path, const SchemaSpec& spec,
                 const LoadOptions& options) {
  spec.validate();
  if (options.role == DatasetRole::test && options.training_schema == nullptr) {
    throw ConfigError("test-role load requires the training schema");
  }

  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file is empty: " + path.string());
  std::vector<std::string> header = parse_csv_line(line);

  int response_col = require_column(header, spec.response_column);
  std::vector<int> key_cols;
  for (const std::string& kc : spec.key_columns) key_cols.push_back(require_column(header, kc));

  struct ColumnPlan {
    std::string name;
    int column;
    bool numeric;
    int bins;
  };
  std::vector<ColumnPlan> plan;
  for (const std::string& ac : spec.attribute_columns) {
    plan.push_back({ac, require_column(header, ac), false, 0});
  }
  for (const NumericColumn& nc : spec.numeric_columns) {
    plan.push_back({nc.column, require_column(header, nc.column), true, nc.bins});
  }

  std::vector<std::vector<std::string>> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> rec = parse_csv_line(line);
    if (rec.size() != header.size()) {
      throw DataError("row " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.size()));
    }
    records.push_back(std::move(rec));
  }

  Dataset data;
  data.role = options.role;

  const bool training = options.role == DatasetRole::training;
  if (training) {
    for (const ColumnPlan& cp : plan) data.schema.attributes.push_back({cp.name, {}, {}});
  } else {
    data.schema = *options.training_schema;
    for (const ColumnPlan& cp : plan) {
      if (data.schema.attribute_index(cp.name) < 0) {
        throw DataError("attribute '" + cp.name + "' is not in the training schema");
      }
    }
  }

  // Training-role numeric columns are binned before rows are encoded.
  std::map<std::string, EqualFrequencyBins> numeric_bins;
  if (training) {
    for (const ColumnPlan& cp : plan) {
      if (!cp.numeric) continue;
      std::vector<double> values;
      for (std::size_t r = 0; r < records.size(); ++r) {
        const std::string& cell = records[r][static_cast<std::size_t>(cp.column)];
        if (cell.empty()) continue;
        double v;
        if (!parse_double(cell, v)) {
          throw DataError("row " + std::to_string(r + 2) + ": non-numeric value '" + cell +
                          "' in numeric column " + cp.name);
        }
        values.push_back(v);
      }
      if (values.empty()) throw DataError("numeric column '" + cp.name + "' has no values");
      EqualFrequencyBins bins = discretize_equal_frequency(values, cp.bins);
      Attribute& attr = data.schema.attributes[static_cast<std::size_t>(
          data.schema.attribute_index(cp.name))];
      for (std::size_t b = 0; b < bins.upper_edges.size(); ++b) {
        attr.levels.push_back(bin_label(bins.upper_edges, b));
      }
      attr.bin_upper_edges = bins.upper_edges;
      numeric_bins.emplace(cp.name, std::move(bins));
    }
  }

  auto ensure_level = [&](Attribute& attr, const std::string& level) -> int {
    int idx = attr.level_index(level);
    if (idx >= 0) return idx;
    if (!training) {
      if (options.remap_unseen_to_missing) {
        int missing = attr.level_index(kMissingLevel);
        if (missing >= 0) return missing;
        throw DataError("cannot remap unseen level '" + level + "': attribute " + attr.name +
                        " has no missing level in the training schema");
      }
      throw DataError("unseen level '" + level + "' for attribute " + attr.name);
    }
    attr.levels.push_back(level);
    return static_cast<int>(attr.levels.size()) - 1;
  };

  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::vector<std::string>& rec = records[r];
    Observation obs;

    if (key_cols.empty()) {
      obs.key.item = std::to_string(r + 1);
    } else {
      obs.key.item = rec[static_cast<std::size_t>(key_cols[0])];
      if (key_cols.size() > 1) obs.key.group = rec[static_cast<std::size_t>(key_cols[1])];
    }

    const std::string& resp_cell = rec[static_cast<std::size_t>(response_col)];
    double resp;
    if (!parse_double(resp_cell, resp)) {
      throw DataError("row " + std::to_string(r + 2) + ": non-numeric response '" + resp_cell + "'");
    }
    if (!(resp > 0.0)) {
      throw DataError("row " + std::to_string(r + 2) + ": response must be positive, got " +
                      resp_cell);
    }
    obs.response = resp;

    obs.active_levels.resize(data.schema.attributes.size(), -1);
    for (const ColumnPlan& cp : plan) {
      int attr_idx = data.schema.attribute_index(cp.name);
      Attribute& attr = data.schema.attributes[static_cast<std::size_t>(attr_idx)];
      const std::string& cell = rec[static_cast<std::size_t>(cp.column)];

      int level;
      if (cell.empty() || cell == kMissingLevel) {
        level = ensure_level(attr, kMissingLevel);
      } else if (cp.numeric) {
        bool is_number = false;
        double v = 0.0;
        if (!attr.bin_upper_edges.empty()) is_number = parse_double(cell, v);
        if (is_number) {
          level = assign_bin(attr.bin_upper_edges, v);
        } else {
          // A written dataset stores bin labels; accept them verbatim.
          level = ensure_level(attr, cell);
        }
      } else {
        level = ensure_level(attr, cell);
      }
      obs.active_levels[static_cast<std::size_t>(attr_idx)] = level;
    }
    data.rows.push_back(std::move(obs));
  }

  data.schema.validate();
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const SchemaSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open CSV file for writing: " + path.string());

  std::vector<std::string> header = spec.key_columns;
  for (const Attribute& attr : data.schema.attributes) header.push_back(attr.name);
  header.push_back(spec.response_column);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(header[i]);
  }
  out << '\n';

  for (const Observation& row : data.rows) {
    std::vector<std::string> cells;
    if (!spec.key_columns.empty()) {
      cells.push_back(row.key.item);
      if (spec.key_columns.size() > 1) cells.push_back(row.key.group);
    }
    for (std::size_t c = 0; c < data.schema.attributes.size(); ++c) {
      const std::string& level =
          data.schema.attributes[c].levels[static_cast<std::size_t>(row.active_levels[c])];
      cells.push_back(level == kMissingLevel ? std::string() : level);
    }
    cells.push_back(format_double(row.response));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << '\n';
  }
}

std::pair<Dataset, Dataset> split_by_key(
    const Dataset& data, const std::function<bool(const RowKey&)>& in_train) {
  Dataset train{data.schema, {}, DatasetRole::training};
  Dataset test{data.schema, {}, DatasetRole::test};
  for (const Observation& row : data.rows) {
    (in_train(row.key) ? train : test).rows.push_back(row);
  }
  if (train.rows.empty()) throw DataError("split produced an empty training set");
  if (test.rows.empty()) throw DataError("split produced an empty test set");
  return {std::move(train), std::move(test)};
}

KFoldPartition partition_kfold(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("k-fold partition requires k >= 2");
  if (static_cast<std::size_t>(k) > data.rows.size()) {
    throw DataError("cannot make " + std::to_string(k) + " folds from " +
                    std::to_string(data.rows.size()) + " rows");
  }
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  DeterministicRng rng(seed);
  rng.shuffle(order);

  KFoldPartition part;
  part.k = k;
  part.seed = seed;
  part.fold_of_row.resize(data.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    part.fold_of_row[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  part.validate(data.rows.size());
  return part;
}

}  // namespace efm
