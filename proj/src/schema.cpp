#include "efm/schema.hpp"

#include <algorithm>
#include <set>

#include "efm/errors.hpp"

namespace efm {

int Attribute::level_index(const std::string& level) const {
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (levels[j] == level) return static_cast<int>(j);
  }
  return -1;
}

int AttributeSchema::attribute_index(const std::string& name) const {
  for (std::size_t c = 0; c < attributes.size(); ++c) {
    if (attributes[c].name == name) return static_cast<int>(c);
  }
  return -1;
}

std::vector<std::pair<int, int>> AttributeSchema::interaction_universe() const {
  std::vector<std::pair<int, int>> pairs;
  int a = static_cast<int>(attributes.size());
  pairs.reserve(static_cast<std::size_t>(a) * (a - 1) / 2);
  for (int c = 0; c < a; ++c) {
    for (int cp = c + 1; cp < a; ++cp) pairs.emplace_back(c, cp);
  }
  return pairs;
}

std::uint64_t AttributeSchema::content_hash() const {
  // FNV-1a over a canonical rendering of names, levels and bin edges.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  for (const Attribute& attr : attributes) {
    mix(attr.name);
    for (const std::string& lvl : attr.levels) mix(lvl);
    for (double e : attr.bin_upper_edges) mix(std::to_string(e));
  }
  return h;
}

void AttributeSchema::validate() const {
  std::set<std::string> names;
  for (const Attribute& attr : attributes) {
    if (!names.insert(attr.name).second) {
      throw DataError("duplicate attribute name: " + attr.name);
    }
    std::set<std::string> lvls;
    for (const std::string& lvl : attr.levels) {
      if (!lvls.insert(lvl).second) {
        throw DataError("duplicate level '" + lvl + "' in attribute " + attr.name);
      }
    }
  }
}

std::vector<double> Dataset::responses() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const Observation& row : rows) out.push_back(row.response);
  return out;
}

void KFoldPartition::validate(std::size_t n_rows) const {
  if (k < 2) throw DataError("k-fold partition requires k >= 2");
  if (fold_of_row.size() != n_rows) {
    throw DataError("fold assignment does not cover all rows");
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold_of_row) {
    if (f < 0 || f >= k) throw DataError("fold index out of range");
    ++sizes[static_cast<std::size_t>(f)];
  }
  auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*lo == 0) throw DataError("empty fold");
  if (*hi - *lo > 1) throw DataError("fold sizes differ by more than one");
}

}  // namespace efm
