#include "efm/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <string>

#include "efm/errors.hpp"

namespace efm {

namespace {

std::atomic<long> g_clamp_count{0};

constexpr double kExponentClamp = 500.0;

}  // namespace

namespace detail {

double clamped_exp(double score) {
  if (score > kExponentClamp || score < -kExponentClamp) {
    g_clamp_count.fetch_add(1, std::memory_order_relaxed);
    score = std::clamp(score, -kExponentClamp, kExponentClamp);
  }
  return std::exp(score);
}

}  // namespace detail

namespace {

const std::vector<double>& beta_row(const ParameterSet& params, int attr) {
  auto it = params.beta.find(attr);
  if (it == params.beta.end()) {
    throw MissingParameterError("no beta parameters for attribute " + std::to_string(attr));
  }
  return it->second;
}

const std::vector<std::vector<double>>& mu_rows(const ParameterSet& params, int attr) {
  auto it = params.mu.find(attr);
  if (it == params.mu.end()) {
    throw MissingParameterError("no mu parameters for attribute " + std::to_string(attr));
  }
  return it->second;
}

const std::vector<double>& mu_row(const ParameterSet& params, int attr, int level) {
  const auto& rows = mu_rows(params, attr);
  if (level < 0 || static_cast<std::size_t>(level) >= rows.size()) {
    throw MissingParameterError("no mu parameters for attribute " + std::to_string(attr) +
                                " level " + std::to_string(level));
  }
  return rows[static_cast<std::size_t>(level)];
}

}  // namespace

std::vector<int> FeatureConfig::interacting_attributes() const {
  std::set<int> attrs;
  for (auto [c, cp] : interactions) {
    attrs.insert(c);
    attrs.insert(cp);
  }
  return {attrs.begin(), attrs.end()};
}

bool FeatureConfig::has_attribute(int c) const {
  return std::find(attributes.begin(), attributes.end(), c) != attributes.end();
}

bool FeatureConfig::has_interaction(std::pair<int, int> pair) const {
  return std::find(interactions.begin(), interactions.end(), pair) != interactions.end();
}

void FeatureConfig::validate(const AttributeSchema& schema) const {
  int a = static_cast<int>(schema.attributes.size());
  for (int c : attributes) {
    if (c < 0 || c >= a) throw DataError("feature attribute index out of range");
  }
  for (auto [c, cp] : interactions) {
    if (c < 0 || cp < 0 || c >= a || cp >= a) {
      throw DataError("interaction attribute index out of range");
    }
    if (c >= cp) throw DataError("interactions must pair two distinct attributes, first < second");
  }
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 1;
  for (const auto& [attr, row] : beta) n += row.size();
  for (const auto& [attr, rows] : mu) n += rows.size() * static_cast<std::size_t>(f);
  return n;
}

std::vector<ParamRef> enumerate_params(const ParameterSet& params) {
  std::vector<ParamRef> refs;
  refs.push_back({ParamRef::Kind::beta0, -1, -1, -1});
  for (const auto& [attr, row] : params.beta) {
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      refs.push_back({ParamRef::Kind::beta, attr, j, -1});
    }
  }
  for (const auto& [attr, rows] : params.mu) {
    for (int j = 0; j < static_cast<int>(rows.size()); ++j) {
      for (int p = 0; p < params.f; ++p) {
        refs.push_back({ParamRef::Kind::mu, attr, j, p});
      }
    }
  }
  return refs;
}

double get_param(const ParameterSet& params, const ParamRef& ref) {
  switch (ref.kind) {
    case ParamRef::Kind::beta0:
      return params.beta0;
    case ParamRef::Kind::beta: {
      const auto& row = beta_row(params, ref.attr);
      if (ref.level < 0 || static_cast<std::size_t>(ref.level) >= row.size()) {
        throw MissingParameterError("beta level out of range");
      }
      return row[static_cast<std::size_t>(ref.level)];
    }
    case ParamRef::Kind::mu: {
      const auto& row = mu_row(params, ref.attr, ref.level);
      if (ref.factor < 0 || static_cast<std::size_t>(ref.factor) >= row.size()) {
        throw MissingParameterError("mu factor out of range");
      }
      return row[static_cast<std::size_t>(ref.factor)];
    }
  }
  throw MissingParameterError("unknown parameter reference");
}

void set_param(ParameterSet& params, const ParamRef& ref, double value) {
  switch (ref.kind) {
    case ParamRef::Kind::beta0:
      params.beta0 = value;
      return;
    case ParamRef::Kind::beta: {
      auto it = params.beta.find(ref.attr);
      if (it == params.beta.end() || ref.level < 0 ||
          static_cast<std::size_t>(ref.level) >= it->second.size()) {
        throw MissingParameterError("beta parameter not defined");
      }
      it->second[static_cast<std::size_t>(ref.level)] = value;
      return;
    }
    case ParamRef::Kind::mu: {
      auto it = params.mu.find(ref.attr);
      if (it == params.mu.end() || ref.level < 0 ||
          static_cast<std::size_t>(ref.level) >= it->second.size() || ref.factor < 0 ||
          ref.factor >= params.f) {
        throw MissingParameterError("mu parameter not defined");
      }
      it->second[static_cast<std::size_t>(ref.level)][static_cast<std::size_t>(ref.factor)] = value;
      return;
    }
  }
}

ParameterSet zero_parameters(const AttributeSchema& schema, const FeatureConfig& features, int f) {
  features.validate(schema);
  ParameterSet params;
  params.f = f;
  for (int c : features.attributes) {
    params.beta[c] = std::vector<double>(schema.attributes[static_cast<std::size_t>(c)].levels.size(), 0.0);
  }
  for (int c : features.interacting_attributes()) {
    params.mu[c] = std::vector<std::vector<double>>(
        schema.attributes[static_cast<std::size_t>(c)].levels.size(),
        std::vector<double>(static_cast<std::size_t>(f), 0.0));
  }
  return params;
}

double linear_score(const ParameterSet& params, const FeatureConfig& features,
                    const Observation& obs) {
  double score = params.beta0;
  for (int c : features.attributes) {
    int level = obs.active_levels[static_cast<std::size_t>(c)];
    const auto& row = beta_row(params, c);
    if (level < 0 || static_cast<std::size_t>(level) >= row.size()) {
      throw MissingParameterError("no beta for attribute " + std::to_string(c) + " level " +
                                  std::to_string(level));
    }
    score += row[static_cast<std::size_t>(level)];
  }
  for (auto [c, cp] : features.interactions) {
    const auto& left = mu_row(params, c, obs.active_levels[static_cast<std::size_t>(c)]);
    const auto& right = mu_row(params, cp, obs.active_levels[static_cast<std::size_t>(cp)]);
    double dot = 0.0;
    for (int p = 0; p < params.f; ++p) {
      dot += left[static_cast<std::size_t>(p)] * right[static_cast<std::size_t>(p)];
    }
    score += dot;
  }
  return score;
}

double forecast(const ParameterSet& params, const FeatureConfig& features,
                const Observation& obs) {
  return detail::clamped_exp(linear_score(params, features, obs));
}

double logfm_forecast(const ParameterSet& params, const FeatureConfig& features,
                      const Observation& obs) {
  return linear_score(params, features, obs);
}

LinearDecomposition decompose(const ParameterSet& params, const FeatureConfig& features,
                              const Observation& obs, const ParamRef& ref) {
  double theta = get_param(params, ref);  // throws on unknown parameters

  double h = 0.0;
  switch (ref.kind) {
    case ParamRef::Kind::beta0:
      h = 1.0;
      break;
    case ParamRef::Kind::beta:
      if (features.has_attribute(ref.attr) &&
          obs.active_levels[static_cast<std::size_t>(ref.attr)] == ref.level) {
        h = 1.0;
      }
      break;
    case ParamRef::Kind::mu: {
      if (obs.active_levels[static_cast<std::size_t>(ref.attr)] != ref.level) break;
      for (auto [c, cp] : features.interactions) {
        int partner = -1;
        if (c == ref.attr) partner = cp;
        if (cp == ref.attr) partner = c;
        if (partner < 0) continue;
        const auto& row = mu_row(params, partner,
                                 obs.active_levels[static_cast<std::size_t>(partner)]);
        h += row[static_cast<std::size_t>(ref.factor)];
      }
      break;
    }
  }

  // The score is affine in theta with slope h, so the remainder follows
  // directly from one evaluation.
  double g = linear_score(params, features, obs) - theta * h;
  return {h, g};
}

long exponent_clamp_count() { return g_clamp_count.load(std::memory_order_relaxed); }

void reset_exponent_clamp_count() { g_clamp_count.store(0, std::memory_order_relaxed); }

}  // namespace efm
