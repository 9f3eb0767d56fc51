#include "flat_model.hpp"

#include <algorithm>
#include <string>

#include "efm/errors.hpp"

namespace efm::detail {

FlatModel FlatModel::from(const ParameterSet& params, const FeatureConfig& features,
                          const AttributeSchema& schema) {
  features.validate(schema);
  FlatModel flat;
  flat.beta0 = params.beta0;
  flat.f = params.f;
  flat.attr_list = features.attributes;
  flat.pair_list = features.interactions;
  flat.beta.resize(schema.attributes.size());
  flat.mu.resize(schema.attributes.size());

  for (int c : features.attributes) {
    auto it = params.beta.find(c);
    if (it == params.beta.end()) {
      throw MissingParameterError("no beta parameters for attribute " + std::to_string(c));
    }
    std::size_t levels = schema.attributes[static_cast<std::size_t>(c)].levels.size();
    if (it->second.size() != levels) {
      throw MissingParameterError("beta parameters for attribute " + std::to_string(c) +
                                  " do not cover all levels");
    }
    flat.beta[static_cast<std::size_t>(c)] = it->second;
  }
  for (int c : features.interacting_attributes()) {
    auto it = params.mu.find(c);
    if (it == params.mu.end()) {
      throw MissingParameterError("no mu parameters for attribute " + std::to_string(c));
    }
    std::size_t levels = schema.attributes[static_cast<std::size_t>(c)].levels.size();
    if (it->second.size() != levels) {
      throw MissingParameterError("mu parameters for attribute " + std::to_string(c) +
                                  " do not cover all levels");
    }
    std::vector<double>& dense = flat.mu[static_cast<std::size_t>(c)];
    dense.resize(levels * static_cast<std::size_t>(flat.f));
    for (std::size_t j = 0; j < levels; ++j) {
      if (it->second[j].size() != static_cast<std::size_t>(flat.f)) {
        throw MissingParameterError("mu row has wrong factor dimensionality");
      }
      for (int p = 0; p < flat.f; ++p) {
        dense[j * static_cast<std::size_t>(flat.f) + static_cast<std::size_t>(p)] =
            it->second[j][static_cast<std::size_t>(p)];
      }
    }
  }
  return flat;
}

ParameterSet FlatModel::to_parameter_set() const {
  ParameterSet params;
  params.beta0 = beta0;
  params.f = f;
  for (int c : attr_list) params.beta[c] = beta[static_cast<std::size_t>(c)];
  for (std::size_t c = 0; c < mu.size(); ++c) {
    if (mu[c].empty()) continue;
    std::size_t levels = mu[c].size() / static_cast<std::size_t>(f);
    std::vector<std::vector<double>> rows(levels, std::vector<double>(static_cast<std::size_t>(f)));
    for (std::size_t j = 0; j < levels; ++j) {
      for (int p = 0; p < f; ++p) {
        rows[j][static_cast<std::size_t>(p)] =
            mu[c][j * static_cast<std::size_t>(f) + static_cast<std::size_t>(p)];
      }
    }
    params.mu[static_cast<int>(c)] = std::move(rows);
  }
  return params;
}

FlatModel FlatModel::zero_like() const {
  FlatModel zero = *this;
  zero.beta0 = 0.0;
  for (auto& row : zero.beta) std::fill(row.begin(), row.end(), 0.0);
  for (auto& row : zero.mu) std::fill(row.begin(), row.end(), 0.0);
  return zero;
}

double FlatModel::score(const Observation& obs) const {
  double score = beta0;
  for (int c : attr_list) {
    score += beta[static_cast<std::size_t>(c)]
                 [static_cast<std::size_t>(obs.active_levels[static_cast<std::size_t>(c)])];
  }
  for (auto [c, cp] : pair_list) {
    const double* left = mu_at(c, obs.active_levels[static_cast<std::size_t>(c)]);
    const double* right = mu_at(cp, obs.active_levels[static_cast<std::size_t>(cp)]);
    double dot = 0.0;
    for (int p = 0; p < f; ++p) dot += left[p] * right[p];
    score += dot;
  }
  return score;
}

void accumulate_weighted_h(const FlatModel& model, const Observation& obs, double w,
                           FlatModel& grad) {
  grad.beta0 += w;  // h for the intercept is 1
  for (int c : model.attr_list) {
    grad.beta[static_cast<std::size_t>(c)]
             [static_cast<std::size_t>(obs.active_levels[static_cast<std::size_t>(c)])] += w;
  }
  for (auto [c, cp] : model.pair_list) {
    int lc = obs.active_levels[static_cast<std::size_t>(c)];
    int lcp = obs.active_levels[static_cast<std::size_t>(cp)];
    const double* left = model.mu_at(c, lc);
    const double* right = model.mu_at(cp, lcp);
    double* gleft = grad.mu_at(c, lc);
    double* gright = grad.mu_at(cp, lcp);
    for (int p = 0; p < model.f; ++p) {
      gleft[p] += w * right[p];   // h for mu_{c,lc,p} gains the partner's factor
      gright[p] += w * left[p];
    }
  }
}

}  // namespace efm::detail
