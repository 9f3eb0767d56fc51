#pragma once

// Dense parameter layout used by the trainer and the gradient accumulator.
// Lookups by attribute id avoid map traffic in the per-row inner loops.

#include <utility>
#include <vector>

#include "efm/model.hpp"

namespace efm::detail {

double clamped_exp(double score);  // defined in model.cpp, shares the clamp counter

struct FlatModel {
  double beta0 = 0.0;
  int f = 0;
  std::vector<int> attr_list;                   // selected attributes
  std::vector<std::pair<int, int>> pair_list;   // selected interactions
  std::vector<std::vector<double>> beta;        // indexed by attribute id
  std::vector<std::vector<double>> mu;          // indexed by attribute id, level-major, f wide

  static FlatModel from(const ParameterSet& params, const FeatureConfig& features,
                        const AttributeSchema& schema);
  ParameterSet to_parameter_set() const;
  FlatModel zero_like() const;

  double score(const Observation& obs) const;
  double forecast(const Observation& obs) const { return clamped_exp(score(obs)); }

  double* mu_at(int attr, int level) {
    return mu[static_cast<std::size_t>(attr)].data() +
           static_cast<std::size_t>(level) * static_cast<std::size_t>(f);
  }
  const double* mu_at(int attr, int level) const {
    return mu[static_cast<std::size_t>(attr)].data() +
           static_cast<std::size_t>(level) * static_cast<std::size_t>(f);
  }
};

// Adds w * h_theta(obs) to every entry of `grad`; h values come from `model`.
void accumulate_weighted_h(const FlatModel& model, const Observation& obs, double w,
                           FlatModel& grad);

}  // namespace efm::detail
