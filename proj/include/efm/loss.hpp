#pragma once

#include <span>
#include <string>

#include "efm/model.hpp"

namespace efm {

enum class LossKind { es, pes };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// One lambda per parameter group; the intercept is never regularized.
struct RegularizerTable {
  double lambda_v = 0.0;  // all attribute betas
  double lambda_w = 0.0;  // all interaction mu entries

  double lambda_for(const ParamRef& ref) const;
  void validate() const;
};

// ES: 1/2 sum (f - a)^2.  PES: 1/2 sum ((f - a) / a)^2.
double loss(LossKind kind, std::span<const double> forecasts, std::span<const double> actuals);

// loss + 1/2 sum lambda_theta * theta^2.
double regularized_objective(LossKind kind, double loss_value, const ParameterSet& params,
                             const RegularizerTable& reg);

// Per-sample factor shared by every parameter's gradient, learning rate
// included: eta*(f-a)*f for ES, eta*(f-a)*f/a^2 for PES.
double common_term(LossKind kind, double eta, double forecast, double actual);

// ES: mean absolute error.  PES: mean absolute percentage error.
double training_error(LossKind kind, std::span<const double> forecasts,
                      std::span<const double> actuals);

// dL/dtheta for every parameter in `params`, returned in a parameter-shaped
// container. Accumulation runs in row order, so results are reproducible.
ParameterSet gradient(LossKind kind, const ParameterSet& params, const FeatureConfig& features,
                      const Dataset& data);

}  // namespace efm
