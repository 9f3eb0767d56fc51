#include "efm/loss.hpp"

#include <cmath>

#include "efm/errors.hpp"
#include "flat_model.hpp"

namespace efm {

namespace {

void check_pairs(LossKind kind, std::span<const double> forecasts,
                 std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) {
    throw DataError("forecast/actual length mismatch");
  }
  if (forecasts.empty()) throw DataError("no forecast/actual pairs");
  if (kind == LossKind::pes) {
    for (double a : actuals) {
      if (!(a > 0.0)) throw DataError("nonpositive actual under the PES loss");
    }
  }
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::es ? "ES" : "PES"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "ES" || name == "es") return LossKind::es;
  if (name == "PES" || name == "pes") return LossKind::pes;
  throw ConfigError("unknown loss kind: " + name);
}

double RegularizerTable::lambda_for(const ParamRef& ref) const {
  switch (ref.kind) {
    case ParamRef::Kind::beta0:
      return 0.0;
    case ParamRef::Kind::beta:
      return lambda_v;
    case ParamRef::Kind::mu:
      return lambda_w;
  }
  return 0.0;
}

void RegularizerTable::validate() const {
  if (lambda_v < 0.0 || lambda_w < 0.0) {
    throw ConfigError("regularizer values must be nonnegative");
  }
}

double loss(LossKind kind, std::span<const double> forecasts, std::span<const double> actuals) {
  check_pairs(kind, forecasts, actuals);
  double sum = 0.0;
  if (kind == LossKind::es) {
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
      double e = forecasts[i] - actuals[i];
      sum += e * e;
    }
  } else {
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
      double e = (forecasts[i] - actuals[i]) / actuals[i];
      sum += e * e;
    }
  }
  return 0.5 * sum;
}

double regularized_objective(LossKind, double loss_value, const ParameterSet& params,
                             const RegularizerTable& reg) {
  double penalty = 0.0;
  for (const auto& [attr, row] : params.beta) {
    for (double v : row) penalty += reg.lambda_v * v * v;
  }
  for (const auto& [attr, rows] : params.mu) {
    for (const auto& row : rows) {
      for (double v : row) penalty += reg.lambda_w * v * v;
    }
  }
  return loss_value + 0.5 * penalty;
}

double common_term(LossKind kind, double eta, double forecast, double actual) {
  double v = eta * (forecast - actual) * forecast;
  if (kind == LossKind::pes) v /= actual * actual;
  return v;
}

double training_error(LossKind kind, std::span<const double> forecasts,
                      std::span<const double> actuals) {
  check_pairs(kind, forecasts, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    double e = std::abs(forecasts[i] - actuals[i]);
    if (kind == LossKind::pes) e /= actuals[i];
    sum += e;
  }
  return sum / static_cast<double>(forecasts.size());
}

ParameterSet gradient(LossKind kind, const ParameterSet& params, const FeatureConfig& features,
                      const Dataset& data) {
  if (data.rows.empty()) throw DataError("gradient over an empty dataset");
  detail::FlatModel model = detail::FlatModel::from(params, features, data.schema);
  detail::FlatModel grad = model.zero_like();
  for (const Observation& row : data.rows) {
    double d_hat = model.forecast(row);
    double w = common_term(kind, 1.0, d_hat, row.response);
    detail::accumulate_weighted_h(model, row, w, grad);
  }
  return grad.to_parameter_set();
}

}  // namespace efm
