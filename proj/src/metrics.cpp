#include "efm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "efm/errors.hpp"

namespace efm {

EvaluationReport evaluate(const std::map<RowKey, double>& forecasts,
                          const std::map<RowKey, double>& actuals) {
  if (forecasts.size() != actuals.size() || forecasts.empty()) {
    throw DataError("forecast and actual key sets must match and be non-empty");
  }

  struct ItemTotals {
    double forecast = 0.0;
    double actual = 0.0;
  };
  std::map<std::string, ItemTotals> items;

  EvaluationReport report;
  report.n_rows = forecasts.size();
  for (const auto& [key, fc] : forecasts) {
    auto it = actuals.find(key);
    if (it == actuals.end()) {
      throw DataError("forecast key (" + key.item + ", " + key.group + ") has no actual");
    }
    double actual = it->second;
    if (!(actual > 0.0)) throw DataError("actuals must be positive");
    report.mae_store += std::abs(fc - actual);
    report.mape_store += std::abs((fc - actual) / actual);
    ItemTotals& totals = items[key.item];
    totals.forecast += fc;
    totals.actual += actual;
  }
  report.mae_store /= static_cast<double>(report.n_rows);
  report.mape_store /= static_cast<double>(report.n_rows);

  report.n_items = items.size();
  for (const auto& [item, totals] : items) {
    if (!(totals.actual > 0.0)) throw DataError("item '" + item + "' has zero total actual");
    report.mae_chain += std::abs(totals.forecast - totals.actual);
    report.mape_chain += std::abs((totals.forecast - totals.actual) / totals.actual);
  }
  report.mae_chain /= static_cast<double>(report.n_items);
  report.mape_chain /= static_cast<double>(report.n_items);
  return report;
}

TrainingDiagnostics diagnostics(std::span<const double> fitted, std::span<const double> actuals) {
  if (fitted.size() != actuals.size() || fitted.empty()) {
    throw DataError("diagnostics need matching non-empty fitted/actual lists");
  }
  TrainingDiagnostics diag;
  double dmin = actuals[0], dmax = actuals[0];
  std::size_t under = 0;
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (!(actuals[i] > 0.0)) throw DataError("actuals must be positive");
    double e = fitted[i] - actuals[i];
    diag.mes += e * e;
    double pe = e / actuals[i];
    diag.mpes += pe * pe;
    if (fitted[i] < actuals[i]) ++under;
    dmin = std::min(dmin, actuals[i]);
    dmax = std::max(dmax, actuals[i]);
  }
  auto n = static_cast<double>(fitted.size());
  diag.mes /= n;
  diag.mpes /= n;
  diag.underestimation_ratio = static_cast<double>(under) / n;
  diag.ratio_indicator = (dmax * dmax) / (dmin * dmin);
  return diag;
}

std::array<double, 4> response_distribution(std::span<const double> actuals) {
  if (actuals.empty()) throw DataError("response distribution needs values");
  double max = *std::max_element(actuals.begin(), actuals.end());
  std::array<double, 4> counts{0.0, 0.0, 0.0, 0.0};
  for (double v : actuals) {
    if (v <= 0.25 * max) {
      counts[0] += 1.0;
    } else if (v <= 0.5 * max) {
      counts[1] += 1.0;
    } else if (v <= 0.75 * max) {
      counts[2] += 1.0;
    } else {
      counts[3] += 1.0;
    }
  }
  for (double& c : counts) c /= static_cast<double>(actuals.size());
  return counts;
}

namespace {

double loss_at(LossKind kind, const ParameterSet& params, const FeatureConfig& features,
               const Dataset& data) {
  std::vector<double> forecasts(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    forecasts[i] = forecast(params, features, data.rows[i]);
  }
  return loss(kind, forecasts, data.responses());
}

}  // namespace

ParameterSet grid_minimize(LossKind kind, const Dataset& data, const FeatureConfig& features,
                           double lo, double hi, int f, int points_per_dim, int rounds) {
  if (data.rows.empty()) throw DataError("grid minimization needs data");
  ParameterSet params = zero_parameters(data.schema, features, f);
  std::vector<ParamRef> refs = enumerate_params(params);
  if (refs.size() > 3) {
    throw ConfigError("grid minimization supports at most three free coefficients, got " +
                      std::to_string(refs.size()));
  }
  if (points_per_dim < 3 || rounds < 1 || !(hi > lo)) {
    throw ConfigError("invalid grid minimization settings");
  }

  std::size_t dims = refs.size();
  std::vector<double> center(dims, 0.5 * (lo + hi));
  std::vector<double> half_width(dims, 0.5 * (hi - lo));
  std::vector<double> best(center);

  for (int round = 0; round < rounds; ++round) {
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<int> idx(dims, 0);
    std::vector<double> point(dims);
    while (true) {
      for (std::size_t d = 0; d < dims; ++d) {
        double step = 2.0 * half_width[d] / static_cast<double>(points_per_dim - 1);
        point[d] = center[d] - half_width[d] + step * idx[d];
        set_param(params, refs[d], point[d]);
      }
      double value = loss_at(kind, params, features, data);
      if (value < best_value) {
        best_value = value;
        best = point;
      }
      std::size_t d = 0;
      while (d < dims && ++idx[d] == points_per_dim) {
        idx[d] = 0;
        ++d;
      }
      if (d == dims) break;
    }
    center = best;
    for (std::size_t d = 0; d < dims; ++d) {
      // Keep the next window a little wider than one old grid step.
      half_width[d] = 2.2 * half_width[d] / static_cast<double>(points_per_dim - 1);
    }
  }

  for (double w : half_width) {
    if (w > 1e-6) throw Error("grid minimization did not converge");
  }
  for (std::size_t d = 0; d < dims; ++d) set_param(params, refs[d], best[d]);
  return params;
}

Theorem1Report verify_theorem1(const Dataset& data, const FeatureConfig& features,
                               const LossMinimizer& minimizer) {
  if (data.rows.empty()) throw DataError("theorem check needs data");
  std::vector<double> responses = data.responses();
  double dmin = *std::min_element(responses.begin(), responses.end());
  double dmax = *std::max_element(responses.begin(), responses.end());
  if (!(dmin > 0.0)) throw DataError("responses must be positive");

  LossMinimizer minimize = minimizer;
  if (!minimize) {
    double bound = std::max(std::abs(std::log(dmin)), std::abs(std::log(dmax))) + 2.0;
    minimize = [bound](LossKind kind, const Dataset& d, const FeatureConfig& fc) {
      return grid_minimize(kind, d, fc, -bound, bound);
    };
  }

  ParameterSet theta_es = minimize(LossKind::es, data, features);
  ParameterSet theta_pes = minimize(LossKind::pes, data, features);

  Theorem1Report report;
  report.es_at_es_min = loss_at(LossKind::es, theta_es, features, data);
  report.es_at_pes_min = loss_at(LossKind::es, theta_pes, features, data);
  report.pes_at_pes_min = loss_at(LossKind::pes, theta_pes, features, data);
  report.pes_at_es_min = loss_at(LossKind::pes, theta_es, features, data);
  report.ratio_bound = (dmax * dmax) / (dmin * dmin);
  report.es_ratio = report.es_at_es_min > 0.0 ? report.es_at_pes_min / report.es_at_es_min : 1.0;
  report.pes_ratio =
      report.pes_at_pes_min > 0.0 ? report.pes_at_es_min / report.pes_at_pes_min : 1.0;

  // Slack absorbs the residual grid imprecision of the minimizers.
  constexpr double kRel = 1e-6;
  constexpr double kAbs = 1e-9;
  auto leq = [](double a, double b) { return a <= b * (1.0 + kRel) + kAbs; };
  report.es_chain_holds = leq(report.es_at_es_min, report.es_at_pes_min) &&
                          leq(report.es_at_pes_min, report.ratio_bound * report.es_at_es_min);
  report.pes_chain_holds = leq(report.pes_at_pes_min, report.pes_at_es_min) &&
                           leq(report.pes_at_es_min, report.ratio_bound * report.pes_at_pes_min);
  return report;
}

}  // namespace efm
