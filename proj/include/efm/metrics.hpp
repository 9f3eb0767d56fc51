#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>

#include "efm/loss.hpp"

namespace efm {

struct EvaluationReport {
  double mape_store = 0.0;
  double mae_store = 0.0;
  double mape_chain = 0.0;
  double mae_chain = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_items = 0;
};

// Row-level metrics average over keys; chain metrics first sum forecasts and
// actuals per item over groups, then average per item.
EvaluationReport evaluate(const std::map<RowKey, double>& forecasts,
                          const std::map<RowKey, double>& actuals);

struct TrainingDiagnostics {
  double mes = 0.0;                    // mean squared error of the fit
  double mpes = 0.0;                   // mean squared percentage error
  double underestimation_ratio = 0.0;  // fraction fitted strictly below actual
  double ratio_indicator = 0.0;        // (max actual)^2 / (min actual)^2
};

TrainingDiagnostics diagnostics(std::span<const double> fitted, std::span<const double> actuals);

// Mass in [min, max/4], (max/4, max/2], (max/2, 3max/4], (3max/4, max].
std::array<double, 4> response_distribution(std::span<const double> actuals);

using LossMinimizer =
    std::function<ParameterSet(LossKind, const Dataset&, const FeatureConfig&)>;

// Full-grid refinement over every free coefficient; only usable for tiny
// instances (at most three coefficients). Throws when refinement fails to
// tighten below tolerance.
ParameterSet grid_minimize(LossKind kind, const Dataset& data, const FeatureConfig& features,
                           double lo, double hi, int f = 1, int points_per_dim = 13,
                           int rounds = 24);

struct Theorem1Report {
  double es_at_es_min = 0.0;
  double es_at_pes_min = 0.0;
  double pes_at_pes_min = 0.0;
  double pes_at_es_min = 0.0;
  double ratio_bound = 0.0;  // (max d)^2 / (min d)^2
  double es_ratio = 0.0;     // es_at_pes_min / es_at_es_min
  double pes_ratio = 0.0;    // pes_at_es_min / pes_at_pes_min
  bool es_chain_holds = false;
  bool pes_chain_holds = false;
};

// Checks that each loss at the other criterion's minimizer stays within the
// response-spread bound of its own minimum.
Theorem1Report verify_theorem1(const Dataset& data, const FeatureConfig& features,
                               const LossMinimizer& minimizer = {});

}  // namespace efm
