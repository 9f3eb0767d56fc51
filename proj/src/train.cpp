#include "efm/train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "efm/errors.hpp"
#include "efm/rng.hpp"
#include "flat_model.hpp"

namespace efm {

namespace {

double raw_loss(LossKind kind, std::span<const double> forecasts,
                std::span<const double> targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    double e = forecasts[i] - targets[i];
    if (kind == LossKind::pes) e /= targets[i];
    sum += e * e;
  }
  return 0.5 * sum;
}

double raw_training_error(LossKind kind, std::span<const double> forecasts,
                          std::span<const double> targets) {
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    double e = std::abs(forecasts[i] - targets[i]);
    if (kind == LossKind::pes) e /= std::abs(targets[i]);
    sum += e;
  }
  return sum / static_cast<double>(forecasts.size());
}

double penalty(const detail::FlatModel& model, const RegularizerTable& reg) {
  double sum = 0.0;
  for (const auto& row : model.beta) {
    for (double v : row) sum += reg.lambda_v * v * v;
  }
  for (const auto& row : model.mu) {
    for (double v : row) sum += reg.lambda_w * v * v;
  }
  return 0.5 * sum;
}

}  // namespace

double resolve_epsilon(LossKind kind) { return kind == LossKind::pes ? 0.1 : 1.0; }

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("learning rate eta must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (init_sigma < 0.0) throw ConfigError("init sigma must be nonnegative");
  if (f < 1) throw ConfigError("factorization dimensionality f must be at least 1");
  reg.validate();
}

TrainReport train(const Dataset& data, const FeatureConfig& features, LossKind kind,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.rows.empty()) throw DataError("cannot train on an empty dataset");

  const bool exponential = cfg.form == ModelForm::exponential;
  std::vector<double> targets = data.responses();
  for (double y : targets) {
    if (exponential && !(y > 0.0)) throw DataError("training responses must be positive");
    if (!exponential && kind == LossKind::pes && y == 0.0) {
      throw DataError("zero target under the PES loss");
    }
  }

  ParameterSet init = zero_parameters(data.schema, features, cfg.f);
  {
    // Factor entries start at Normal(0, sigma), drawn in schema order.
    DeterministicRng rng(cfg.seed);
    for (auto& [attr, rows] : init.mu) {
      for (auto& row : rows) {
        for (double& v : row) v = rng.gaussian(cfg.init_sigma);
      }
    }
  }
  detail::FlatModel model = detail::FlatModel::from(init, features, data.schema);

  double eta = cfg.eta;
  const double epsilon = cfg.epsilon.value_or(resolve_epsilon(kind));

  auto predict_all = [&](const detail::FlatModel& m, std::vector<double>& out) {
    out.resize(data.rows.size());
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      out[i] = exponential ? m.forecast(data.rows[i]) : m.score(data.rows[i]);
    }
  };

  std::vector<double> fitted;
  predict_all(model, fitted);

  TrainReport report;
  report.trace.reserve(static_cast<std::size_t>(cfg.max_iterations));
  double te_prev = std::numeric_limits<double>::infinity();

  for (long itr = 1; itr <= cfg.max_iterations; ++itr) {
    detail::FlatModel step = model.zero_like();
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      double y = targets[i];
      double v = eta * (fitted[i] - y);
      if (exponential) v *= fitted[i];
      if (kind == LossKind::pes) v /= y * y;
      detail::accumulate_weighted_h(model, data.rows[i], v, step);
    }

    // Simultaneous update: every h above was evaluated at the old parameters.
    model.beta0 -= step.beta0;
    for (std::size_t c = 0; c < model.beta.size(); ++c) {
      for (std::size_t j = 0; j < model.beta[c].size(); ++j) {
        model.beta[c][j] -= step.beta[c][j] + eta * cfg.reg.lambda_v * model.beta[c][j];
      }
    }
    for (std::size_t c = 0; c < model.mu.size(); ++c) {
      for (std::size_t j = 0; j < model.mu[c].size(); ++j) {
        model.mu[c][j] -= step.mu[c][j] + eta * cfg.reg.lambda_w * model.mu[c][j];
      }
    }

    predict_all(model, fitted);
    double te = raw_training_error(kind, fitted, targets);
    double objective = raw_loss(kind, fitted, targets) + penalty(model, cfg.reg);
    if (!std::isfinite(objective) || !std::isfinite(te)) {
      throw DivergenceError("training diverged at iteration " + std::to_string(itr) +
                                " (eta = " + std::to_string(eta) + ")",
                            itr, eta);
    }

    if (te < epsilon && te > te_prev) {
      eta /= 2.0;
      ++report.halvings;
    }
    report.trace.push_back({itr, te, objective, eta});

    bool stalled = cfg.early_stop && std::isfinite(te_prev) && std::abs(te - te_prev) < 1e-12;
    te_prev = te;
    if (stalled) break;
  }

  report.final_params = model.to_parameter_set();
  return report;
}

}  // namespace efm
