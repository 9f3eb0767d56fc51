#include "efm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "efm/errors.hpp"
#include "efm/ingest.hpp"

namespace efm {

namespace {

// Residual sum of the per-cell least-squares multiplier fit. Cells partition
// the rows; empty cells contribute nothing. Shared by the attribute and the
// interaction score so that a synthetic joint attribute reproduces the
// interaction score bit for bit.
double cell_residual_sum(LossKind kind, std::span<const double> forecasts, const Dataset& data,
                         std::span<const int> cell_of, int n_cells) {
  std::vector<double> num(static_cast<std::size_t>(n_cells), 0.0);
  std::vector<double> den(static_cast<std::size_t>(n_cells), 0.0);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    auto cell = static_cast<std::size_t>(cell_of[i]);
    if (kind == LossKind::es) {
      num[cell] += data.rows[i].response * forecasts[i];
      den[cell] += forecasts[i] * forecasts[i];
    } else {
      double r = forecasts[i] / data.rows[i].response;
      num[cell] += r;
      den[cell] += r * r;
    }
  }
  std::vector<double> w(static_cast<std::size_t>(n_cells), 0.0);
  for (std::size_t c = 0; c < w.size(); ++c) {
    if (den[c] > 0.0) w[c] = num[c] / den[c];
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    auto cell = static_cast<std::size_t>(cell_of[i]);
    double e;
    if (kind == LossKind::es) {
      e = forecasts[i] * w[cell] - data.rows[i].response;
    } else {
      e = (forecasts[i] / data.rows[i].response) * w[cell] - 1.0;
    }
    residual += e * e;
  }
  return residual;
}

std::vector<double> fold_predictions(const ParameterSet& params, const FeatureConfig& features,
                                     const Dataset& data, std::span<const int> fold_of_row,
                                     int fold) {
  std::vector<double> values;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (fold_of_row[i] == fold) values.push_back(forecast(params, features, data.rows[i]));
  }
  return values;
}

double validation_error(LossKind kind, std::span<const double> forecasts,
                        std::span<const double> actuals) {
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    double e = std::abs(forecasts[i] - actuals[i]);
    if (kind == LossKind::pes) e /= actuals[i];
    sum += e;
  }
  return sum / static_cast<double>(forecasts.size());
}

std::string interaction_name(const AttributeSchema& schema, std::pair<int, int> pair) {
  return schema.attributes[static_cast<std::size_t>(pair.first)].name + "*" +
         schema.attributes[static_cast<std::size_t>(pair.second)].name;
}

}  // namespace

void SelectionConfig::validate() const {
  if (b < 1) throw ConfigError("attribute selection depth b must be at least 1");
  if (g < 1) throw ConfigError("interaction selection depth g must be at least 1");
  if (lambda_A < 0.0 || lambda_I < 0.0) {
    throw ConfigError("selection penalties must be nonnegative");
  }
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  inner.validate();
}

double CvResult::mean() const {
  if (errors.empty()) return 0.0;
  return std::accumulate(errors.begin(), errors.end(), 0.0) /
         static_cast<double>(errors.size());
}

double null_model_beta0(LossKind kind, std::span<const double> responses) {
  if (responses.empty()) throw DataError("null model needs at least one response");
  for (double d : responses) {
    if (!(d > 0.0)) throw DataError("null model responses must be positive");
  }
  if (kind == LossKind::es) {
    double sum = std::accumulate(responses.begin(), responses.end(), 0.0);
    return std::log(sum / static_cast<double>(responses.size()));
  }
  double inv = 0.0, inv2 = 0.0;
  for (double d : responses) {
    inv += 1.0 / d;
    inv2 += 1.0 / (d * d);
  }
  return std::log(inv) - std::log(inv2);
}

CvResult null_model_cv_errors(LossKind kind, const KFoldPartition& partition,
                              const Dataset& data) {
  partition.validate(data.rows.size());
  int k = partition.k;

  std::vector<double> sum_d(static_cast<std::size_t>(k), 0.0);
  std::vector<double> sum_inv(static_cast<std::size_t>(k), 0.0);
  std::vector<double> sum_inv2(static_cast<std::size_t>(k), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    double d = data.rows[i].response;
    if (!(d > 0.0)) throw DataError("null model responses must be positive");
    auto fold = static_cast<std::size_t>(partition.fold_of_row[i]);
    sum_d[fold] += d;
    sum_inv[fold] += 1.0 / d;
    sum_inv2[fold] += 1.0 / (d * d);
    ++count[fold];
  }
  double total_d = std::accumulate(sum_d.begin(), sum_d.end(), 0.0);
  double total_inv = std::accumulate(sum_inv.begin(), sum_inv.end(), 0.0);
  double total_inv2 = std::accumulate(sum_inv2.begin(), sum_inv2.end(), 0.0);
  std::size_t total_n = data.rows.size();

  CvResult result;
  result.errors.resize(static_cast<std::size_t>(k));
  for (int fold = 0; fold < k; ++fold) {
    auto fi = static_cast<std::size_t>(fold);
    if (count[fi] == 0 || count[fi] == total_n) throw DataError("empty fold");
    double center;
    if (kind == LossKind::es) {
      center = (total_d - sum_d[fi]) / static_cast<double>(total_n - count[fi]);
    } else {
      center = (total_inv - sum_inv[fi]) / (total_inv2 - sum_inv2[fi]);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      if (partition.fold_of_row[i] != fold) continue;
      double e = std::abs(center - data.rows[i].response);
      if (kind == LossKind::pes) e /= data.rows[i].response;
      err += e;
    }
    result.errors[fi] = err / static_cast<double>(count[fi]);
  }
  return result;
}

double fas_score(int attribute, std::span<const double> current_forecasts, const Dataset& data,
                 LossKind kind, double lambda_A) {
  const Attribute& attr = data.schema.attributes[static_cast<std::size_t>(attribute)];
  std::vector<int> cell_of(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    cell_of[i] = data.rows[i].active_levels[static_cast<std::size_t>(attribute)];
  }
  double residual = cell_residual_sum(kind, current_forecasts, data, cell_of,
                                      static_cast<int>(attr.levels.size()));
  return residual + lambda_A * static_cast<double>(attr.levels.size());
}

double fis_score(std::pair<int, int> interaction, std::span<const double> current_forecasts,
                 const Dataset& data, LossKind kind, double lambda_I) {
  auto [c, cp] = interaction;
  const Attribute& left = data.schema.attributes[static_cast<std::size_t>(c)];
  const Attribute& right = data.schema.attributes[static_cast<std::size_t>(cp)];
  int n_right = static_cast<int>(right.levels.size());

  std::vector<int> cell_of(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    cell_of[i] = data.rows[i].active_levels[static_cast<std::size_t>(c)] * n_right +
                 data.rows[i].active_levels[static_cast<std::size_t>(cp)];
  }
  double residual = cell_residual_sum(kind, current_forecasts, data, cell_of,
                                      static_cast<int>(left.levels.size()) * n_right);
  return residual +
         lambda_I * static_cast<double>(left.levels.size()) * static_cast<double>(right.levels.size());
}

FssDelta fss(SearchDirection direction, const FeatureConfig& current, const Dataset& data,
             LossKind kind, const SelectionConfig& cfg) {
  TrainConfig inner = cfg.inner;
  inner.reg = RegularizerTable{};  // selection fits are unregularized

  TrainReport fit = train(data, current, kind, inner);
  std::vector<double> fitted(data.rows.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    fitted[i] = forecast(fit.final_params, current, data.rows[i]);
  }

  FssDelta delta;
  if (direction == SearchDirection::add_attributes) {
    std::vector<std::pair<double, int>> ranked;
    for (int c = 0; c < static_cast<int>(data.schema.attributes.size()); ++c) {
      if (current.has_attribute(c)) continue;
      ranked.emplace_back(fas_score(c, fitted, data, kind, cfg.lambda_A), c);
    }
    std::sort(ranked.begin(), ranked.end());
    for (auto [score, c] : ranked) {
      delta.candidate_scores.emplace_back(
          data.schema.attributes[static_cast<std::size_t>(c)].name, score);
      if (static_cast<int>(delta.attributes.size()) < cfg.b) delta.attributes.push_back(c);
    }
    std::sort(delta.attributes.begin(), delta.attributes.end());
  } else {
    std::set<int> blocked;
    for (auto [c, cp] : current.interactions) {
      blocked.insert(c);
      blocked.insert(cp);
    }
    std::vector<std::pair<double, std::pair<int, int>>> ranked;
    for (auto pair : data.schema.interaction_universe()) {
      if (current.has_interaction(pair)) continue;
      ranked.emplace_back(fis_score(pair, fitted, data, kind, cfg.lambda_I), pair);
    }
    std::sort(ranked.begin(), ranked.end());
    for (auto& [score, pair] : ranked) {
      delta.candidate_scores.emplace_back(interaction_name(data.schema, pair), score);
      if (static_cast<int>(delta.interactions.size()) >= cfg.g) continue;
      if (blocked.count(pair.first) || blocked.count(pair.second)) continue;
      delta.interactions.push_back(pair);
      blocked.insert(pair.first);
      blocked.insert(pair.second);
    }
    std::sort(delta.interactions.begin(), delta.interactions.end());
  }
  return delta;
}

CvResult cross_validate(const FeatureConfig& features, const KFoldPartition& partition,
                        const Dataset& data, LossKind kind, const SelectionConfig& cfg) {
  partition.validate(data.rows.size());
  TrainConfig inner = cfg.inner;
  inner.reg = RegularizerTable{};

  CvResult result;
  result.errors.resize(static_cast<std::size_t>(partition.k));
  for (int fold = 0; fold < partition.k; ++fold) {
    Dataset fold_train{data.schema, {}, DatasetRole::training};
    std::vector<double> held_actuals;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      if (partition.fold_of_row[i] == fold) {
        held_actuals.push_back(data.rows[i].response);
      } else {
        fold_train.rows.push_back(data.rows[i]);
      }
    }
    TrainReport fit = train(fold_train, features, kind, inner);
    std::vector<double> held_forecasts =
        fold_predictions(fit.final_params, features, data, partition.fold_of_row, fold);
    result.errors[static_cast<std::size_t>(fold)] =
        validation_error(kind, held_forecasts, held_actuals);
  }
  return result;
}

double paired_t_statistic(const CvResult& candidate, const CvResult& incumbent) {
  if (candidate.errors.size() != incumbent.errors.size()) {
    throw DataError("paired t-test requires equal fold counts");
  }
  std::size_t k = candidate.errors.size();
  if (k < 2) throw DataError("paired t-test requires at least two folds");

  std::vector<double> diffs(k);
  for (std::size_t i = 0; i < k; ++i) diffs[i] = incumbent.errors[i] - candidate.errors[i];
  double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(k);
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(k - 1);

  if (var == 0.0) {
    if (mean == 0.0) return std::numeric_limits<double>::quiet_NaN();
    // Uniform strict change across folds: the statistic degenerates to a sign.
    return mean > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  return mean / std::sqrt(var / static_cast<double>(k));
}

bool paired_t_test(const CvResult& candidate, const CvResult& incumbent, double alpha) {
  double t = paired_t_statistic(candidate, incumbent);
  if (std::isnan(t)) return false;
  if (std::isinf(t)) return t > 0.0;
  if (t <= 0.0) return false;
  return student_t_upper_tail(t, static_cast<int>(candidate.errors.size()) - 1) < alpha;
}

namespace {

// Continued-fraction evaluation of the regularized incomplete beta function.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_upper_tail(double t, int dof) {
  if (dof < 1) throw ConfigError("t distribution needs at least one degree of freedom");
  double nu = static_cast<double>(dof);
  double x = nu / (nu + t * t);
  double tail = 0.5 * reg_incomplete_beta(nu / 2.0, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

GfsfsResult gfsfs(const Dataset& data, LossKind kind, const SelectionConfig& cfg) {
  cfg.validate();
  if (data.rows.empty()) throw DataError("feature selection needs a non-empty dataset");

  GfsfsResult result;
  result.partition = partition_kfold(data, cfg.k, cfg.seed);
  result.cv_errors = null_model_cv_errors(kind, result.partition, data);

  FeatureConfig current;  // always the last accepted configuration
  bool feasible_add_attr = true;
  bool feasible_add_inter = true;
  int direction = 1;  // +1 adds attributes, -1 adds interactions

  std::size_t universe =
      data.schema.attributes.size() + data.schema.interaction_universe().size();
  std::size_t max_attempts = 2 * universe + 2;

  long itr = 0;
  while (direction == 1 ? feasible_add_attr : feasible_add_inter) {
    if (static_cast<std::size_t>(itr) >= max_attempts) {
      throw Error("feature selection failed to terminate");
    }
    ++itr;

    SelectionStep step;
    step.iteration = itr;
    step.direction = direction;
    step.delta = fss(direction == 1 ? SearchDirection::add_attributes
                                    : SearchDirection::add_interactions,
                     current, data, kind, cfg);

    if (step.delta.empty()) {
      (direction == 1 ? feasible_add_attr : feasible_add_inter) = false;
    } else {
      FeatureConfig candidate = current;
      candidate.attributes.insert(candidate.attributes.end(), step.delta.attributes.begin(),
                                  step.delta.attributes.end());
      candidate.interactions.insert(candidate.interactions.end(),
                                    step.delta.interactions.begin(),
                                    step.delta.interactions.end());
      std::sort(candidate.attributes.begin(), candidate.attributes.end());
      std::sort(candidate.interactions.begin(), candidate.interactions.end());

      step.cv = cross_validate(candidate, result.partition, data, kind, cfg);
      step.tested = true;
      step.t_statistic = paired_t_statistic(step.cv, result.cv_errors);
      step.accepted = paired_t_test(step.cv, result.cv_errors, cfg.alpha);
      if (step.accepted) {
        current = candidate;
        result.features = candidate;
        result.cv_errors = step.cv;
        feasible_add_attr = true;
        feasible_add_inter = true;
      } else {
        (direction == 1 ? feasible_add_attr : feasible_add_inter) = false;
      }
    }
    result.trace.push_back(std::move(step));

    if (direction == 1 ? feasible_add_inter : feasible_add_attr) direction = -direction;
  }
  return result;
}

}  // namespace efm
