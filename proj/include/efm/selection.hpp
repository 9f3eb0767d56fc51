#pragma once

#include <span>
#include <string>
#include <utility>

#include "efm/train.hpp"

namespace efm {

struct SelectionConfig {
  int b = 3;              // forward attribute selection depth
  int g = 2;              // forward interaction selection depth
  double lambda_A = 0.0;  // complexity penalty per attribute level
  double lambda_I = 0.0;  // complexity penalty per interaction level pair
  int k = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;  // fold partition seed
  TrainConfig inner;       // regularizers are forced to zero inside selection

  void validate() const;
};

struct CvResult {
  std::vector<double> errors;  // one validation error per fold

  double mean() const;
};

// Intercept-only minimizer: log-mean under ES, log of the ratio of inverse
// sums under PES.
double null_model_beta0(LossKind kind, std::span<const double> responses);

// Fold errors of the null model, each against the leave-fold-out analytic
// solution over the complement.
CvResult null_model_cv_errors(LossKind kind, const KFoldPartition& partition,
                              const Dataset& data);

// Closed-form minimal loss reachable by adding one attribute on top of the
// current fitted values, plus the per-level complexity penalty.
double fas_score(int attribute, std::span<const double> current_forecasts, const Dataset& data,
                 LossKind kind, double lambda_A);

// Same over the joint level cells of one candidate interaction.
double fis_score(std::pair<int, int> interaction, std::span<const double> current_forecasts,
                 const Dataset& data, LossKind kind, double lambda_I);

enum class SearchDirection : int { add_attributes = 1, add_interactions = -1 };

struct FssDelta {
  std::vector<int> attributes;
  std::vector<std::pair<int, int>> interactions;
  // Scores of every out-of-set candidate, by display name, in rank order.
  std::vector<std::pair<std::string, double>> candidate_scores;

  bool empty() const { return attributes.empty() && interactions.empty(); }
};

// One forward step: fit the current features without regularization, score
// every out-of-set candidate and keep the best few. Selected interactions may
// not share attributes with each other or with the current interaction set.
FssDelta fss(SearchDirection direction, const FeatureConfig& current, const Dataset& data,
             LossKind kind, const SelectionConfig& cfg);

// Fold-wise validation errors (MAE under ES, MAPE under PES) of a feature
// configuration, trained unregularized on the complement of each fold.
CvResult cross_validate(const FeatureConfig& features, const KFoldPartition& partition,
                        const Dataset& data, LossKind kind, const SelectionConfig& cfg);

// One-sided paired t-test on fold differences (incumbent - candidate). True
// when the candidate errors are significantly smaller at level alpha.
// Constant nonzero improvement counts as significant; identical vectors do not.
bool paired_t_test(const CvResult& candidate, const CvResult& incumbent, double alpha);
double paired_t_statistic(const CvResult& candidate, const CvResult& incumbent);
double student_t_upper_tail(double t, int dof);  // P(T > t)

struct SelectionStep {
  long iteration = 0;
  int direction = 0;
  FssDelta delta;
  CvResult cv;
  double t_statistic = 0.0;
  bool tested = false;
  bool accepted = false;
};

struct GfsfsResult {
  FeatureConfig features;
  CvResult cv_errors;
  KFoldPartition partition;
  std::vector<SelectionStep> trace;
};

// Greedy forward stepwise feature selection: alternates between adding
// attributes and adding interactions, keeps an augmentation only when the
// t-test confirms a significant CV improvement, stops when the current
// direction is exhausted.
GfsfsResult gfsfs(const Dataset& data, LossKind kind, const SelectionConfig& cfg);

}  // namespace efm
