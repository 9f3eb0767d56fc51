#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "efm/loss.hpp"

namespace efm {

// Learning-rate adaptation threshold: 0.1 under PES, 1.0 under ES.
double resolve_epsilon(LossKind kind);

// The exponential form is the standard model; the linear form trains the
// un-exponentiated machine on (already log-transformed) targets.
enum class ModelForm { exponential, linear };

struct TrainConfig {
  double eta = 1e-4;
  long max_iterations = 1000;
  RegularizerTable reg;
  std::optional<double> epsilon;  // defaults to resolve_epsilon(kind)
  double init_sigma = 0.1;
  std::uint64_t seed = 0;
  int f = 2;
  bool early_stop = false;  // optional halt once |TE delta| < 1e-12
  ModelForm form = ModelForm::exponential;

  void validate() const;
};

struct TraceEntry {
  long iteration;
  double training_error;
  double objective;
  double eta;
};

struct TrainReport {
  ParameterSet final_params;
  std::vector<TraceEntry> trace;
  long halvings = 0;
};

// Adaptive batch gradient descent: full-batch simultaneous updates with
// learning-rate halving once the training error is below epsilon and rising.
// Deterministic for fixed (data order, features, kind, config).
TrainReport train(const Dataset& data, const FeatureConfig& features, LossKind kind,
                  const TrainConfig& cfg);

}  // namespace efm
