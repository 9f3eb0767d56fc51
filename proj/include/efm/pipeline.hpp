#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "efm/ingest.hpp"
#include "efm/metrics.hpp"
#include "efm/selection.hpp"

namespace efm {

enum class PipelineMode { efm, logfm };

std::string to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(const std::string& name);

struct PipelineConfig {
  LossKind kind = LossKind::pes;
  PipelineMode mode = PipelineMode::efm;
  SelectionConfig selection;
  TrainConfig refit;  // regularized re-estimation on the full training set

  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path schema_spec_path;  // required when the data paths are CSV
  std::filesystem::path output_dir;        // artifacts are written when non-empty
  bool remap_unseen_to_missing = false;
};

struct PipelineForecast {
  RowKey key;
  double actual = 0.0;
  double forecast = 0.0;
};

struct PipelineResult {
  FeatureConfig features;
  ParameterSet params;
  GfsfsResult selection;
  TrainingDiagnostics train_diagnostics;
  EvaluationReport evaluation;
  std::vector<PipelineForecast> forecasts;
  // Ordered record of what each stage touched; the test set only appears
  // after the re-fit stage has finished.
  std::vector<std::string> stage_log;
};

// Selection on the training set, regularized re-fit, then test forecasting
// and evaluation. The logfm mode re-fits the un-exponentiated machine on
// log responses and exponentiates predictions before evaluation.
PipelineResult run_pipeline(const Dataset& train, const Dataset& test, const PipelineConfig& cfg);

// File-based variant: loads the training data up front and the test data only
// after the re-fit stage. Writes artifacts when output_dir is set.
PipelineResult run_pipeline(const PipelineConfig& cfg);

PipelineResult run_logfm(const PipelineConfig& cfg);

}  // namespace efm
