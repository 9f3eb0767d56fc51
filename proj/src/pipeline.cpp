#include "efm/pipeline.hpp"

#include <cmath>

#include "efm/errors.hpp"
#include "efm/serialize.hpp"

namespace efm {

std::string to_string(PipelineMode mode) { return mode == PipelineMode::efm ? "EFM" : "logFM"; }

PipelineMode pipeline_mode_from_string(const std::string& name) {
  if (name == "EFM" || name == "efm") return PipelineMode::efm;
  if (name == "logFM" || name == "logfm" || name == "LOGFM") return PipelineMode::logfm;
  throw ConfigError("unknown pipeline mode: " + name);
}

namespace {

Dataset load_any(const std::filesystem::path& path, const PipelineConfig& cfg, DatasetRole role,
                 const AttributeSchema* training_schema) {
  if (path.extension() == ".csv") {
    if (cfg.schema_spec_path.empty()) {
      throw ConfigError("CSV data paths require a schema spec");
    }
    SchemaSpec spec = load_schema_spec(cfg.schema_spec_path);
    LoadOptions options;
    options.role = role;
    options.training_schema = training_schema;
    options.remap_unseen_to_missing = cfg.remap_unseen_to_missing;
    return load_csv(path, spec, options);
  }
  Dataset data = load_dataset(path);
  if (role == DatasetRole::test && training_schema != nullptr &&
      data.schema.content_hash() != training_schema->content_hash()) {
    throw DataError("test dataset schema does not match the training schema");
  }
  data.role = role;
  return data;
}

double predict_original_scale(const ParameterSet& params, const FeatureConfig& features,
                              const Observation& obs, PipelineMode mode) {
  if (mode == PipelineMode::efm) return forecast(params, features, obs);
  // The linear machine was fitted on log responses.
  return std::exp(logfm_forecast(params, features, obs));
}

// Stage 1 (feature selection) and stage 2 (regularized re-fit). Both see the
// training set only; the signature has no test-set access.
void run_training_stages(const Dataset& train_data, const PipelineConfig& cfg,
                         PipelineResult& result) {
  result.stage_log.push_back("stage1:selection:start train_rows=" +
                             std::to_string(train_data.rows.size()));
  result.selection = gfsfs(train_data, cfg.kind, cfg.selection);
  result.features = result.selection.features;
  result.stage_log.push_back("stage1:selection:end");

  result.stage_log.push_back("stage2:refit:start");
  TrainConfig refit = cfg.refit;
  const Dataset* fit_data = &train_data;
  Dataset log_train;
  if (cfg.mode == PipelineMode::logfm) {
    refit.form = ModelForm::linear;
    log_train = train_data;
    for (Observation& row : log_train.rows) row.response = std::log(row.response);
    fit_data = &log_train;
  }
  TrainReport fit = train(*fit_data, result.features, cfg.kind, refit);
  result.params = fit.final_params;

  std::vector<double> fitted(train_data.rows.size());
  for (std::size_t i = 0; i < train_data.rows.size(); ++i) {
    fitted[i] =
        predict_original_scale(result.params, result.features, train_data.rows[i], cfg.mode);
  }
  result.train_diagnostics = diagnostics(fitted, train_data.responses());
  result.stage_log.push_back("stage2:refit:end");
}

void run_test_stage(const Dataset& test_data, const PipelineConfig& cfg, PipelineResult& result) {
  result.stage_log.push_back("stage3:test:start test_rows=" +
                             std::to_string(test_data.rows.size()));
  std::map<RowKey, double> forecasts;
  std::map<RowKey, double> actuals;
  for (const Observation& row : test_data.rows) {
    double value = predict_original_scale(result.params, result.features, row, cfg.mode);
    result.forecasts.push_back({row.key, row.response, value});
    forecasts[row.key] = value;
    actuals[row.key] = row.response;
  }
  result.evaluation = evaluate(forecasts, actuals);
  result.stage_log.push_back("stage3:test:end");
}

void write_artifacts(const PipelineResult& result, const AttributeSchema& schema,
                     const PipelineConfig& cfg) {
  if (cfg.output_dir.empty()) return;
  std::filesystem::create_directories(cfg.output_dir);
  save_model(cfg.output_dir / "model.json", result.params, result.features, schema, cfg.kind,
             cfg.mode == PipelineMode::logfm ? ModelForm::linear : ModelForm::exponential);
  std::vector<ForecastRow> rows;
  rows.reserve(result.forecasts.size());
  for (const PipelineForecast& f : result.forecasts) {
    rows.push_back({f.key, f.actual, f.forecast});
  }
  write_forecast_csv(cfg.output_dir / "forecasts.csv", rows);
  save_json(evaluation_to_json(result.evaluation), cfg.output_dir / "evaluation.json");
  save_json(diagnostics_to_json(result.train_diagnostics), cfg.output_dir / "diagnostics.json");
  save_json(selection_to_json(result.selection, schema), cfg.output_dir / "selection_trace.json");
}

}  // namespace

PipelineResult run_pipeline(const Dataset& train_data, const Dataset& test_data,
                            const PipelineConfig& cfg) {
  if (train_data.schema.content_hash() != test_data.schema.content_hash()) {
    throw DataError("training and test datasets must share one schema");
  }
  PipelineResult result;
  run_training_stages(train_data, cfg, result);
  run_test_stage(test_data, cfg, result);
  write_artifacts(result, train_data.schema, cfg);
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  Dataset train_data = load_any(cfg.train_path, cfg, DatasetRole::training, nullptr);

  PipelineResult result;
  run_training_stages(train_data, cfg, result);

  // The test file is opened only after both training stages have finished.
  result.stage_log.push_back("stage3:test:load " + cfg.test_path.string());
  Dataset test_data = load_any(cfg.test_path, cfg, DatasetRole::test, &train_data.schema);
  run_test_stage(test_data, cfg, result);

  write_artifacts(result, train_data.schema, cfg);
  return result;
}

PipelineResult run_logfm(const PipelineConfig& cfg) {
  PipelineConfig log_cfg = cfg;
  log_cfg.mode = PipelineMode::logfm;
  return run_pipeline(log_cfg);
}

}  // namespace efm
