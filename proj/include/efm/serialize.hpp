#pragma once

#include <filesystem>

#include <json.hpp>

#include "efm/ingest.hpp"
#include "efm/metrics.hpp"
#include "efm/pipeline.hpp"
#include "efm/selection.hpp"

namespace efm {

nlohmann::json schema_to_json(const AttributeSchema& schema);
AttributeSchema schema_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::json partition_to_json(const KFoldPartition& partition, const Dataset& data);

SchemaSpec schema_spec_from_json(const nlohmann::json& j);
SchemaSpec load_schema_spec(const std::filesystem::path& path);

nlohmann::json features_to_json(const FeatureConfig& features, const AttributeSchema& schema);
FeatureConfig features_from_json(const nlohmann::json& j, const AttributeSchema& schema);

// Versioned model file: schema hash, loss, form, f, intercept and both
// coefficient tables keyed by attribute and level names.
void save_model(const std::filesystem::path& path, const ParameterSet& params,
                const FeatureConfig& features, const AttributeSchema& schema, LossKind kind,
                ModelForm form);

struct LoadedModel {
  ParameterSet params;
  FeatureConfig features;
  LossKind kind = LossKind::pes;
  ModelForm form = ModelForm::exponential;
};
// Verifies the stored schema hash against the given schema.
LoadedModel load_model(const std::filesystem::path& path, const AttributeSchema& schema);

nlohmann::json evaluation_to_json(const EvaluationReport& report);
nlohmann::json diagnostics_to_json(const TrainingDiagnostics& diag);
nlohmann::json selection_to_json(const GfsfsResult& result, const AttributeSchema& schema);

struct ForecastRow {
  RowKey key;
  double actual = 0.0;
  double forecast = 0.0;
};
void write_forecast_csv(const std::filesystem::path& path, std::span<const ForecastRow> rows);
std::vector<ForecastRow> read_forecast_csv(const std::filesystem::path& path);

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEntry> trace);

// Config file sections. Hyper-parameter keys match the usual names: eta,
// max_iterations, lambda_v, lambda_w, sigma, f plus b, g, lambda_A, lambda_I,
// k, alpha for selection.
TrainConfig train_config_from_json(const nlohmann::json& j);
SelectionConfig selection_config_from_json(const nlohmann::json& j, const TrainConfig& inner_base);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace efm
