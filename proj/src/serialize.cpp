#include "efm/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "efm/errors.hpp"

namespace efm {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open JSON file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open JSON file for writing: " + path.string());
  out << j.dump(2) << '\n';
}

json schema_to_json(const AttributeSchema& schema) {
  json attrs = json::array();
  for (const Attribute& attr : schema.attributes) {
    json a;
    a["name"] = attr.name;
    a["levels"] = attr.levels;
    if (!attr.bin_upper_edges.empty()) a["bin_upper_edges"] = attr.bin_upper_edges;
    attrs.push_back(std::move(a));
  }
  return json{{"attributes", std::move(attrs)}};
}

AttributeSchema schema_from_json(const json& j) {
  AttributeSchema schema;
  for (const json& a : j.at("attributes")) {
    Attribute attr;
    attr.name = a.at("name").get<std::string>();
    attr.levels = a.at("levels").get<std::vector<std::string>>();
    if (a.contains("bin_upper_edges")) {
      attr.bin_upper_edges = a.at("bin_upper_edges").get<std::vector<double>>();
    }
    schema.attributes.push_back(std::move(attr));
  }
  schema.validate();
  return schema;
}

json dataset_to_json(const Dataset& data) {
  json rows = json::array();
  for (const Observation& row : data.rows) {
    rows.push_back(json{{"item", row.key.item},
                        {"group", row.key.group},
                        {"levels", row.active_levels},
                        {"response", row.response}});
  }
  return json{{"role", data.role == DatasetRole::training ? "training" : "test"},
              {"schema", schema_to_json(data.schema)},
              {"rows", std::move(rows)}};
}

Dataset dataset_from_json(const json& j) {
  Dataset data;
  std::string role = j.at("role").get<std::string>();
  if (role == "training") {
    data.role = DatasetRole::training;
  } else if (role == "test") {
    data.role = DatasetRole::test;
  } else {
    throw DataError("unknown dataset role: " + role);
  }
  data.schema = schema_from_json(j.at("schema"));
  for (const json& r : j.at("rows")) {
    Observation obs;
    obs.key.item = r.at("item").get<std::string>();
    obs.key.group = r.at("group").get<std::string>();
    obs.active_levels = r.at("levels").get<std::vector<int>>();
    obs.response = r.at("response").get<double>();
    if (obs.active_levels.size() != data.schema.attributes.size()) {
      throw DataError("row does not match schema attribute count");
    }
    for (std::size_t c = 0; c < obs.active_levels.size(); ++c) {
      int lvl = obs.active_levels[c];
      if (lvl < 0 || static_cast<std::size_t>(lvl) >= data.schema.attributes[c].levels.size()) {
        throw DataError("row level index out of range");
      }
    }
    if (!(obs.response > 0.0)) throw DataError("row response must be positive");
    data.rows.push_back(std::move(obs));
  }
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  save_json(dataset_to_json(data), path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(load_json(path));
}

json partition_to_json(const KFoldPartition& partition, const Dataset& data) {
  json folds = json::object();
  for (std::size_t i = 0; i < partition.fold_of_row.size(); ++i) {
    const RowKey& key = data.rows[i].key;
    folds[key.item + "|" + key.group] = partition.fold_of_row[i];
  }
  return json{{"k", partition.k}, {"seed", partition.seed}, {"fold_of_key", std::move(folds)}};
}

SchemaSpec schema_spec_from_json(const json& j) {
  check_keys(j, {"response_column", "attribute_columns", "numeric_columns", "key_columns"},
             "schema spec");
  SchemaSpec spec;
  spec.response_column = j.at("response_column").get<std::string>();
  if (j.contains("attribute_columns")) {
    spec.attribute_columns = j.at("attribute_columns").get<std::vector<std::string>>();
  }
  if (j.contains("numeric_columns")) {
    for (const json& nc : j.at("numeric_columns")) {
      check_keys(nc, {"column", "bins"}, "numeric column spec");
      spec.numeric_columns.push_back(
          {nc.at("column").get<std::string>(), nc.value("bins", 4)});
    }
  }
  if (j.contains("key_columns")) {
    spec.key_columns = j.at("key_columns").get<std::vector<std::string>>();
  }
  spec.validate();
  return spec;
}

SchemaSpec load_schema_spec(const std::filesystem::path& path) {
  return schema_spec_from_json(load_json(path));
}

json features_to_json(const FeatureConfig& features, const AttributeSchema& schema) {
  json attrs = json::array();
  for (int c : features.attributes) {
    attrs.push_back(schema.attributes[static_cast<std::size_t>(c)].name);
  }
  json inters = json::array();
  for (auto [c, cp] : features.interactions) {
    inters.push_back(json::array({schema.attributes[static_cast<std::size_t>(c)].name,
                                  schema.attributes[static_cast<std::size_t>(cp)].name}));
  }
  return json{{"attributes", std::move(attrs)}, {"interactions", std::move(inters)}};
}

FeatureConfig features_from_json(const json& j, const AttributeSchema& schema) {
  FeatureConfig features;
  for (const json& name : j.at("attributes")) {
    int c = schema.attribute_index(name.get<std::string>());
    if (c < 0) throw DataError("unknown attribute in feature file: " + name.get<std::string>());
    features.attributes.push_back(c);
  }
  for (const json& pair : j.at("interactions")) {
    int c = schema.attribute_index(pair.at(0).get<std::string>());
    int cp = schema.attribute_index(pair.at(1).get<std::string>());
    if (c < 0 || cp < 0) throw DataError("unknown attribute in interaction");
    if (c > cp) std::swap(c, cp);
    features.interactions.emplace_back(c, cp);
  }
  std::sort(features.attributes.begin(), features.attributes.end());
  std::sort(features.interactions.begin(), features.interactions.end());
  features.validate(schema);
  return features;
}

void save_model(const std::filesystem::path& path, const ParameterSet& params,
                const FeatureConfig& features, const AttributeSchema& schema, LossKind kind,
                ModelForm form) {
  json j;
  j["format_version"] = 1;
  j["schema_hash"] = schema.content_hash();
  j["loss"] = to_string(kind);
  j["form"] = form == ModelForm::exponential ? "exponential" : "linear";
  j["f"] = params.f;
  j["beta0"] = params.beta0;
  j["features"] = features_to_json(features, schema);

  json beta = json::object();
  for (const auto& [attr, row] : params.beta) {
    const Attribute& a = schema.attributes[static_cast<std::size_t>(attr)];
    json levels = json::object();
    for (std::size_t lvl = 0; lvl < row.size(); ++lvl) levels[a.levels[lvl]] = row[lvl];
    beta[a.name] = std::move(levels);
  }
  j["beta"] = std::move(beta);

  json mu = json::object();
  for (const auto& [attr, rows] : params.mu) {
    const Attribute& a = schema.attributes[static_cast<std::size_t>(attr)];
    json levels = json::object();
    for (std::size_t lvl = 0; lvl < rows.size(); ++lvl) levels[a.levels[lvl]] = rows[lvl];
    mu[a.name] = std::move(levels);
  }
  j["mu"] = std::move(mu);
  save_json(j, path);
}

LoadedModel load_model(const std::filesystem::path& path, const AttributeSchema& schema) {
  json j = load_json(path);
  if (j.value("format_version", 0) != 1) throw DataError("unsupported model format version");
  if (j.at("schema_hash").get<std::uint64_t>() != schema.content_hash()) {
    throw DataError("model schema hash does not match the dataset schema");
  }
  LoadedModel model;
  model.kind = loss_kind_from_string(j.at("loss").get<std::string>());
  std::string form = j.value("form", "exponential");
  model.form = form == "linear" ? ModelForm::linear : ModelForm::exponential;
  model.features = features_from_json(j.at("features"), schema);
  model.params.f = j.at("f").get<int>();
  model.params.beta0 = j.at("beta0").get<double>();

  for (const auto& [attr_name, levels] : j.at("beta").items()) {
    int c = schema.attribute_index(attr_name);
    if (c < 0) throw DataError("model references unknown attribute: " + attr_name);
    const Attribute& a = schema.attributes[static_cast<std::size_t>(c)];
    std::vector<double> row(a.levels.size(), 0.0);
    for (const auto& [level_name, value] : levels.items()) {
      int lvl = a.level_index(level_name);
      if (lvl < 0) throw DataError("model references unknown level: " + level_name);
      row[static_cast<std::size_t>(lvl)] = value.get<double>();
    }
    model.params.beta[c] = std::move(row);
  }
  for (const auto& [attr_name, levels] : j.at("mu").items()) {
    int c = schema.attribute_index(attr_name);
    if (c < 0) throw DataError("model references unknown attribute: " + attr_name);
    const Attribute& a = schema.attributes[static_cast<std::size_t>(c)];
    std::vector<std::vector<double>> rows(
        a.levels.size(), std::vector<double>(static_cast<std::size_t>(model.params.f), 0.0));
    for (const auto& [level_name, value] : levels.items()) {
      int lvl = a.level_index(level_name);
      if (lvl < 0) throw DataError("model references unknown level: " + level_name);
      rows[static_cast<std::size_t>(lvl)] = value.get<std::vector<double>>();
      if (rows[static_cast<std::size_t>(lvl)].size() != static_cast<std::size_t>(model.params.f)) {
        throw DataError("model mu row has wrong dimensionality");
      }
    }
    model.params.mu[c] = std::move(rows);
  }
  return model;
}

json evaluation_to_json(const EvaluationReport& report) {
  return json{{"mape_store", report.mape_store}, {"mae_store", report.mae_store},
              {"mape_chain", report.mape_chain}, {"mae_chain", report.mae_chain},
              {"n_rows", report.n_rows},         {"n_items", report.n_items}};
}

json diagnostics_to_json(const TrainingDiagnostics& diag) {
  return json{{"mes", diag.mes},
              {"mpes", diag.mpes},
              {"underestimation_ratio", diag.underestimation_ratio},
              {"ratio_indicator", diag.ratio_indicator}};
}

json selection_to_json(const GfsfsResult& result, const AttributeSchema& schema) {
  json steps = json::array();
  for (const SelectionStep& step : result.trace) {
    json scores = json::array();
    for (const auto& [name, score] : step.delta.candidate_scores) {
      scores.push_back(json{{"candidate", name}, {"score", score}});
    }
    json s{{"iteration", step.iteration},
           {"direction", step.direction},
           {"candidate_scores", std::move(scores)},
           {"accepted", step.accepted}};
    if (step.tested) {
      s["cv_errors"] = step.cv.errors;
      if (std::isfinite(step.t_statistic)) {
        s["t_statistic"] = step.t_statistic;
      } else {
        s["t_statistic"] = step.t_statistic > 0 ? "inf" : "-inf";
      }
    }
    steps.push_back(std::move(s));
  }
  return json{{"selected", features_to_json(result.features, schema)},
              {"cv_errors", result.cv_errors.errors},
              {"steps", std::move(steps)}};
}

void write_forecast_csv(const std::filesystem::path& path, std::span<const ForecastRow> rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open forecast CSV for writing: " + path.string());
  out << "item,group,actual,forecast\n";
  for (const ForecastRow& row : rows) {
    out << row.key.item << ',' << row.key.group << ',' << fmt_double(row.actual) << ','
        << fmt_double(row.forecast) << '\n';
  }
}

std::vector<ForecastRow> read_forecast_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open forecast CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("forecast CSV is empty");
  std::vector<ForecastRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ForecastRow row;
    std::size_t p1 = line.find(',');
    std::size_t p2 = line.find(',', p1 + 1);
    std::size_t p3 = line.find(',', p2 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos) {
      throw DataError("forecast CSV row " + std::to_string(line_no) + " is malformed");
    }
    row.key.item = line.substr(0, p1);
    row.key.group = line.substr(p1 + 1, p2 - p1 - 1);
    row.actual = std::stod(line.substr(p2 + 1, p3 - p2 - 1));
    row.forecast = std::stod(line.substr(p3 + 1));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEntry> trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open trace CSV for writing: " + path.string());
  out << "iteration,training_error,objective,eta\n";
  for (const TraceEntry& e : trace) {
    out << e.iteration << ',' << fmt_double(e.training_error) << ',' << fmt_double(e.objective)
        << ',' << fmt_double(e.eta) << '\n';
  }
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j,
             {"eta", "max_iterations", "lambda_v", "lambda_w", "sigma", "f", "seed", "epsilon",
              "early_stop"},
             "train config");
  TrainConfig cfg;
  cfg.eta = j.value("eta", cfg.eta);
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.reg.lambda_v = j.value("lambda_v", 0.0);
  cfg.reg.lambda_w = j.value("lambda_w", 0.0);
  cfg.init_sigma = j.value("sigma", cfg.init_sigma);
  cfg.f = j.value("f", cfg.f);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("epsilon") && !j.at("epsilon").is_null()) {
    cfg.epsilon = j.at("epsilon").get<double>();
  }
  cfg.early_stop = j.value("early_stop", false);
  cfg.validate();
  return cfg;
}

SelectionConfig selection_config_from_json(const json& j, const TrainConfig& inner_base) {
  check_keys(j, {"b", "g", "lambda_A", "lambda_I", "k", "alpha", "seed", "eta", "max_iterations"},
             "selection config");
  SelectionConfig cfg;
  cfg.b = j.value("b", cfg.b);
  cfg.g = j.value("g", cfg.g);
  cfg.lambda_A = j.value("lambda_A", cfg.lambda_A);
  cfg.lambda_I = j.value("lambda_I", cfg.lambda_I);
  cfg.k = j.value("k", cfg.k);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.inner = inner_base;
  cfg.inner.reg = RegularizerTable{};
  cfg.inner.eta = j.value("eta", inner_base.eta);
  cfg.inner.max_iterations = j.value("max_iterations", inner_base.max_iterations);
  cfg.validate();
  return cfg;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  check_keys(j, {"loss", "mode", "train", "selection", "data", "output_dir"}, "pipeline config");
  PipelineConfig cfg;
  cfg.kind = loss_kind_from_string(j.value("loss", "PES"));
  cfg.mode = pipeline_mode_from_string(j.value("mode", "EFM"));
  cfg.refit = train_config_from_json(j.value("train", json::object()));
  cfg.selection = selection_config_from_json(j.value("selection", json::object()), cfg.refit);
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"train", "test", "schema_spec", "remap_unseen"}, "data config");
    cfg.train_path = d.value("train", "");
    cfg.test_path = d.value("test", "");
    cfg.schema_spec_path = d.value("schema_spec", "");
    cfg.remap_unseen_to_missing = d.value("remap_unseen", false);
  }
  cfg.output_dir = j.value("output_dir", "");
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(load_json(path));
}

}  // namespace efm
