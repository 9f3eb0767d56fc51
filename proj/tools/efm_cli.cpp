#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "efm/errors.hpp"
#include "efm/lps.hpp"
#include "efm/pipeline.hpp"
#include "efm/serialize.hpp"

namespace {

using namespace efm;

int cmd_ingest(const std::string& csv, const std::string& spec_path, const std::string& out,
               const std::string& role, const std::string& schema_from, bool remap_unseen) {
  SchemaSpec spec = load_schema_spec(spec_path);
  LoadOptions options;
  AttributeSchema training_schema;
  if (role == "test") {
    if (schema_from.empty()) {
      throw ConfigError("test-role ingest needs --schema pointing at the training dataset");
    }
    training_schema = load_dataset(schema_from).schema;
    options.role = DatasetRole::test;
    options.training_schema = &training_schema;
    options.remap_unseen_to_missing = remap_unseen;
  }
  Dataset data = load_csv(csv, spec, options);
  save_dataset(data, out);
  std::cout << "wrote " << out << " (" << data.rows.size() << " rows, "
            << data.schema.attributes.size() << " attributes)\n";
  return 0;
}

int cmd_select(const std::string& train_path, const std::string& config_path,
               const std::string& out, const std::string& trace_out) {
  nlohmann::json cfg_json = load_json(config_path);
  PipelineConfig cfg = pipeline_config_from_json(cfg_json);
  Dataset data = load_dataset(train_path);
  GfsfsResult result = gfsfs(data, cfg.kind, cfg.selection);
  save_json(features_to_json(result.features, data.schema), out);
  if (!trace_out.empty()) save_json(selection_to_json(result, data.schema), trace_out);
  std::cout << "selected " << result.features.attributes.size() << " attributes, "
            << result.features.interactions.size() << " interactions; mean CV error "
            << result.cv_errors.mean() << "\n";
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& features_path,
              const std::string& config_path, const std::string& out,
              const std::string& trace_csv) {
  nlohmann::json cfg_json = load_json(config_path);
  PipelineConfig cfg = pipeline_config_from_json(cfg_json);
  Dataset data = load_dataset(train_path);
  FeatureConfig features;
  if (!features_path.empty()) {
    features = features_from_json(load_json(features_path), data.schema);
  }
  TrainReport report = train(data, features, cfg.kind, cfg.refit);
  save_model(out, report.final_params, features, data.schema, cfg.kind,
             cfg.mode == PipelineMode::logfm ? ModelForm::linear : ModelForm::exponential);
  if (!trace_csv.empty()) write_trace_csv(trace_csv, report.trace);
  std::cout << "trained " << report.final_params.scalar_count() << " parameters over "
            << report.trace.size() << " iterations (" << report.halvings
            << " rate halvings); final training error "
            << (report.trace.empty() ? 0.0 : report.trace.back().training_error) << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out) {
  Dataset data = load_dataset(data_path);
  LoadedModel model = load_model(model_path, data.schema);
  std::vector<ForecastRow> rows;
  rows.reserve(data.rows.size());
  for (const Observation& row : data.rows) {
    double value = model.form == ModelForm::exponential
                       ? forecast(model.params, model.features, row)
                       : std::exp(logfm_forecast(model.params, model.features, row));
    rows.push_back({row.key, row.response, value});
  }
  write_forecast_csv(out, rows);
  std::cout << "wrote " << rows.size() << " forecasts to " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& forecasts_path, const std::string& out) {
  std::vector<ForecastRow> rows = read_forecast_csv(forecasts_path);
  std::map<RowKey, double> forecasts;
  std::map<RowKey, double> actuals;
  for (const ForecastRow& row : rows) {
    forecasts[row.key] = row.forecast;
    actuals[row.key] = row.actual;
  }
  EvaluationReport report = evaluate(forecasts, actuals);
  nlohmann::json j = evaluation_to_json(report);
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    save_json(j, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir) {
  PipelineConfig cfg = load_pipeline_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  PipelineResult result = run_pipeline(cfg);
  std::printf("selected %zu attributes, %zu interactions\n", result.features.attributes.size(),
              result.features.interactions.size());
  std::printf("test rows %zu, items %zu\n", result.evaluation.n_rows, result.evaluation.n_items);
  std::printf("MAPE store %.4f chain %.4f | MAE store %.4f chain %.4f\n",
              result.evaluation.mape_store, result.evaluation.mape_chain,
              result.evaluation.mae_store, result.evaluation.mae_chain);
  std::printf("training MES %.6g MPES %.6g underestimation %.3f ratio %.6g\n",
              result.train_diagnostics.mes, result.train_diagnostics.mpes,
              result.train_diagnostics.underestimation_ratio,
              result.train_diagnostics.ratio_indicator);
  return 0;
}

int cmd_lps_sweep(double from, double to, double step, int n, std::uint64_t seed,
                  const std::string& out) {
  if (step <= 0 || to < from) throw ConfigError("invalid sigma range");
  std::vector<double> sigmas;
  for (double s = from; s <= to + 1e-12; s += step) sigmas.push_back(s);
  SyntheticConfig base;
  base.n = n;
  base.seed = seed;
  std::vector<SweepRow> rows = sweep_sigma(sigmas, base);
  write_sweep_csv(rows, out);
  std::cout << "wrote " << rows.size() << " sweep rows to " << out << "\n";
  return 0;
}

int cmd_theorem_check(const std::string& data_path, const std::string& features_path) {
  Dataset data = load_dataset(data_path);
  FeatureConfig features;
  if (!features_path.empty()) {
    features = features_from_json(load_json(features_path), data.schema);
  }
  Theorem1Report report = verify_theorem1(data, features);
  std::printf("ES  loss at ES minimizer  %.10g\n", report.es_at_es_min);
  std::printf("ES  loss at PES minimizer %.10g (ratio %.6g, bound %.6g)\n", report.es_at_pes_min,
              report.es_ratio, report.ratio_bound);
  std::printf("PES loss at PES minimizer %.10g\n", report.pes_at_pes_min);
  std::printf("PES loss at ES minimizer  %.10g (ratio %.6g, bound %.6g)\n", report.pes_at_es_min,
              report.pes_ratio, report.ratio_bound);
  std::printf("ES chain %s, PES chain %s\n", report.es_chain_holds ? "holds" : "VIOLATED",
              report.pes_chain_holds ? "holds" : "VIOLATED");
  return report.es_chain_holds && report.pes_chain_holds ? 0 : 1;
}

int cmd_distribution(const std::string& data_path) {
  Dataset data = load_dataset(data_path);
  std::array<double, 4> dist = response_distribution(data.responses());
  std::printf("%-18s %-18s %-18s %-18s\n", "[min, max/4]", "(max/4, max/2]", "(max/2, 3max/4]",
              "(3max/4, max]");
  std::printf("%-18.4f %-18.4f %-18.4f %-18.4f\n", dist[0], dist[1], dist[2], dist[3]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential factorization machine forecasting toolkit"};
  app.require_subcommand(1);

  std::string csv, spec_path, out, role = "train", schema_from;
  bool remap_unseen = false;
  auto* ingest = app.add_subcommand("ingest", "Load a CSV into an encoded dataset");
  ingest->add_option("--csv", csv, "input CSV file")->required();
  ingest->add_option("--spec", spec_path, "schema spec JSON")->required();
  ingest->add_option("--out", out, "output dataset JSON")->required();
  ingest->add_option("--role", role, "train or test")->check(CLI::IsMember({"train", "test"}));
  ingest->add_option("--schema", schema_from, "training dataset JSON providing the schema");
  ingest->add_flag("--remap-unseen", remap_unseen,
                   "map unseen test levels to the missing level instead of failing");

  std::string train_path, config_path, trace_out;
  auto* select = app.add_subcommand("select", "Greedy forward stepwise feature selection");
  select->add_option("--train", train_path, "training dataset JSON")->required();
  select->add_option("--config", config_path, "config JSON")->required();
  select->add_option("--out", out, "selected features JSON")->required();
  select->add_option("--trace", trace_out, "selection trace JSON");

  std::string features_path, trace_csv;
  auto* train_cmd = app.add_subcommand("train", "Train parameters with ABGD");
  train_cmd->add_option("--train", train_path, "training dataset JSON")->required();
  train_cmd->add_option("--features", features_path, "feature JSON (defaults to the null model)");
  train_cmd->add_option("--config", config_path, "config JSON")->required();
  train_cmd->add_option("--out", out, "model JSON")->required();
  train_cmd->add_option("--trace-csv", trace_csv, "iteration trace CSV");

  std::string model_path, data_path;
  auto* predict = app.add_subcommand("predict", "Forecast a dataset with a trained model");
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--data", data_path, "dataset JSON")->required();
  predict->add_option("--out", out, "forecast CSV")->required();

  std::string forecasts_path;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Row and item level MAPE/MAE");
  evaluate_cmd->add_option("--forecasts", forecasts_path, "forecast CSV")->required();
  evaluate_cmd->add_option("--out", out, "report JSON (stdout when omitted)");

  std::string out_dir;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "Selection, regularized re-fit, test evaluation");
  pipeline_cmd->add_option("--config", config_path, "config JSON")->required();
  pipeline_cmd->add_option("--out-dir", out_dir, "artifact directory (overrides the config)");

  double sigma_from = 1.0, sigma_to = 200.0, sigma_step = 1.0;
  int sweep_n = 100;
  std::uint64_t sweep_seed = 0;
  auto* sweep = app.add_subcommand("lps-sweep", "Least-percentage-squares noise sweep");
  sweep->add_option("--sigma-from", sigma_from, "first noise level");
  sweep->add_option("--sigma-to", sigma_to, "last noise level");
  sweep->add_option("--sigma-step", sigma_step, "noise increment");
  sweep->add_option("--n", sweep_n, "points per dataset");
  sweep->add_option("--seed", sweep_seed, "base seed");
  sweep->add_option("--out", out, "sweep CSV")->required();

  auto* theorem = app.add_subcommand("theorem-check", "Loss bound check on a tiny dataset");
  theorem->add_option("--data", data_path, "dataset JSON")->required();
  theorem->add_option("--features", features_path, "feature JSON (defaults to the null model)");

  auto* distribution = app.add_subcommand("distribution", "Response distribution quarters");
  distribution->add_option("--data", data_path, "dataset JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (app.got_subcommand(ingest)) {
      return cmd_ingest(csv, spec_path, out, role, schema_from, remap_unseen);
    }
    if (app.got_subcommand(select)) return cmd_select(train_path, config_path, out, trace_out);
    if (app.got_subcommand(train_cmd)) {
      return cmd_train(train_path, features_path, config_path, out, trace_csv);
    }
    if (app.got_subcommand(predict)) return cmd_predict(model_path, data_path, out);
    if (app.got_subcommand(evaluate_cmd)) return cmd_evaluate(forecasts_path, out);
    if (app.got_subcommand(pipeline_cmd)) return cmd_pipeline(config_path, out_dir);
    if (app.got_subcommand(sweep)) {
      return cmd_lps_sweep(sigma_from, sigma_to, sigma_step, sweep_n, sweep_seed, out);
    }
    if (app.got_subcommand(theorem)) return cmd_theorem_check(data_path, features_path);
    if (app.got_subcommand(distribution)) return cmd_distribution(data_path);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
