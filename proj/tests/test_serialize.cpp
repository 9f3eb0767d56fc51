#include <doctest.h>

#include "efm/errors.hpp"
#include "efm/serialize.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace efm;
using namespace efm::testing;

TEST_CASE("dataset json round trip preserves schema, keys and responses") {
  AttributeSchema schema = make_schema({2, 3});
  schema.attributes[1].bin_upper_edges = {1.5, 4.0, 9.0};
  Dataset data = dataset_from_levels(schema, {{0, 2}, {1, 0}}, {3.25, 0.1});
  data.rows[0].key.group = "g7";

  TempDir tmp("serialize");
  save_dataset(data, tmp.file("d.json"));
  Dataset again = load_dataset(tmp.file("d.json"));

  CHECK(again.schema.content_hash() == data.schema.content_hash());
  REQUIRE(again.rows.size() == 2);
  CHECK(again.rows[0].key == data.rows[0].key);
  CHECK(again.rows[0].active_levels == data.rows[0].active_levels);
  CHECK(again.rows[0].response == data.rows[0].response);
  CHECK(again.rows[1].response == 0.1);
}

TEST_CASE("model files restore every coefficient and reject wrong schemas") {
  RandomInstance inst = random_instance(77);
  TempDir tmp("serialize");
  save_model(tmp.file("m.json"), inst.params, inst.features, inst.data.schema, LossKind::pes,
             ModelForm::exponential);

  LoadedModel loaded = load_model(tmp.file("m.json"), inst.data.schema);
  CHECK(loaded.kind == LossKind::pes);
  CHECK(loaded.form == ModelForm::exponential);
  CHECK(loaded.features.attributes == inst.features.attributes);
  CHECK(loaded.features.interactions == inst.features.interactions);
  for (const ParamRef& ref : enumerate_params(inst.params)) {
    CHECK(get_param(loaded.params, ref) == get_param(inst.params, ref));
  }

  AttributeSchema other = inst.data.schema;
  other.attributes[0].levels.push_back("extra");
  CHECK_THROWS_AS(load_model(tmp.file("m.json"), other), DataError);
}

TEST_CASE("schema specs parse and reject unknown keys") {
  nlohmann::json good{{"response_column", "sales"},
                      {"attribute_columns", {"color"}},
                      {"numeric_columns", {{{"column", "price"}, {"bins", 5}}}},
                      {"key_columns", {"item"}}};
  SchemaSpec spec = schema_spec_from_json(good);
  CHECK(spec.response_column == "sales");
  REQUIRE(spec.numeric_columns.size() == 1);
  CHECK(spec.numeric_columns[0].bins == 5);

  nlohmann::json typo = good;
  typo["respnse_column"] = "sales";
  CHECK_THROWS_AS(schema_spec_from_json(typo), ConfigError);
}

TEST_CASE("pipeline configs use the standard hyper-parameter keys") {
  nlohmann::json j{
      {"loss", "PES"},
      {"mode", "EFM"},
      {"train",
       {{"eta", 4.95e-6},
        {"max_iterations", 4000},
        {"lambda_v", 1e-3},
        {"lambda_w", 10.0},
        {"sigma", 0.1},
        {"f", 2},
        {"seed", 7}}},
      {"selection",
       {{"b", 3}, {"g", 2}, {"lambda_A", 0.005}, {"lambda_I", 0.1}, {"k", 5}, {"alpha", 0.05},
        {"seed", 11}, {"eta", 1e-5}}},
      {"output_dir", "out"}};

  PipelineConfig cfg = pipeline_config_from_json(j);
  CHECK(cfg.kind == LossKind::pes);
  CHECK(cfg.refit.eta == 4.95e-6);
  CHECK(cfg.refit.max_iterations == 4000);
  CHECK(cfg.refit.reg.lambda_v == 1e-3);
  CHECK(cfg.refit.reg.lambda_w == 10.0);
  CHECK(cfg.refit.init_sigma == 0.1);
  CHECK(cfg.refit.f == 2);
  CHECK(cfg.selection.b == 3);
  CHECK(cfg.selection.g == 2);
  CHECK(cfg.selection.lambda_A == 0.005);
  CHECK(cfg.selection.lambda_I == 0.1);
  CHECK(cfg.selection.k == 5);
  CHECK(cfg.selection.inner.eta == 1e-5);
  CHECK(cfg.selection.inner.max_iterations == 4000);
  // Selection-time fits are always unregularized.
  CHECK(cfg.selection.inner.reg.lambda_v == 0.0);
  CHECK(cfg.selection.inner.reg.lambda_w == 0.0);

  nlohmann::json bad = j;
  bad["loss"] = "huber";
  CHECK_THROWS_AS(pipeline_config_from_json(bad), ConfigError);

  nlohmann::json typo = j;
  typo["train"]["lamda_v"] = 1.0;
  CHECK_THROWS_AS(pipeline_config_from_json(typo), ConfigError);
}

TEST_CASE("forecast csv round trip") {
  TempDir tmp("serialize");
  std::vector<ForecastRow> rows{{{"sku1", "s1"}, 3.5, 3.25}, {{"sku2", ""}, 0.1, 0.125}};
  write_forecast_csv(tmp.file("f.csv"), rows);
  std::vector<ForecastRow> again = read_forecast_csv(tmp.file("f.csv"));
  REQUIRE(again.size() == 2);
  CHECK(again[0].key == rows[0].key);
  CHECK(again[0].actual == rows[0].actual);
  CHECK(again[0].forecast == rows[0].forecast);
  CHECK(again[1].key.group.empty());
  CHECK(again[1].forecast == 0.125);
}

TEST_CASE("selection traces serialize with the partition kept separate") {
  AttributeSchema schema = make_schema({2});
  Dataset data = dataset_from_levels(schema, {{0}, {1}, {0}, {1}}, {1.0, 2.0, 3.0, 4.0});
  KFoldPartition part = partition_kfold(data, 2, 3);
  nlohmann::json j = partition_to_json(part, data);
  CHECK(j.at("k") == 2);
  CHECK(j.at("fold_of_key").size() == 4);
}
