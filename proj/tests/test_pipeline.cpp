#include <doctest.h>

#include <cmath>

#include "efm/errors.hpp"
#include "efm/pipeline.hpp"
#include "efm/serialize.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace efm;
using namespace efm::testing;

namespace {

PipelineConfig quick_pipeline(LossKind kind, const Dataset& train, std::uint64_t seed = 1) {
  PipelineConfig cfg;
  cfg.kind = kind;
  cfg.refit.eta = stable_eta(kind, train);
  cfg.refit.max_iterations = 1500;
  cfg.refit.init_sigma = 0.05;
  cfg.refit.seed = seed;
  cfg.selection.inner = cfg.refit;
  cfg.selection.inner.max_iterations = 600;
  cfg.selection.seed = seed;
  cfg.selection.b = 2;
  cfg.selection.g = 1;
  return cfg;
}

std::pair<Dataset, Dataset> split_fraction(const Dataset& data, std::size_t train_rows) {
  Dataset train{data.schema, {}, DatasetRole::training};
  Dataset test{data.schema, {}, DatasetRole::test};
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    (i < train_rows ? train : test).rows.push_back(data.rows[i]);
  }
  return {train, test};
}

double mape_between(const std::vector<PipelineForecast>& a,
                    const std::vector<PipelineForecast>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i].forecast - b[i].forecast) / b[i].forecast;
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("constant responses select nothing and forecast the constant") {
  AttributeSchema schema = make_schema({2, 3});
  DeterministicRng rng(60);
  Dataset all = random_dataset(schema, 120, rng,
                               [](const Observation&, DeterministicRng&) { return 4.0; });
  auto [train, test] = split_fraction(all, 90);

  PipelineConfig cfg = quick_pipeline(LossKind::pes, train);
  PipelineResult result = run_pipeline(train, test, cfg);

  CHECK(result.features.attributes.empty());
  CHECK(result.features.interactions.empty());
  for (const PipelineForecast& f : result.forecasts) {
    CHECK(f.forecast == doctest::Approx(4.0).epsilon(1e-4));
  }
  CHECK(result.evaluation.mape_store < 1e-4);
}

TEST_CASE("planted features are recovered and beat the null model on test error") {
  PlantedConfig pc;
  pc.informative_attributes = 2;
  pc.noise_attributes = 2;
  pc.interactions = 1;
  pc.rows = 500;
  pc.noise_sigma = 0.08;
  pc.seed = 61;
  PlantedData planted = planted_efm(pc);
  auto [train, test] = split_fraction(planted.data, 350);

  PipelineConfig cfg = quick_pipeline(LossKind::pes, train, 5);
  PipelineResult result = run_pipeline(train, test, cfg);

  for (int c : planted.planted.attributes) CHECK(result.features.has_attribute(c));
  for (auto pair : planted.planted.interactions) CHECK(result.features.has_interaction(pair));

  // Null-model comparison on the same test rows.
  double null_forecast = std::exp(null_model_beta0(LossKind::pes, train.responses()));
  double null_mape = 0.0;
  for (const Observation& row : test.rows) {
    null_mape += std::abs(null_forecast - row.response) / row.response;
  }
  null_mape /= static_cast<double>(test.rows.size());
  CHECK(result.evaluation.mape_store < null_mape);
}

TEST_CASE("log-mode pipeline reproduces a constant exactly") {
  AttributeSchema schema = make_schema({2});
  DeterministicRng rng(62);
  Dataset all = random_dataset(schema, 60, rng,
                               [](const Observation&, DeterministicRng&) { return 3.0; });
  auto [train, test] = split_fraction(all, 40);

  PipelineConfig cfg = quick_pipeline(LossKind::pes, train);
  cfg.mode = PipelineMode::logfm;
  cfg.refit.eta = 0.005;  // targets sit near log(3), well away from zero
  cfg.refit.max_iterations = 4000;
  PipelineResult result = run_pipeline(train, test, cfg);
  for (const PipelineForecast& f : result.forecasts) {
    CHECK(f.forecast == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("exponential and log modes agree when the truth is log-linear") {
  PlantedConfig pc;
  pc.informative_attributes = 2;
  pc.noise_attributes = 1;
  pc.rows = 400;
  pc.effect_scale = 0.8;
  pc.intercept = std::log(20.0);  // log targets stay far from zero
  pc.noise_sigma = 0.02;
  pc.seed = 63;
  PlantedData planted = planted_efm(pc);
  auto [train, test] = split_fraction(planted.data, 300);

  PipelineConfig cfg = quick_pipeline(LossKind::pes, train, 9);
  cfg.refit.max_iterations = 4000;
  PipelineResult efm_result = run_pipeline(train, test, cfg);
  cfg.mode = PipelineMode::logfm;
  cfg.refit.eta = 0.0005;
  PipelineResult log_result = run_pipeline(train, test, cfg);

  REQUIRE(efm_result.forecasts.size() == log_result.forecasts.size());
  CHECK(mape_between(log_result.forecasts, efm_result.forecasts) < 0.01);
}

TEST_CASE("log mode wins on heavily right-skewed responses more often than not") {
  int log_wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PlantedConfig pc;
    pc.informative_attributes = 2;
    pc.noise_attributes = 0;
    pc.rows = 220;
    pc.effect_scale = 0.8;
    pc.noise_sigma = 1.0;  // heavy multiplicative tail
    pc.intercept = std::log(5.0);
    pc.seed = 100 + seed;
    PlantedData planted = planted_efm(pc);
    auto [train, test] = split_fraction(planted.data, 160);

    // The raw-scale squared fit chases the tail means, so give it enough
    // iterations to actually get there before comparing.
    PipelineConfig cfg = quick_pipeline(LossKind::es, train, seed);
    cfg.selection.inner.max_iterations = 400;
    cfg.refit.max_iterations = 12000;
    PipelineResult efm_result = run_pipeline(train, test, cfg);
    cfg.mode = PipelineMode::logfm;
    cfg.refit.eta = 0.0005;
    cfg.refit.max_iterations = 3000;
    PipelineResult log_result = run_pipeline(train, test, cfg);

    if (log_result.evaluation.mape_store <= efm_result.evaluation.mape_store) ++log_wins;
  }
  CHECK(log_wins >= 6);
}

TEST_CASE("the test file is only opened after the training stages finish") {
  TempDir tmp("pipeline");
  PlantedConfig pc;
  pc.rows = 120;
  pc.noise_attributes = 1;
  pc.seed = 64;
  PlantedData planted = planted_efm(pc);
  auto [train, test] = split_fraction(planted.data, 90);
  save_dataset(train, tmp.file("train.json"));
  save_dataset(test, tmp.file("test.json"));

  PipelineConfig cfg = quick_pipeline(LossKind::pes, train, 3);
  cfg.selection.inner.max_iterations = 200;
  cfg.refit.max_iterations = 300;
  cfg.train_path = tmp.file("train.json");
  cfg.test_path = tmp.file("test.json");
  PipelineResult result = run_pipeline(cfg);

  std::size_t refit_end = 0, test_load = 0;
  for (std::size_t i = 0; i < result.stage_log.size(); ++i) {
    if (result.stage_log[i] == "stage2:refit:end") refit_end = i;
    if (result.stage_log[i].rfind("stage3:test:load", 0) == 0) test_load = i;
  }
  CHECK(refit_end > 0);
  CHECK(test_load > refit_end);
}

TEST_CASE("identical configs give bit-identical pipeline results") {
  PlantedConfig pc;
  pc.rows = 150;
  pc.seed = 65;
  PlantedData planted = planted_efm(pc);
  auto [train, test] = split_fraction(planted.data, 110);

  PipelineConfig cfg = quick_pipeline(LossKind::es, train, 12);
  cfg.selection.inner.max_iterations = 200;
  cfg.refit.max_iterations = 300;

  PipelineResult a = run_pipeline(train, test, cfg);
  PipelineResult b = run_pipeline(train, test, cfg);
  REQUIRE(a.forecasts.size() == b.forecasts.size());
  for (std::size_t i = 0; i < a.forecasts.size(); ++i) {
    CHECK(a.forecasts[i].forecast == b.forecasts[i].forecast);
  }
  for (const ParamRef& ref : enumerate_params(a.params)) {
    CHECK(get_param(a.params, ref) == get_param(b.params, ref));
  }
}

TEST_CASE("pipelines with mismatched schemas are rejected") {
  PlantedConfig pc;
  pc.rows = 40;
  pc.seed = 66;
  PlantedData planted = planted_efm(pc);
  auto [train, test] = split_fraction(planted.data, 30);
  Dataset other = test;
  other.schema.attributes[0].name = "renamed";
  PipelineConfig cfg = quick_pipeline(LossKind::pes, train);
  CHECK_THROWS_AS(run_pipeline(train, other, cfg), DataError);
}
