#include <doctest.h>

#include <cmath>
#include <numeric>

#include "efm/errors.hpp"
#include "efm/train.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace efm;
using namespace efm::testing;

namespace {

Dataset null_schema_data(const std::vector<double>& responses) {
  AttributeSchema schema = make_schema({2});
  std::vector<std::vector<int>> levels(responses.size(), {0});
  return dataset_from_levels(schema, levels, responses);
}

}  // namespace

TEST_CASE("adaptation threshold defaults per loss and accepts overrides") {
  CHECK(resolve_epsilon(LossKind::pes) == 0.1);
  CHECK(resolve_epsilon(LossKind::es) == 1.0);

  TrainConfig cfg;
  cfg.epsilon = 0.05;
  CHECK(cfg.epsilon.value_or(resolve_epsilon(LossKind::pes)) == 0.05);
  TrainConfig plain;
  CHECK(plain.epsilon.value_or(resolve_epsilon(LossKind::es)) == 1.0);
}

TEST_CASE("null-model training converges to the analytic intercepts") {
  Dataset data = null_schema_data({1.0, 2.0, 4.0});
  FeatureConfig null_features;

  TrainConfig cfg;
  cfg.eta = 0.05;
  cfg.max_iterations = 4000;

  TrainReport es = train(data, null_features, LossKind::es, cfg);
  CHECK(es.final_params.beta0 == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-3));

  cfg.eta = 0.2;
  TrainReport pes = train(data, null_features, LossKind::pes, cfg);
  CHECK(pes.final_params.beta0 == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-3));

  // Grid oracle over the intercept confirms both analytic targets.
  auto es_objective = [&](double b) {
    double s = 0.0;
    for (double d : {1.0, 2.0, 4.0}) s += (std::exp(b) - d) * (std::exp(b) - d);
    return 0.5 * s;
  };
  auto pes_objective = [&](double b) {
    double s = 0.0;
    for (double d : {1.0, 2.0, 4.0}) {
      double e = (std::exp(b) - d) / d;
      s += e * e;
    }
    return 0.5 * s;
  };
  CHECK(grid_refine_1d(es_objective, -2.0, 3.0) ==
        doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-7));
  CHECK(grid_refine_1d(pes_objective, -2.0, 3.0) ==
        doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-7));
}

TEST_CASE("a model that already fits exactly is a fixed point") {
  Dataset data = null_schema_data({1.0, 1.0, 1.0});  // zero parameters forecast 1
  AttributeSchema schema = data.schema;
  FeatureConfig features;
  features.attributes = {0};

  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.max_iterations = 50;
  cfg.init_sigma = 0.0;  // factor entries start at zero as well

  TrainReport report = train(data, features, LossKind::es, cfg);
  CHECK(report.final_params.beta0 == 0.0);
  for (const auto& [attr, row] : report.final_params.beta) {
    for (double v : row) CHECK(v == 0.0);
  }
  for (const TraceEntry& e : report.trace) CHECK(e.training_error == 0.0);
}

TEST_CASE("training is bit-deterministic for identical inputs") {
  PlantedConfig pc;
  pc.rows = 60;
  pc.seed = 3;
  PlantedData planted = planted_efm(pc);
  FeatureConfig features = planted.planted;
  features.interactions = {{0, 1}};

  TrainConfig cfg;
  cfg.eta = 1e-3;
  cfg.max_iterations = 200;
  cfg.seed = 17;

  TrainReport a = train(planted.data, features, LossKind::pes, cfg);
  TrainReport b = train(planted.data, features, LossKind::pes, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].training_error == b.trace[i].training_error);
    CHECK(a.trace[i].objective == b.trace[i].objective);
    CHECK(a.trace[i].eta == b.trace[i].eta);
  }
  for (const ParamRef& ref : enumerate_params(a.final_params)) {
    CHECK(get_param(a.final_params, ref) == get_param(b.final_params, ref));
  }

  TrainConfig other_seed = cfg;
  other_seed.seed = 18;
  TrainReport c = train(planted.data, features, LossKind::pes, other_seed);
  bool any_different = false;
  for (const ParamRef& ref : enumerate_params(a.final_params)) {
    if (get_param(a.final_params, ref) != get_param(c.final_params, ref)) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("updates within one iteration all use the pre-iteration parameters") {
  // One row, one attribute: the intercept and the level coefficient share the
  // same gradient, so a simultaneous first step moves both by eta exactly.
  AttributeSchema schema = make_schema({1});
  Dataset data = dataset_from_levels(schema, {{0}}, {2.0});
  FeatureConfig features;
  features.attributes = {0};

  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.max_iterations = 1;
  cfg.init_sigma = 0.0;

  TrainReport report = train(data, features, LossKind::es, cfg);
  // v = 0.1 * (1 - 2) * 1 = -0.1 for the single row.
  CHECK(report.final_params.beta0 == 0.1);
  CHECK(report.final_params.beta[0][0] == 0.1);

  // A sequential sweep would refresh the forecast before the second update
  // and land somewhere else.
  double b0_seq = 0.1;
  double v_seq = 0.1 * (std::exp(b0_seq) - 2.0) * std::exp(b0_seq);
  double beta_seq = 0.0 - v_seq;
  CHECK(beta_seq != doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("the learning rate never increases") {
  Dataset data = null_schema_data({0.9, 1.0, 1.1, 1.05, 0.95});
  FeatureConfig features;
  TrainConfig cfg;
  cfg.eta = 0.45;  // just past the stable step so oscillation trips the rule
  cfg.max_iterations = 400;

  TrainReport report = train(data, features, LossKind::pes, cfg);
  for (std::size_t i = 1; i < report.trace.size(); ++i) {
    CHECK(report.trace[i].eta <= report.trace[i - 1].eta);
  }
  CHECK(report.halvings > 0);
}

TEST_CASE("after the rate settles the objective is non-increasing") {
  Dataset data = null_schema_data({0.9, 1.0, 1.1, 1.05, 0.95});
  FeatureConfig features;
  TrainConfig cfg;
  cfg.eta = 0.45;
  cfg.max_iterations = 400;

  TrainReport report = train(data, features, LossKind::pes, cfg);
  double epsilon = resolve_epsilon(LossKind::pes);
  REQUIRE(report.halvings > 0);
  // Rises between successive halvings are what the extra halvings repair;
  // once the rate has settled the descent must be clean.
  std::size_t settled = 1;
  for (std::size_t i = 1; i < report.trace.size(); ++i) {
    if (report.trace[i].eta < report.trace[i - 1].eta) settled = i;
  }
  for (std::size_t i = settled + 1; i < report.trace.size(); ++i) {
    if (report.trace[i - 1].training_error < epsilon) {
      CHECK(report.trace[i].objective <= report.trace[i - 1].objective + 1e-9);
    }
  }
}

TEST_CASE("null-model runs land on the analytic solution for random data") {
  DeterministicRng rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t n = 5 + rng.next_below(20);
    std::vector<double> responses;
    for (std::size_t i = 0; i < n; ++i) responses.push_back(rng.uniform(0.5, 6.0));
    Dataset data = null_schema_data(responses);
    FeatureConfig features;

    TrainConfig cfg;
    cfg.max_iterations = 6000;
    for (LossKind kind : {LossKind::es, LossKind::pes}) {
      cfg.eta = kind == LossKind::es ? 0.002 : 0.05;
      TrainReport report = train(data, features, kind, cfg);
      double expected = kind == LossKind::es
                            ? std::log(std::accumulate(responses.begin(), responses.end(), 0.0) /
                                       static_cast<double>(n))
                            : [&] {
                                double inv = 0, inv2 = 0;
                                for (double d : responses) {
                                  inv += 1 / d;
                                  inv2 += 1 / (d * d);
                                }
                                return std::log(inv / inv2);
                              }();
      CHECK(report.final_params.beta0 == doctest::Approx(expected).epsilon(1e-3));
    }
  }
}

TEST_CASE("non-finite objectives abort with a divergence error") {
  Dataset data = null_schema_data({1.0, 500.0, 900.0});
  FeatureConfig features;
  TrainConfig cfg;
  cfg.eta = 10.0;  // far beyond stable for squared loss at this scale
  cfg.max_iterations = 50;
  CHECK_THROWS_AS(train(data, features, LossKind::es, cfg), DivergenceError);
}

TEST_CASE("trace length is capped by the iteration budget") {
  Dataset data = null_schema_data({1.0, 2.0});
  FeatureConfig features;
  TrainConfig cfg;
  cfg.eta = 0.01;
  cfg.max_iterations = 37;
  TrainReport report = train(data, features, LossKind::es, cfg);
  CHECK(report.trace.size() == 37);

  cfg.early_stop = true;
  cfg.max_iterations = 100000;
  TrainReport stopped = train(data, features, LossKind::es, cfg);
  CHECK(stopped.trace.size() < 100000);
}

TEST_CASE("config validation rejects bad settings") {
  TrainConfig cfg;
  cfg.eta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.eta = 0.1;
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_iterations = 10;
  cfg.reg.lambda_v = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
