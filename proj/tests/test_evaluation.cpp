// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wash/error.hpp"
#include "wash/evaluation.hpp"
#include "wash/population.hpp"

using namespace wash;

namespace {

// A 2-input, 2-class net whose output ignores the input: logits = bias.
LayeredParams constant_logits(const NetSpec& spec, double b0, double b1) {
  return LayeredParams(spec.layout(), {0, 0, b0, 0, 0, b1});
}

RunConfig trained_config() {
  RunConfig cfg;
  cfg.net = NetSpec{{6, 16, 3}, Activation::kRelu};
  cfg.data.synthetic.classes = 3;
  cfg.data.synthetic.dim = 6;
  cfg.data.synthetic.n_train = 600;
  cfg.data.synthetic.n_test = 300;
  cfg.data.synthetic.val_fraction = 0.1;
  cfg.n_models = 3;
  cfg.epochs = 4;
  cfg.batch = 16;
  cfg.strategy.kind = StrategyKind::kWash;
  cfg.strategy.p = 0.1;
  cfg.strategy.schedule = Schedule::kConstant;
  return cfg;
}

}  // namespace

TEST_CASE("ensemble averages probabilities") {
  NetSpec spec{{2, 2}, Activation::kRelu};
  std::vector<LayeredParams> pop = {
      constant_logits(spec, std::log(0.9), std::log(0.1)),
      constant_logits(spec, std::log(0.2), std::log(0.8))};
  Split split;
  split.dim = 2;
  split.inputs = {0.0, 0.0, 1.0, 1.0};
  split.labels = {0, 1};
  // Averaged probabilities (0.55, 0.45) pick class 0 for both examples.
  CHECK(ensemble_accuracy(spec, pop, split) == 0.5);
  std::vector<LayeredParams> single = {pop[1]};
  CHECK(ensemble_accuracy(spec, single, split) == 0.5);
  split.labels = {0, 0};
  CHECK(ensemble_accuracy(spec, pop, split) == 1.0);
}

TEST_CASE("ensemble of copies equals the single model") {
  const RunConfig cfg = trained_config();
  const auto run = train_population(cfg);
  const auto data = load_run_dataset(cfg);
  std::vector<LayeredParams> copies(4, run.state.models[1]);
  CHECK(ensemble_accuracy(cfg.net, copies, data.test) ==
        accuracy(cfg.net, run.state.models[1], data.test));
}

TEST_CASE("ensemble matches a per-example recomputation") {
  RunConfig cfg = trained_config();
  cfg.strategy.kind = StrategyKind::kNone;
  const auto run = train_population(cfg);
  const auto data = load_run_dataset(cfg);
  for (auto mode : {EnsembleMode::kProbabilities, EnsembleMode::kLogits}) {
    std::size_t correct = 0;
    for (std::size_t e = 0; e < data.test.size(); ++e) {
      Matrix x(1, cfg.net.input_dim());
      const auto in = data.test.input(e);
      std::copy(in.begin(), in.end(), x.data.begin());
      std::vector<double> acc(3, 0.0);
      for (const auto& m : run.state.models) {
        const auto logits = forward(cfg.net, m, x).data;
        double peak = std::max({logits[0], logits[1], logits[2]});
        double z = 0;
        for (double v : logits) z += std::exp(v - peak);
        for (int k = 0; k < 3; ++k) {
          acc[k] += mode == EnsembleMode::kLogits
                        ? logits[k]
                        : std::exp(logits[k] - peak) / z;
        }
      }
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (acc[k] > acc[best]) best = k;
      }
      if (best == static_cast<int>(data.test.labels[e])) ++correct;
    }
    CHECK(ensemble_accuracy(cfg.net, run.state.models, data.test, mode) ==
          static_cast<double>(correct) / data.test.size());
  }
}

TEST_CASE("greedy soup") {
  const RunConfig cfg = trained_config();
  const auto run = train_population(cfg);
  const auto data = load_run_dataset(cfg);

  SUBCASE("identical models all join") {
    std::vector<LayeredParams> same(3, run.state.models[0]);
    const auto soup = greedy_soup(cfg.net, same, data.val, data.test);
    CHECK(soup.subset == std::vector<std::size_t>{0, 1, 2});
    CHECK(soup.test_accuracy == accuracy(cfg.net, same[0], data.test));
  }
  SUBCASE("a single model is its own soup") {
    std::vector<LayeredParams> one = {run.state.models[2]};
    const auto soup = greedy_soup(cfg.net, one, data.val, data.test);
    CHECK(soup.subset == std::vector<std::size_t>{0});
  }
  SUBCASE("a garbage model is left out") {
    auto pop = run.state.models;
    LayeredParams garbage = init_params(cfg.net, 12345);
    for (auto& v : garbage.flat()) v *= 20.0;
    pop.insert(pop.begin() + 1, garbage);
    const auto soup = greedy_soup(cfg.net, pop, data.val, data.test);
    CHECK(std::find(soup.subset.begin(), soup.subset.end(), 1) ==
          soup.subset.end());
    double best_val = 0;
    std::size_t best = 0;
    for (std::size_t n = 0; n < pop.size(); ++n) {
      const double v = accuracy(cfg.net, pop[n], data.val);
      if (v > best_val) {
        best_val = v;
        best = n;
      }
    }
    CHECK(soup.subset.front() == best);
    CHECK(soup.val_accuracy >= best_val);
  }
  SUBCASE("empty validation split") {
    CHECK_THROWS_AS(
        greedy_soup(cfg.net, run.state.models, Split{}, data.test),
        ValidationError);
  }
}

TEST_CASE("interpolation grid") {
  RunConfig cfg = trained_config();
  cfg.strategy.kind = StrategyKind::kNone;
  const auto run = train_population(cfg);
  const auto data = load_run_dataset(cfg);
  const std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto grid =
      interpolation_grid(cfg.net, run.state.models, lambdas, data.test);
  REQUIRE(grid.acc.size() == 5);
  for (std::size_t a = 0; a < 3; ++a) {
    const double own = accuracy(cfg.net, run.state.models[a], data.test);
    for (std::size_t k = 0; k < 5; ++k) CHECK(grid.acc[k][a][a] == own);
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(grid.acc[0][a][b] == own);
      CHECK(grid.acc[4][b][a] == own);
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(grid.acc[k][a][b] == grid.acc[4 - k][b][a]);
      }
    }
  }

  const auto simplex =
      simplex_grid(cfg.net, run.state.models, {0, 1, 2}, 4, data.test);
  CHECK(simplex.size() == 15);
  for (const auto& pt : simplex) {
    CHECK(pt.weights[0] + pt.weights[1] + pt.weights[2] ==
          doctest::Approx(1.0));
    if (pt.weights[0] == 1.0) {
      CHECK(pt.accuracy == accuracy(cfg.net, run.state.models[0], data.test));
    }
  }
}

TEST_CASE("evaluation summary") {
  const RunConfig cfg = trained_config();
  const auto run = train_population(cfg);
  REQUIRE(run.eval);
  const auto& e = *run.eval;
  CHECK(e.per_model_acc.size() == 3);
  CHECK(e.best_model_acc ==
        *std::max_element(e.per_model_acc.begin(), e.per_model_acc.end()));
  CHECK(e.worst_model_acc ==
        *std::min_element(e.per_model_acc.begin(), e.per_model_acc.end()));
  CHECK_FALSE(e.greedy_soup_subset.empty());
  const auto data = load_run_dataset(cfg);
  CHECK(e.averaged_acc ==
        accuracy(cfg.net, averaged_model(run.state.models), data.test));
}

TEST_CASE("telemetry row") {
  NetSpec spec{{2, 2}, Activation::kRelu};
  std::vector<LayeredParams> pop = {constant_logits(spec, 1, 2),
                                    constant_logits(spec, 3, 2)};
  CommLedger ledger(2);
  ledger.record_allreduce(6);
  const auto row = telemetry_hook(pop, 7, 0.01, 0.5, ledger);
  CHECK(row.step == 7);
  CHECK(row.sum_sq_dist == 2.0);
  CHECK(row.avg_consensus_dist == 1.0);
  CHECK(row.comm_scalars_cum == 12);
}
