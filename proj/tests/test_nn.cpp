// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "wash/error.hpp"
#include "wash/nn.hpp"
#include "wash/optim.hpp"
#include "wash/rng.hpp"

using namespace wash;

namespace {

Matrix random_inputs(std::size_t rows, std::size_t cols, CounterRng& rng) {
  Matrix x(rows, cols);
  for (auto& v : x.data) v = rng.normal();
  return x;
}

std::vector<std::uint32_t> random_labels(std::size_t n, std::size_t k,
                                         CounterRng& rng) {
  std::vector<std::uint32_t> y(n);
  for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(k));
  return y;
}

// Central differences over every parameter; returns the worst violation of
// |analytic - numeric| <= rel_tol * max(|analytic|, |numeric|) + abs_floor.
double gradient_violation(const NetSpec& spec, LayeredParams params,
                          const Matrix& x, std::span<const std::uint32_t> y,
                          double smoothing, double eps, double rel_tol,
                          double abs_floor) {
  const auto analytic = loss_and_grad(spec, params, x, y, smoothing).grads;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss_and_grad(spec, params, x, y, smoothing).loss;
    params[i] = saved - eps;
    const double down = loss_and_grad(spec, params, x, y, smoothing).loss;
    params[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double a = analytic[i];
    const double allowed =
        rel_tol * std::max(std::abs(a), std::abs(numeric)) + abs_floor;
    worst = std::max(worst, std::abs(a - numeric) - allowed);
  }
  return worst;
}

}  // namespace

TEST_CASE("net spec validation and layout") {
  NetSpec spec{{3, 5, 2}, Activation::kRelu};
  const auto layout = spec.layout();
  CHECK(layout.layer_count() == 2);
  CHECK(layout.total() == 5 * 4 + 2 * 6);
  CHECK_THROWS_AS(NetSpec({{3}}).validate(), ValidationError);
  CHECK_THROWS_AS(NetSpec({{3, 0, 2}}).validate(), ValidationError);
  CHECK(parse_activation("tanh") == Activation::kTanh);
  CHECK_THROWS_AS(parse_activation("gelu"), ValidationError);
}

TEST_CASE("init is deterministic, bounded, bias-free") {
  NetSpec spec{{10, 10, 10}, Activation::kRelu};
  const auto a = init_params(spec, 5);
  CHECK(a == init_params(spec, 5));
  CHECK_FALSE(a == init_params(spec, 6));
  const double bound = std::sqrt(6.0 / 20.0);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto layer = a.layer(l);
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t c = 0; c < 10; ++c) {
        CHECK(std::abs(layer[r * 11 + c]) <= bound);
      }
      CHECK(layer[r * 11 + 10] == 0.0);
    }
  }
}

TEST_CASE("uniform logits give ln K per example") {
  NetSpec spec{{4, 3, 5}, Activation::kTanh};
  LayeredParams zeros(spec.layout());
  CounterRng rng(21, Purpose::kTest);
  const auto x = random_inputs(6, 4, rng);
  const auto y = random_labels(6, 5, rng);
  const auto lg = loss_and_grad(spec, zeros, x, y);
  CHECK(lg.loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(lg.grads.layout() == zeros.layout());
}

TEST_CASE("gradients match central differences") {
  CounterRng rng(22, Purpose::kTest);
  SUBCASE("2-16-3 relu, 8 examples") {
    NetSpec spec{{2, 16, 3}, Activation::kRelu};
    const auto params = init_params(spec, 1);
    const auto x = random_inputs(8, 2, rng);
    const auto y = random_labels(8, 3, rng);
    CHECK(gradient_violation(spec, params, x, y, 0.0, 1e-5, 1e-4, 1e-6) <= 0.0);
  }
  SUBCASE("three hidden tanh layers with label smoothing") {
    NetSpec spec{{5, 7, 6, 4, 3}, Activation::kTanh};
    const auto params = init_params(spec, 2);
    const auto x = random_inputs(10, 5, rng);
    const auto y = random_labels(10, 3, rng);
    CHECK(gradient_violation(spec, params, x, y, 0.1, 1e-5, 1e-4, 1e-6) <= 0.0);
  }
}

TEST_CASE("duplicating a batch leaves the mean loss unchanged") {
  NetSpec spec{{3, 8, 4}, Activation::kRelu};
  const auto params = init_params(spec, 3);
  CounterRng rng(23, Purpose::kTest);
  const auto x = random_inputs(5, 3, rng);
  const auto y = random_labels(5, 4, rng);
  Matrix xx(10, 3);
  std::vector<std::uint32_t> yy;
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 3; ++c) xx(r, c) = x(r % 5, c);
    yy.push_back(y[r % 5]);
  }
  const auto once = loss_and_grad(spec, params, x, y);
  const auto twice = loss_and_grad(spec, params, xx, yy);
  CHECK(twice.loss == doctest::Approx(once.loss).epsilon(1e-14));
  CHECK(once.loss >= 0.0);
}

TEST_CASE("forward rejects bad input") {
  NetSpec spec{{3, 4, 2}, Activation::kRelu};
  const auto params = init_params(spec, 0);
  Matrix x(1, 3);
  x(0, 1) = std::nan("");
  CHECK_THROWS_AS(forward(spec, params, x), ValidationError);
  CHECK_THROWS_AS(forward(spec, params, Matrix(1, 4)), ValidationError);
  const auto out = forward(spec, params, Matrix(2, 3));
  CHECK(out.rows == 2);
  CHECK(out.cols == 2);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
  CHECK(argmax(v) == 1);
  std::vector<double> flat = {0.5, 0.5};
  CHECK(argmax(flat) == 0);
}

TEST_CASE("accuracy: memorizer, constant model, random nets") {
  NetSpec spec{{2, 2}, Activation::kRelu};
  Split split;
  split.dim = 2;
  // Four points, label = index of the larger coordinate, two per class.
  split.inputs = {1, 0, 0, 1, 2, 0, 0, 2};
  split.labels = {0, 1, 0, 1};
  LayeredParams identity(spec.layout(), {1, 0, 0, 0, 1, 0});
  CHECK(accuracy(spec, identity, split) == 1.0);

  NetSpec spec4{{2, 4}, Activation::kRelu};
  Split balanced;
  balanced.dim = 2;
  for (std::uint32_t k = 0; k < 4; ++k) {
    for (int r = 0; r < 3; ++r) {
      balanced.inputs.push_back(k);
      balanced.inputs.push_back(r);
      balanced.labels.push_back(k);
    }
  }
  LayeredParams constant(spec4.layout());
  CHECK(accuracy(spec4, constant, balanced) == 0.25);

  double total = 0;
  NetSpec net{{20, 32, 4}, Activation::kRelu};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec s;
    s.seed = 100 + seed;
    s.n_train = 200;
    s.n_test = 2000;
    const auto data = make_synthetic(s);
    total += accuracy(net, init_params(net, seed), data.test);
  }
  CHECK(std::abs(total / 5 - 0.25) <= 0.1);
}

TEST_CASE("synthetic data") {
  SyntheticSpec s;
  s.seed = 9;
  s.n_train = 1000;
  s.n_test = 400;
  const auto a = make_synthetic(s);
  const auto b = make_synthetic(s);
  CHECK(a.train.inputs == b.train.inputs);
  CHECK(a.test.labels == b.test.labels);
  CHECK(a.val.size() == 20);
  CHECK(a.train.size() == 980);
  CHECK(a.test.size() == 400);
  a.validate();
  std::map<std::uint32_t, int> counts;
  for (auto y : a.test.labels) ++counts[y];
  for (std::uint32_t k = 0; k < 4; ++k) CHECK(counts[k] == 100);
  s.seed = 10;
  CHECK(make_synthetic(s).train.inputs != a.train.inputs);
}

TEST_CASE("heterogeneous streams") {
  const std::size_t n = 103, batch = 10;
  SUBCASE("each index exactly once per epoch, order differs by model") {
    std::vector<std::uint32_t> first;
    for (std::uint32_t model = 0; model < 3; ++model) {
      for (std::uint64_t epoch = 0; epoch < 2; ++epoch) {
        const auto stream =
            make_heterogeneous_stream(n, batch, model, epoch, 4, false);
        CHECK(stream.size() == 11);
        std::vector<std::uint32_t> seen;
        for (const auto& bt : stream) {
          CHECK(bt.indices.size() <= batch);
          seen.insert(seen.end(), bt.indices.begin(), bt.indices.end());
        }
        if (model == 0 && epoch == 0) {
          first = seen;
        } else {
          CHECK(seen != first);
        }
        std::sort(seen.begin(), seen.end());
        for (std::uint32_t i = 0; i < n; ++i) REQUIRE(seen[i] == i);
      }
    }
  }
  SUBCASE("deterministic") {
    const auto a = make_heterogeneous_stream(n, batch, 2, 5, 4, true);
    const auto b = make_heterogeneous_stream(n, batch, 2, 5, 4, true);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].indices == b[i].indices);
      CHECK(a[i].aug.jitter_sigma == b[i].aug.jitter_sigma);
    }
  }
  SUBCASE("hetero assignments come from the menus and are reproducible") {
    for (std::uint32_t model = 0; model < 7; ++model) {
      const auto h = hetero_assignment(31, model, true);
      CHECK(h.jitter_sigma == hetero_assignment(31, model, true).jitter_sigma);
      CHECK(std::ranges::find(kJitterMenu, h.jitter_sigma) !=
            std::end(kJitterMenu));
      CHECK(std::ranges::find(kSmoothingMenu, h.label_smoothing) !=
            std::end(kSmoothingMenu));
      // Cycling: model n and n + 3 share an assignment.
      const auto cyc = hetero_assignment(31, model + 3, true);
      CHECK(cyc.jitter_sigma == h.jitter_sigma);
      CHECK(cyc.label_smoothing == h.label_smoothing);
      const auto off = hetero_assignment(31, model, false);
      CHECK(off.jitter_sigma == 0.0);
      CHECK(off.label_smoothing == 0.0);
    }
    // The three models of a cycle use three distinct menu entries.
    std::vector<double> sigmas;
    for (std::uint32_t model = 0; model < 3; ++model) {
      sigmas.push_back(hetero_assignment(31, model, true).jitter_sigma);
    }
    std::sort(sigmas.begin(), sigmas.end());
    CHECK(sigmas == std::vector<double>{0.0, 0.1, 0.2});
  }
  SUBCASE("jitter is applied only when assigned") {
    SyntheticSpec s;
    s.n_train = 100;
    s.n_test = 10;
    const auto data = make_synthetic(s);
    Batch bt;
    bt.indices = {0, 1, 2};
    const auto clean = materialize_inputs(data.train, bt, 1);
    CHECK(clean.data == data.train.rows(bt.indices).data);
    bt.aug.jitter_sigma = 0.2;
    const auto noisy = materialize_inputs(data.train, bt, 1);
    CHECK(noisy.data != clean.data);
    CHECK(noisy.data == materialize_inputs(data.train, bt, 1).data);
  }
}

TEST_CASE("plain SGD lowers the loss on separable data") {
  SyntheticSpec s;
  s.n_train = 400;
  s.n_test = 10;
  s.spread = 0.3;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    s.seed = seed;
    const auto data = make_synthetic(s);
    NetSpec spec{{20, 16, 4}, Activation::kRelu};
    auto params = init_params(spec, seed);
    OptState state = OptState::zeros_like(params);
    OptHyper hyper{0.0, 0.0, 0.05, 0.05};
    const auto x = data.train.all();
    const double initial = loss_and_grad(spec, params, x, data.train.labels).loss;
    for (int t = 0; t < 200; ++t) {
      const auto lg = loss_and_grad(spec, params, x, data.train.labels);
      sgd_step(params, lg.grads, state, hyper, 0.05);
    }
    const double final_loss =
        loss_and_grad(spec, params, x, data.train.labels).loss;
    CHECK(final_loss < initial);
  }
}

TEST_CASE("dataset file round trip") {
  SyntheticSpec s;
  s.n_train = 50;
  s.n_test = 20;
  s.val_fraction = 0.1;
  const auto data = make_synthetic(s);
  const auto path = std::filesystem::temp_directory_path() / "wash_ds_rt.txt";
  save_dataset(path, data);
  const auto back = load_dataset(path);
  CHECK(back.classes == data.classes);
  CHECK(back.dim == data.dim);
  CHECK(back.train.inputs == data.train.inputs);
  CHECK(back.train.labels == data.train.labels);
  CHECK(back.val.inputs == data.val.inputs);
  CHECK(back.test.labels == data.test.labels);
  std::filesystem::remove(path);

  const auto bad = std::filesystem::temp_directory_path() / "wash_ds_bad.txt";
  {
    std::ofstream out(bad);
    out << "2 2 1 0 0\n0.5,0.5,7\n";
  }
  CHECK_THROWS_AS(load_dataset(bad), ValidationError);
  std::filesystem::remove(bad);
}
