// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Population evaluation: prediction ensembles, the uniform soup, the greedy
// soup, interpolation grids, and per-step consensus telemetry.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wash/coordination.hpp"
#include "wash/nn.hpp"
#include "wash/param_space.hpp"

namespace wash {

enum class EnsembleMode {
  /// Average softmax probabilities.
  kProbabilities,
  /// Average raw logits.
  kLogits,
};

/// Per example: average the N models' predictions, then argmax (ties to the
/// lowest class).
double ensemble_accuracy(const NetSpec& spec, PopulationView pop,
                         const Split& split,
                         EnsembleMode mode = EnsembleMode::kProbabilities);

/// Uniform soup: the coordinatewise mean of the population.
LayeredParams averaged_model(PopulationView pop);

struct GreedySoupResult {
  /// Model indices in the order they were accepted.
  std::vector<std::size_t> subset;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Ranks models by validation accuracy (descending, ties by index), starts
/// from the best, and keeps each next model iff the soup's validation
/// accuracy does not drop (strictly improves when `strict`). Throws
/// ValidationError on an empty validation split.
GreedySoupResult greedy_soup(const NetSpec& spec, PopulationView pop,
                             const Split& val, const Split& test,
                             bool strict = false);

/// Accuracy of interpolate(pop[a], pop[b], lambda) for every pair and lambda:
/// acc[k][a][b] at lambdas[k]. Diagonal entries are per-model accuracies.
struct InterpolationGrid {
  std::vector<double> lambdas;
  std::vector<std::vector<std::vector<double>>> acc;
};

InterpolationGrid interpolation_grid(const NetSpec& spec, PopulationView pop,
                                     std::span<const double> lambdas,
                                     const Split& split);

/// Accuracy over the barycentric grid of three models with the given
/// resolution: weights (i, j, resolution - i - j) / resolution.
struct SimplexPoint {
  std::array<double, 3> weights;
  double accuracy;
};

std::vector<SimplexPoint> simplex_grid(const NetSpec& spec, PopulationView pop,
                                       std::array<std::size_t, 3> models,
                                       std::size_t resolution,
                                       const Split& split);

struct EvalSummary {
  double ensemble_acc = 0.0;
  double averaged_acc = 0.0;
  double greedy_soup_acc = 0.0;
  std::vector<std::size_t> greedy_soup_subset;
  double greedy_soup_val_acc = 0.0;
  double best_model_acc = 0.0;
  double worst_model_acc = 0.0;
  std::vector<double> per_model_acc;
};

struct EvalOptions {
  EnsembleMode ensemble_mode = EnsembleMode::kProbabilities;
  bool greedy_strict = false;
};

/// Test-split summary; greedy soup is skipped (left empty) when the
/// validation split is empty.
EvalSummary evaluate_population(const NetSpec& spec, PopulationView pop,
                                const Dataset& data,
                                const EvalOptions& options = {});

/// One telemetry row.
struct MetricsRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double avg_consensus_dist = 0.0;
  double sum_sq_dist = 0.0;
  std::uint64_t comm_scalars_cum = 0;
  std::uint64_t comm_scalars_effective_cum = 0;

  bool operator==(const MetricsRecord&) const = default;
};

MetricsRecord telemetry_hook(PopulationView pop, std::uint64_t step, double lr,
                             double mean_loss, const CommLedger& ledger);

}  // namespace wash
