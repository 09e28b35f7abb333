// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wash/error.hpp"

namespace wash {

namespace {

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.data.data() + r * m.cols;
    const double peak = *std::max_element(row, row + m.cols);
    double denom = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
      row[c] = std::exp(row[c] - peak);
      denom += row[c];
    }
    for (std::size_t c = 0; c < m.cols; ++c) row[c] /= denom;
  }
}

}  // namespace

double ensemble_accuracy(const NetSpec& spec, PopulationView pop,
                         const Split& split, EnsembleMode mode) {
  require_homogeneous(pop);
  if (split.size() == 0) return 0.0;
  const Matrix inputs = split.all();
  Matrix total(split.size(), spec.classes());
  for (const auto& model : pop) {
    Matrix out = forward(spec, model, inputs);
    if (mode == EnsembleMode::kProbabilities) softmax_rows(out);
    for (std::size_t i = 0; i < total.data.size(); ++i) {
      total.data[i] += out.data[i];
    }
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < split.size(); ++r) {
    if (argmax(total.row(r)) == split.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

LayeredParams averaged_model(PopulationView pop) { return consensus_mean(pop); }

GreedySoupResult greedy_soup(const NetSpec& spec, PopulationView pop,
                             const Split& val, const Split& test,
                             bool strict) {
  if (val.size() == 0) {
    throw ValidationError("greedy soup needs a non-empty validation split");
  }
  require_homogeneous(pop);
  std::vector<double> val_acc(pop.size());
  for (std::size_t n = 0; n < pop.size(); ++n) {
    val_acc[n] = accuracy(spec, pop[n], val);
  }
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return val_acc[a] > val_acc[b];
  });

  GreedySoupResult result;
  result.subset.push_back(order.front());
  LayeredParams soup = pop[order.front()];
  double soup_acc = val_acc[order.front()];
  for (std::size_t k = 1; k < order.size(); ++k) {
    std::vector<LayeredParams> candidate_members;
    for (auto n : result.subset) candidate_members.push_back(pop[n]);
    candidate_members.push_back(pop[order[k]]);
    LayeredParams candidate = consensus_mean(candidate_members);
    const double acc = accuracy(spec, candidate, val);
    if (strict ? acc > soup_acc : acc >= soup_acc) {
      result.subset.push_back(order[k]);
      soup = std::move(candidate);
      soup_acc = acc;
    }
  }
  result.val_accuracy = soup_acc;
  result.test_accuracy = accuracy(spec, soup, test);
  return result;
}

InterpolationGrid interpolation_grid(const NetSpec& spec, PopulationView pop,
                                     std::span<const double> lambdas,
                                     const Split& split) {
  require_homogeneous(pop);
  InterpolationGrid grid;
  grid.lambdas.assign(lambdas.begin(), lambdas.end());
  const std::size_t n = pop.size();
  for (double lambda : lambdas) {
    std::vector<std::vector<double>> cell(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        cell[a][b] =
            accuracy(spec, interpolate(pop[a], pop[b], lambda).params, split);
      }
    }
    grid.acc.push_back(std::move(cell));
  }
  return grid;
}

std::vector<SimplexPoint> simplex_grid(const NetSpec& spec, PopulationView pop,
                                       std::array<std::size_t, 3> models,
                                       std::size_t resolution,
                                       const Split& split) {
  require_homogeneous(pop);
  if (resolution == 0) throw ValidationError("resolution must be positive");
  std::vector<LayeredParams> members;
  for (auto m : models) {
    if (m >= pop.size()) throw ValidationError("simplex model index out of range");
    members.push_back(pop[m]);
  }
  std::vector<SimplexPoint> points;
  const auto res = static_cast<double>(resolution);
  for (std::size_t i = 0; i <= resolution; ++i) {
    for (std::size_t j = 0; i + j <= resolution; ++j) {
      const std::array<double, 3> w = {static_cast<double>(i) / res,
                                       static_cast<double>(j) / res,
                                       static_cast<double>(resolution - i - j) /
                                           res};
      const LayeredParams blend = weighted_average(members, w);
      points.push_back({w, accuracy(spec, blend, split)});
    }
  }
  return points;
}

EvalSummary evaluate_population(const NetSpec& spec, PopulationView pop,
                                const Dataset& data,
                                const EvalOptions& options) {
  EvalSummary summary;
  summary.ensemble_acc =
      ensemble_accuracy(spec, pop, data.test, options.ensemble_mode);
  summary.averaged_acc = accuracy(spec, averaged_model(pop), data.test);
  for (const auto& model : pop) {
    summary.per_model_acc.push_back(accuracy(spec, model, data.test));
  }
  summary.best_model_acc = *std::max_element(summary.per_model_acc.begin(),
                                             summary.per_model_acc.end());
  summary.worst_model_acc = *std::min_element(summary.per_model_acc.begin(),
                                              summary.per_model_acc.end());
  if (data.val.size() > 0) {
    auto soup =
        greedy_soup(spec, pop, data.val, data.test, options.greedy_strict);
    summary.greedy_soup_acc = soup.test_accuracy;
    summary.greedy_soup_val_acc = soup.val_accuracy;
    summary.greedy_soup_subset = std::move(soup.subset);
  }
  return summary;
}

MetricsRecord telemetry_hook(PopulationView pop, std::uint64_t step, double lr,
                             double mean_loss, const CommLedger& ledger) {
  const ConsensusDistance dist = consensus_distance(pop);
  return {step,          lr,
          mean_loss,     dist.avg_dist,
          dist.sum_sq,   ledger.total_nominal(),
          ledger.total_effective()};
}

}  // namespace wash
