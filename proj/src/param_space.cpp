// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "wash/error.hpp"

namespace wash {

std::size_t LayerShape::size() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

Layout::Layout(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  offsets_.reserve(layers_.size());
  for (const auto& shape : layers_) {
    offsets_.push_back(total_);
    total_ += shape.size();
  }
}

std::size_t Layout::layer_size(std::size_t layer) const {
  return layers_.at(layer).size();
}

std::size_t Layout::layer_offset(std::size_t layer) const {
  return offsets_.at(layer);
}

CoordinateLocation Layout::locate(std::size_t flat_index) const {
  if (flat_index >= total_) {
    throw ShapeError("flat index " + std::to_string(flat_index) +
                     " out of range for d=" + std::to_string(total_));
  }
  // Last layer whose offset is <= flat_index; skips empty layers.
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat_index);
  std::size_t layer = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  while (layers_[layer].size() == 0) --layer;
  return {layer, flat_index - offsets_[layer]};
}

LayeredParams::LayeredParams(Layout layout)
    : layout_(std::move(layout)), values_(layout_.total(), 0.0) {}

LayeredParams::LayeredParams(Layout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.total()) {
    throw ShapeError("value count " + std::to_string(values_.size()) +
                     " does not match layout size " +
                     std::to_string(layout_.total()));
  }
}

std::span<double> LayeredParams::layer(std::size_t l) {
  return std::span<double>(values_).subspan(layout_.layer_offset(l),
                                            layout_.layer_size(l));
}

std::span<const double> LayeredParams::layer(std::size_t l) const {
  return std::span<const double>(values_).subspan(layout_.layer_offset(l),
                                                  layout_.layer_size(l));
}

void require_same_layout(const LayeredParams& a, const LayeredParams& b) {
  if (!(a.layout() == b.layout())) {
    throw ShapeError("parameter layouts differ");
  }
}

void require_homogeneous(PopulationView pop) {
  if (pop.empty()) throw ShapeError("empty population");
  for (const auto& model : pop.subspan(1)) require_same_layout(pop[0], model);
}

LayeredParams consensus_mean(PopulationView pop) {
  require_homogeneous(pop);
  LayeredParams mean(pop[0].layout());
  const std::size_t d = mean.size();
  const auto n = static_cast<long double>(pop.size());
  for (std::size_t i = 0; i < d; ++i) {
    long double acc = 0.0L;
    for (const auto& model : pop) acc += model[i];
    mean[i] = static_cast<double>(acc / n);
  }
  return mean;
}

ConsensusDistance consensus_distance(PopulationView pop) {
  require_homogeneous(pop);
  const std::size_t d = pop[0].size();
  const std::size_t n_models = pop.size();
  std::vector<long double> mean(d, 0.0L);
  for (const auto& model : pop) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += model[i];
  }
  for (auto& m : mean) m /= static_cast<long double>(n_models);

  long double total_sq = 0.0L;
  long double total_norm = 0.0L;
  for (const auto& model : pop) {
    long double sq = 0.0L;
    for (std::size_t i = 0; i < d; ++i) {
      const long double diff = model[i] - mean[i];
      sq += diff * diff;
    }
    total_sq += sq;
    total_norm += std::sqrt(sq);
  }
  return {static_cast<double>(total_sq),
          static_cast<double>(total_norm / static_cast<long double>(n_models))};
}

Interpolation interpolate(const LayeredParams& a, const LayeredParams& b,
                          double lambda) {
  require_same_layout(a, b);
  const double keep = 1.0 - lambda;
  LayeredParams out(a.layout());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = keep * a[i] + lambda * b[i];
  }
  return {std::move(out), lambda < 0.0 || lambda > 1.0};
}

LayeredParams weighted_average(PopulationView models,
                               std::span<const double> weights) {
  if (models.size() != weights.size()) {
    throw ValidationError("got " + std::to_string(weights.size()) +
                          " weights for " + std::to_string(models.size()) +
                          " models");
  }
  require_homogeneous(models);
  long double weight_sum = 0.0L;
  for (double w : weights) weight_sum += w;
  if (std::abs(weight_sum - 1.0L) > 1e-12L) {
    throw ValidationError("weights must sum to 1, got " +
                          std::to_string(static_cast<double>(weight_sum)));
  }
  LayeredParams out(models[0].layout());
  for (std::size_t i = 0; i < out.size(); ++i) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < models.size(); ++k) {
      acc += static_cast<long double>(weights[k]) * models[k][i];
    }
    out[i] = static_cast<double>(acc);
  }
  return out;
}

}  // namespace wash
