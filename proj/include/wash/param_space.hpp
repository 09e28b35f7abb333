// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layered parameter containers and the population-level vector math built on
// them: consensus mean, consensus distance, interpolation, weighted averages.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wash {

/// Shape of one layer tensor, row-major.
struct LayerShape {
  std::vector<std::size_t> dims;

  std::size_t size() const;
  bool operator==(const LayerShape&) const = default;
};

/// Position of a flat coordinate inside the layer list.
struct CoordinateLocation {
  std::size_t layer;
  std::size_t offset;
};

/// Ordered list of layer shapes. Flat coordinates are layer-major, then
/// row-major within each tensor.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<LayerShape> layers);

  std::size_t layer_count() const { return layers_.size(); }
  const LayerShape& shape(std::size_t layer) const { return layers_.at(layer); }
  std::size_t layer_size(std::size_t layer) const;
  std::size_t layer_offset(std::size_t layer) const;
  /// Total scalar count d.
  std::size_t total() const { return total_; }
  CoordinateLocation locate(std::size_t flat_index) const;

  bool operator==(const Layout& other) const { return layers_ == other.layers_; }

 private:
  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// Parameters of one model: a layout plus a contiguous flat buffer.
class LayeredParams {
 public:
  LayeredParams() = default;
  /// Zero-initialized parameters with the given layout.
  explicit LayeredParams(Layout layout);
  LayeredParams(Layout layout, std::vector<double> values);

  const Layout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::size_t layer_count() const { return layout_.layer_count(); }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::span<double> layer(std::size_t l);
  std::span<const double> layer(std::size_t l) const;

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const LayeredParams&) const = default;

 private:
  Layout layout_;
  std::vector<double> values_;
};

/// A population of N models sharing one layout. Model identity is the index.
using PopulationView = std::span<const LayeredParams>;

struct ConsensusDistance {
  /// sum_n ||theta_n - mean||^2
  double sum_sq = 0.0;
  /// (1/N) sum_n ||theta_n - mean||
  double avg_dist = 0.0;
};

/// Throws ShapeError unless every model has the same layout as the first.
void require_homogeneous(PopulationView pop);
void require_same_layout(const LayeredParams& a, const LayeredParams& b);

/// Coordinatewise arithmetic mean of the population. N >= 1.
LayeredParams consensus_mean(PopulationView pop);

ConsensusDistance consensus_distance(PopulationView pop);

struct Interpolation {
  LayeredParams params;
  /// Set when lambda lies outside [0, 1].
  bool extrapolated = false;
};

/// (1 - lambda) a + lambda b.
Interpolation interpolate(const LayeredParams& a, const LayeredParams& b,
                          double lambda);

/// sum_k w_k theta_k. Weights must sum to 1 within 1e-12 and match the model
/// count; otherwise ValidationError.
LayeredParams weighted_average(PopulationView models,
                               std::span<const double> weights);

}  // namespace wash
