// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small fully connected classifier with hand-written backpropagation, and
// the datasets and per-model batch streams it trains on.
//
// Each network layer is a single tensor of shape (out, in + 1): the weight
// matrix with the bias appended as the last column. One tensor per layer keeps
// the layer index used by the shuffle schedule aligned with network depth.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wash/param_space.hpp"

namespace wash {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation act);
Activation parse_activation(const std::string& name);

struct NetSpec {
  /// Widths from input through hidden layers to the class count.
  std::vector<std::size_t> dims;
  Activation activation = Activation::kRelu;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t classes() const { return dims.back(); }
  std::size_t layer_count() const { return dims.size() - 1; }
  Layout layout() const;
  /// Throws ValidationError on fewer than two widths or a zero width.
  void validate() const;
};

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
};

/// Examples of one split: inputs are row-major (size x dim).
struct Split {
  std::size_t dim = 0;
  std::vector<double> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * dim, dim);
  }
  Matrix rows(std::span<const std::uint32_t> indices) const;
  Matrix all() const;
};

struct Dataset {
  std::size_t classes = 0;
  std::size_t dim = 0;
  Split train;
  Split val;
  Split test;

  /// Throws ValidationError on label/dimension inconsistencies.
  void validate() const;
};

LayeredParams init_params(const NetSpec& spec, std::uint64_t seed);

/// Logits for each input row. Throws ValidationError on non-finite inputs or
/// an input width that does not match the net.
Matrix forward(const NetSpec& spec, const LayeredParams& params,
               const Matrix& inputs);

struct LossAndGrad {
  double loss = 0.0;
  LayeredParams grads;
};

/// Mean softmax cross-entropy over the rows and its gradient. With
/// label_smoothing eps the target is (1 - eps) one_hot + eps / K.
LossAndGrad loss_and_grad(const NetSpec& spec, const LayeredParams& params,
                          const Matrix& inputs,
                          std::span<const std::uint32_t> labels,
                          double label_smoothing = 0.0);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Fraction of argmax-correct predictions. Empty split -> 0.
double accuracy(const NetSpec& spec, const LayeredParams& params,
                const Split& split);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t classes = 4;
  std::size_t dim = 20;
  /// Training examples before the validation carve-out.
  std::size_t n_train = 4000;
  std::size_t n_test = 2000;
  /// Standard deviation of each cluster around its center.
  double spread = 1.0;
  /// Gaussian clusters per class; centers drawn from N(0, I).
  std::size_t modes_per_class = 1;
  /// Share of the training examples held out as validation.
  double val_fraction = 0.02;
};

/// Balanced Gaussian-cluster classification data, deterministic per seed.
Dataset make_synthetic(const SyntheticSpec& spec);

/// Per-model augmentation and regularization assignment used as a stand-in
/// for heterogeneous training recipes.
struct HeteroAssignment {
  double jitter_sigma = 0.0;
  double label_smoothing = 0.0;
};

inline constexpr double kJitterMenu[] = {0.0, 0.1, 0.2};
inline constexpr double kSmoothingMenu[] = {0.0, 0.05, 0.1};

/// Each menu is permuted once per base_seed and cycled over model indices.
/// Off -> no jitter, no smoothing.
HeteroAssignment hetero_assignment(std::uint64_t base_seed, std::uint32_t model,
                                   bool hetero);

struct Batch {
  std::vector<std::uint32_t> indices;
  HeteroAssignment aug;
  std::uint64_t epoch = 0;
  std::uint32_t model = 0;
  std::uint32_t index_in_epoch = 0;
};

/// One epoch of batches for one model. The order is a permutation of
/// [0, n_train) keyed on (base_seed, model, epoch); the last batch may be
/// short.
std::vector<Batch> make_heterogeneous_stream(std::size_t n_train,
                                             std::size_t batch_size,
                                             std::uint32_t model,
                                             std::uint64_t epoch,
                                             std::uint64_t base_seed,
                                             bool hetero);

/// Gathers the batch rows and adds the model's input jitter.
Matrix materialize_inputs(const Split& split, const Batch& batch,
                          std::uint64_t base_seed);
std::vector<std::uint32_t> batch_labels(const Split& split, const Batch& batch);

/// Text format: header `K dim n_train n_val n_test`, then one example per
/// line as dim floats followed by an integer label. Whitespace or commas
/// separate fields. Records are train, then val, then test.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

}  // namespace wash
