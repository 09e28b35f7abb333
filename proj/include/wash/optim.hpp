// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "wash/param_space.hpp"

namespace wash {

struct OptHyper {
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_max = 0.1;
  double lr_min = 1e-4;
};

/// Heavy-ball momentum buffer, shaped like the parameters it belongs to.
struct OptState {
  LayeredParams momentum;

  static OptState zeros_like(const LayeredParams& params) {
    return {LayeredParams(params.layout())};
  }

  bool operator==(const OptState&) const = default;
};

/// Cosine annealing from lr_max at t = 0 to lr_min at t = total. Steps past
/// total clamp to lr_min; total = 0 yields lr_min.
double cosine_lr(std::uint64_t t, std::uint64_t total, double lr_max,
                 double lr_min);

/// g' = g + wd * theta;  v <- mu * v + g';  theta <- theta - lr * v.
/// Throws NumericError before touching anything if a gradient entry is not
/// finite.
void sgd_step(LayeredParams& params, const LayeredParams& grads,
              OptState& state, const OptHyper& hyper, double lr);

}  // namespace wash
