// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "wash/error.hpp"

namespace wash {

double cosine_lr(std::uint64_t t, std::uint64_t total, double lr_max,
                 double lr_min) {
  if (total == 0 || t >= total) return lr_min;
  const double phase =
      std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

void sgd_step(LayeredParams& params, const LayeredParams& grads,
              OptState& state, const OptHyper& hyper, double lr) {
  require_same_layout(params, grads);
  require_same_layout(params, state.momentum);
  const auto g = grads.flat();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericError("non-finite gradient at coordinate " +
                         std::to_string(i));
    }
  }
  auto theta = params.flat();
  auto v = state.momentum.flat();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double decayed = g[i] + hyper.weight_decay * theta[i];
    v[i] = hyper.momentum * v[i] + decayed;
    theta[i] -= lr * v[i];
  }
}

}  // namespace wash
