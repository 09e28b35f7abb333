// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Coordination steps applied between local training steps: parameter
// shuffling (optionally carrying the momentum buffers along), EMA pulls toward
// the consensus, full averaging, and the communication accounting for each.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wash/optim.hpp"
#include "wash/param_space.hpp"

namespace wash {

enum class StrategyKind { kNone, kWash, kWashOpt, kPapa, kPapaAll };
enum class Schedule { kDecreasing, kConstant, kIncreasing };

std::string to_string(StrategyKind kind);
std::string to_string(Schedule schedule);
StrategyKind parse_strategy_kind(const std::string& name);
Schedule parse_schedule(const std::string& name);

inline bool is_shuffling(StrategyKind kind) {
  return kind == StrategyKind::kWash || kind == StrategyKind::kWashOpt;
}

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kNone;
  /// Base shuffle probability (first layer under the decreasing schedule).
  double p = 0.0;
  Schedule schedule = Schedule::kDecreasing;
  /// EMA retention for papa.
  double alpha = 0.99;
  /// Scale alpha toward 1 as the learning rate decays:
  /// alpha(t) = 1 - (1 - alpha) * lr(t) / lr_max.
  bool alpha_follows_lr = false;
  /// Steps between papa / papa_all applications.
  std::uint64_t period = 10;
  /// Active steps [window_start, window_end). An empty window disables the
  /// strategy.
  std::uint64_t window_start = 0;
  std::uint64_t window_end = UINT64_MAX;

  bool active_at(std::uint64_t step) const {
    return step >= window_start && step < window_end;
  }
  /// Throws ValidationError on out-of-range hyperparameters.
  void validate() const;
};

/// Shuffle probability for layer l of L.
///   decreasing: p (1 - l / (L - 1)),  constant: p,  increasing: p l / (L - 1)
/// L = 1 only admits the constant schedule.
double layer_probability(std::size_t l, std::size_t L, double p,
                         Schedule schedule);

/// Coordinates selected at one step, each with a permutation of the model
/// indices. Coordinates are strictly increasing.
struct ShufflePlan {
  std::uint64_t step = 0;
  std::size_t n_models = 0;
  std::vector<std::uint64_t> coords;
  /// coords.size() x n_models; model n receives the value held by perm[n].
  std::vector<std::uint32_t> perms;

  std::size_t size() const { return coords.size(); }
  std::span<const std::uint32_t> perm(std::size_t k) const {
    return std::span<const std::uint32_t>(perms).subspan(k * n_models,
                                                         n_models);
  }
  /// Nominal scalars sent per model: one per selected coordinate, two when
  /// the momentum buffer travels along.
  std::uint64_t scalars_per_model(bool include_opt) const {
    return coords.size() * (include_opt ? 2u : 1u);
  }
};

/// How selected coordinates are drawn inside a layer. Both paths give each
/// coordinate an independent Bernoulli(p_l) selection; they consume random
/// numbers differently, so plans agree in distribution, not bitwise.
enum class SamplingPath {
  /// Elementwise below kSparseThreshold, geometric gaps at or below it.
  kAuto,
  kElementwise,
  /// Jump between selected coordinates with geometric gaps.
  kGeometricGaps,
};

/// Layer probabilities at or below this use geometric gaps under kAuto.
inline constexpr double kSparseThreshold = 0.1;
/// Coordinates per random stream within a layer.
inline constexpr std::size_t kSelectBlock = 4096;

/// Samples the plan for `step`. The result depends only on
/// (seed, layout, cfg.p, cfg.schedule, n_models, step, path).
ShufflePlan sample_shuffle_plan(std::uint64_t seed, const Layout& layout,
                                const StrategyConfig& cfg,
                                std::size_t n_models, std::uint64_t step,
                                SamplingPath path = SamplingPath::kAuto);

/// Scalars moved by one coordination step, per model.
struct CommDelta {
  /// Nominal count, permutation fixed points included.
  std::vector<std::uint64_t> nominal;
  /// Only values that actually change owner.
  std::vector<std::uint64_t> effective;
};

/// For every planned (i, pi): theta_n[i] <- theta_{pi(n)}[i]. With
/// include_opt the momentum buffers are permuted the same way; `states` must
/// then hold one entry per model (it is ignored otherwise).
CommDelta apply_shuffle(std::span<LayeredParams> pop,
                        std::span<OptState> states, const ShufflePlan& plan,
                        bool include_opt);

/// theta_n <- alpha theta_n + (1 - alpha) mean.
void papa_ema_step(std::span<LayeredParams> pop, double alpha);

/// Every model becomes the consensus mean.
void papa_all_step(std::span<LayeredParams> pop);

/// Cumulative communication counters; all monotone non-decreasing.
struct CommLedger {
  std::vector<std::uint64_t> nominal_per_model;
  std::vector<std::uint64_t> effective_per_model;
  /// Scalars each model contributed to all-reduce averaging (papa, papa_all).
  std::vector<std::uint64_t> allreduce_per_model;
  /// Expected nominal plus all-reduce scalars per model so far.
  double expected_per_model = 0.0;

  explicit CommLedger(std::size_t n_models = 0)
      : nominal_per_model(n_models, 0),
        effective_per_model(n_models, 0),
        allreduce_per_model(n_models, 0) {}

  void record(const CommDelta& delta);
  void record_allreduce(std::uint64_t d);

  /// Sum over models of nominal + all-reduce scalars.
  std::uint64_t total_nominal() const;
  /// Sum over models of effective + all-reduce scalars.
  std::uint64_t total_effective() const;

  bool operator==(const CommLedger&) const = default;
};

struct CommFraction {
  /// Expected scalars sent per model per step, as a fraction of d.
  double per_step = 0.0;
  /// per_step relative to papa with period papa_period (d / T per step).
  double ratio_vs_papa = 0.0;
};

/// Nominal expected communication. Shuffling strategies use the schedule's
/// average layer probability (1/2 for decreasing and increasing, 1 for
/// constant); wash_opt doubles it.
CommFraction expected_comm_fraction(const StrategyConfig& cfg,
                                    std::uint64_t papa_period);

/// Exact expectation for a concrete layout: sum_l p_l d_l (doubled for
/// wash_opt), or d / period for the averaging strategies.
double expected_scalars_per_step(const StrategyConfig& cfg,
                                 const Layout& layout);

/// Writes `step layer coord perm[0..N-1]` records, one per line.
void write_plan(std::ostream& out, const ShufflePlan& plan,
                const Layout& layout);

}  // namespace wash
