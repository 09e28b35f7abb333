// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Lockstep training of a population: every model takes one local SGD step,
// then the coordination strategy runs at a barrier, then telemetry.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "wash/config.hpp"
#include "wash/coordination.hpp"
#include "wash/evaluation.hpp"
#include "wash/optim.hpp"
#include "wash/param_space.hpp"

namespace wash {

struct PopulationState {
  std::vector<LayeredParams> models;
  std::vector<OptState> opt;
  /// Index of the next step to run; equals the number of completed steps.
  std::uint64_t next_step = 0;
  CommLedger ledger;

  bool operator==(const PopulationState&) const = default;
};

struct RunResult {
  PopulationState state;
  std::vector<MetricsRecord> metrics;
  /// Filled only when the run reached its last step.
  std::optional<EvalSummary> eval;
  std::uint64_t total_steps = 0;
  bool completed() const { return state.next_step >= total_steps; }
};

struct TrainOptions {
  /// Worker threads for the local steps. Results do not depend on it.
  std::size_t threads = 1;
  /// Stop once this many steps have completed.
  std::optional<std::uint64_t> stop_after;
  /// Written when the run stops early or finishes.
  std::optional<std::filesystem::path> checkpoint;
  /// Called with each plan before it is applied.
  std::function<void(const ShufflePlan&)> on_plan;
};

/// Builds (or loads) the dataset described by cfg.data.
Dataset load_run_dataset(const RunConfig& cfg);

/// All models initialized, zero momentum, empty ledger.
PopulationState initial_state(const RunConfig& cfg);

/// Throws ConfigError for invalid configs and NumericAbort on a non-finite
/// loss or gradient.
RunResult train_population(const RunConfig& cfg, const TrainOptions& options = {});

/// Continues a run from a checkpoint written by train_population. The
/// checkpoint must come from the same config (hash checked).
RunResult resume(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                 const TrainOptions& options = {});

struct Checkpoint {
  std::uint64_t config_hash = 0;
  PopulationState state;
  std::vector<MetricsRecord> metrics;
};

/// Little-endian flat binary layout (see README):
///   "WASHCKP1" | u64 config_hash | u64 next_step | u32 N | u32 L | u64 d
///   | f64 params[N*d] | f64 momentum[N*d]
///   | u64 nominal[N] | u64 effective[N] | u64 allreduce[N] | f64 expected
///   | u64 rows | rows x (u64 step, f64 lr, f64 loss, f64 avg, f64 sum_sq,
///                        u64 comm, u64 comm_effective)
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// The layout is supplied by the caller since the file stores only d.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Layout& layout);

}  // namespace wash
