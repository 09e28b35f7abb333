// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and experiment manifests. Configs are flat JSON objects
// with dotted keys ("strategy.kind", "train.epochs", ...); the README lists
// every key with its default.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wash/coordination.hpp"
#include "wash/evaluation.hpp"
#include "wash/nn.hpp"
#include "wash/optim.hpp"

namespace wash {

struct DataConfig {
  /// "synthetic" or "file".
  std::string kind = "synthetic";
  std::filesystem::path path;
  SyntheticSpec synthetic;
  bool hetero = false;
};

struct RunConfig {
  NetSpec net{{20, 32, 32, 4}, Activation::kRelu};
  DataConfig data;
  std::size_t n_models = 4;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  OptHyper opt;
  /// window_start / window_end are filled from the epoch fields by
  /// resolve_window().
  StrategyConfig strategy;
  double window_start_epoch = 0.0;
  std::optional<double> window_end_epoch;
  std::uint64_t init_seed = 0;
  std::uint64_t order_seed = 1;
  std::uint64_t shuffle_seed = 2;
  /// Unset: shared for wash / wash_opt, distinct per model otherwise.
  std::optional<bool> shared_init;
  /// Steps between telemetry rows; 0 means once per epoch.
  std::uint64_t telemetry_every = 0;
  EvalOptions eval;
  std::vector<double> interp_lambdas;

  bool uses_shared_init() const {
    return shared_init.value_or(is_shuffling(strategy.kind));
  }
};

/// Parses a flat dotted-key object on top of the defaults. Unknown keys and
/// ill-typed or out-of-range values throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& flat);

/// Full flat representation, every key present (window_end_epoch only when
/// set). parse_run_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& cfg);

/// Throws ConfigError on an inconsistent config.
void validate(const RunConfig& cfg);

/// FNV-1a over the canonical JSON text.
std::uint64_t config_hash(const RunConfig& cfg);

/// Steps in one epoch: ceil(n_train / batch).
std::uint64_t steps_per_epoch(std::size_t n_train, std::size_t batch);

/// Converts the epoch window into steps on cfg.strategy.
void resolve_window(RunConfig& cfg, std::uint64_t steps_per_epoch);

struct ManifestRun {
  std::string name;
  nlohmann::json flat;
};

struct SweepAxis {
  std::string key;
  std::vector<nlohmann::json> values;
};

/// {"output_dir": ..., "base": {...}, "runs": [{"name": ..., ...}],
///  "sweep": {"strategy.p": [...], ...}, "seeds": k}
struct Manifest {
  std::filesystem::path output_dir = "runs";
  std::vector<ManifestRun> runs;
  std::vector<SweepAxis> axes;
  std::size_t seeds = 1;
};

Manifest parse_manifest(const nlohmann::json& doc);
Manifest load_manifest(const std::filesystem::path& path);

struct PlannedRun {
  std::string name;
  std::filesystem::path dir;
  RunConfig cfg;
  std::vector<std::pair<std::string, nlohmann::json>> axis_values;
  std::size_t seed_index = 0;
};

/// One run per manifest entry, written to output_dir/name.
std::vector<PlannedRun> plan_runs(const Manifest& manifest);

/// Cartesian product runs x axes x seeds. Replicate k offsets init and order
/// seeds by k; every run gets its own shuffle seed and directory.
std::vector<PlannedRun> plan_sweep(const Manifest& manifest);

}  // namespace wash
