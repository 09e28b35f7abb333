// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk artifacts of a run directory and the sweep / report tables built
// from them. Floats in CSV files use 17 significant digits.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wash/config.hpp"
#include "wash/evaluation.hpp"
#include "wash/population.hpp"

namespace wash {

/// printf("%.17g").
std::string format_double(double v);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows);

nlohmann::json eval_to_json(const EvalSummary& eval);
EvalSummary eval_from_json(const nlohmann::json& j);
nlohmann::json ledger_to_json(const CommLedger& ledger, std::uint64_t steps);

/// One matrix per lambda: header `model,0,1,...`, then row a holds
/// acc(interpolate(a, b, lambda)) for each b.
void write_interp_csv(std::ostream& out, const InterpolationGrid& grid,
                      std::size_t lambda_index);

/// Writes config.json, metrics.csv, eval.json, ledger.json and, when
/// requested by the config, interp_lambda_<k>.csv into dir.
void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const RunResult& result);

/// Runs one planned run end to end and writes its artifacts.
RunResult execute_run(const PlannedRun& run, const TrainOptions& options = {});

struct SweepRow {
  std::string name;
  std::vector<std::pair<std::string, nlohmann::json>> axis_values;
  std::size_t seed_index = 0;
  EvalSummary eval;
  double final_avg_dist = 0.0;
  std::uint64_t comm_scalars_per_model = 0;
};

/// Header: name, one column per axis, seed, ensemble_acc, averaged_acc,
/// greedy_soup_acc, best_model_acc, worst_model_acc, final_avg_consensus_dist,
/// comm_scalars_per_model.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows,
                     std::span<const std::string> axis_keys);

struct ReportRow {
  std::string run;
  std::string strategy;
  double comm_ratio = 0.0;
  double ensemble_acc = 0.0;
  double averaged_acc = 0.0;
  double greedy_soup_acc = 0.0;
};

/// Reads config.json and eval.json from each run directory. Communication
/// is the nominal expectation relative to papa with the given period.
std::vector<ReportRow> build_report(
    std::span<const std::filesystem::path> run_dirs, std::uint64_t papa_period);
void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);
void write_report_text(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace wash
