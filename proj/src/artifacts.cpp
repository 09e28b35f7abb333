// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "wash/error.hpp"

namespace wash {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows) {
  out << "step,lr,mean_loss,avg_consensus_dist,sum_sq_dist,comm_scalars_cum,"
         "comm_scalars_effective_cum\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_double(r.lr) << ','
        << format_double(r.mean_loss) << ','
        << format_double(r.avg_consensus_dist) << ','
        << format_double(r.sum_sq_dist) << ',' << r.comm_scalars_cum << ','
        << r.comm_scalars_effective_cum << '\n';
  }
}

json eval_to_json(const EvalSummary& e) {
  return json{{"ensemble_acc", e.ensemble_acc},
              {"averaged_acc", e.averaged_acc},
              {"greedy_soup_acc", e.greedy_soup_acc},
              {"greedy_soup_val_acc", e.greedy_soup_val_acc},
              {"greedy_soup_subset", e.greedy_soup_subset},
              {"best_model_acc", e.best_model_acc},
              {"worst_model_acc", e.worst_model_acc},
              {"per_model_acc", e.per_model_acc}};
}

EvalSummary eval_from_json(const json& j) {
  EvalSummary e;
  try {
    e.ensemble_acc = j.at("ensemble_acc").get<double>();
    e.averaged_acc = j.at("averaged_acc").get<double>();
    e.greedy_soup_acc = j.at("greedy_soup_acc").get<double>();
    e.greedy_soup_val_acc = j.at("greedy_soup_val_acc").get<double>();
    e.greedy_soup_subset =
        j.at("greedy_soup_subset").get<std::vector<std::size_t>>();
    e.best_model_acc = j.at("best_model_acc").get<double>();
    e.worst_model_acc = j.at("worst_model_acc").get<double>();
    e.per_model_acc = j.at("per_model_acc").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed eval summary: ") + ex.what());
  }
  return e;
}

json ledger_to_json(const CommLedger& ledger, std::uint64_t steps) {
  return json{{"steps", steps},
              {"nominal_per_model", ledger.nominal_per_model},
              {"effective_per_model", ledger.effective_per_model},
              {"allreduce_per_model", ledger.allreduce_per_model},
              {"expected_per_model", ledger.expected_per_model},
              {"total_nominal", ledger.total_nominal()},
              {"total_effective", ledger.total_effective()}};
}

void write_interp_csv(std::ostream& out, const InterpolationGrid& grid,
                      std::size_t lambda_index) {
  const auto& cell = grid.acc.at(lambda_index);
  out << "model";
  for (std::size_t b = 0; b < cell.size(); ++b) out << ',' << b;
  out << '\n';
  for (std::size_t a = 0; a < cell.size(); ++a) {
    out << a;
    for (double v : cell[a]) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const RunResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

  std::ostringstream metrics;
  write_metrics_csv(metrics, result.metrics);
  write_text(dir / "metrics.csv", metrics.str());

  if (result.eval) {
    write_text(dir / "eval.json", eval_to_json(*result.eval).dump(2) + "\n");
  }
  write_text(dir / "ledger.json",
             ledger_to_json(result.state.ledger, result.state.next_step).dump(2) +
                 "\n");

  if (!cfg.interp_lambdas.empty() && result.completed()) {
    const Dataset data = load_run_dataset(cfg);
    const InterpolationGrid grid = interpolation_grid(
        cfg.net, result.state.models, cfg.interp_lambdas, data.test);
    for (std::size_t k = 0; k < grid.lambdas.size(); ++k) {
      std::ostringstream csv;
      write_interp_csv(csv, grid, k);
      write_text(dir / ("interp_lambda_" + std::to_string(k) + ".csv"),
                 csv.str());
    }
  }
}

RunResult execute_run(const PlannedRun& run, const TrainOptions& options) {
  RunResult result = train_population(run.cfg, options);
  write_run_artifacts(run.dir, run.cfg, result);
  return result;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows,
                     std::span<const std::string> axis_keys) {
  out << "name";
  for (const auto& key : axis_keys) out << ',' << key;
  out << ",seed,ensemble_acc,averaged_acc,greedy_soup_acc,best_model_acc,"
         "worst_model_acc,final_avg_consensus_dist,comm_scalars_per_model\n";
  for (const auto& row : rows) {
    out << row.name;
    for (const auto& [key, value] : row.axis_values) {
      out << ',';
      if (value.is_number_float()) {
        out << format_double(value.get<double>());
      } else if (value.is_string()) {
        out << value.get<std::string>();
      } else {
        out << value.dump();
      }
    }
    out << ',' << row.seed_index << ',' << format_double(row.eval.ensemble_acc)
        << ',' << format_double(row.eval.averaged_acc) << ','
        << format_double(row.eval.greedy_soup_acc) << ','
        << format_double(row.eval.best_model_acc) << ','
        << format_double(row.eval.worst_model_acc) << ','
        << format_double(row.final_avg_dist) << ','
        << row.comm_scalars_per_model << '\n';
  }
}

std::vector<ReportRow> build_report(
    std::span<const std::filesystem::path> run_dirs,
    std::uint64_t papa_period) {
  std::vector<ReportRow> rows;
  for (const auto& dir : run_dirs) {
    const RunConfig cfg = parse_run_config(read_json(dir / "config.json"));
    const EvalSummary eval = eval_from_json(read_json(dir / "eval.json"));
    ReportRow row;
    row.run = dir.filename().string();
    if (row.run.empty()) row.run = dir.parent_path().filename().string();
    row.strategy = to_string(cfg.strategy.kind);
    row.comm_ratio = expected_comm_fraction(cfg.strategy, papa_period).ratio_vs_papa;
    row.ensemble_acc = eval.ensemble_acc;
    row.averaged_acc = eval.averaged_acc;
    row.greedy_soup_acc = eval.greedy_soup_acc;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << "run,strategy,comm_ratio_vs_papa,ensemble_acc,averaged_acc,"
         "greedy_soup_acc\n";
  for (const auto& r : rows) {
    out << r.run << ',' << r.strategy << ',' << format_double(r.comm_ratio)
        << ',' << format_double(r.ensemble_acc) << ','
        << format_double(r.averaged_acc) << ','
        << format_double(r.greedy_soup_acc) << '\n';
  }
}

void write_report_text(std::ostream& out, std::span<const ReportRow> rows) {
  out << std::left << std::setw(24) << "run" << std::setw(10) << "strategy"
      << std::right << std::setw(12) << "comm/papa" << std::setw(11)
      << "ensemble" << std::setw(11) << "averaged" << std::setw(11)
      << "greedy" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::left << std::setw(24) << r.run << std::setw(10) << r.strategy
        << std::right << std::setprecision(6) << std::setw(12) << r.comm_ratio
        << std::setprecision(2) << std::setw(11) << 100.0 * r.ensemble_acc
        << std::setw(11) << 100.0 * r.averaged_acc << std::setw(11)
        << 100.0 * r.greedy_soup_acc << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace wash
