// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// washsim: train populations, run sweeps, compare runs, and trace the 2D toy.
//
// Exit codes: 0 success, 2 config or usage error, 3 numeric abort, 1 other.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "wash/artifacts.hpp"
#include "wash/config.hpp"
#include "wash/error.hpp"
#include "wash/population.hpp"
#include "wash/toy2d.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_train(const std::string& manifest_path, const std::string& out_dir,
              std::size_t threads, std::optional<std::uint64_t> stop_after,
              const std::string& checkpoint, const std::string& resume_from) {
  wash::Manifest manifest = wash::load_manifest(manifest_path);
  if (!out_dir.empty()) manifest.output_dir = out_dir;
  const auto runs = wash::plan_runs(manifest);
  if ((stop_after || !checkpoint.empty() || !resume_from.empty()) &&
      runs.size() != 1) {
    throw wash::ConfigError(
        "checkpointing needs a manifest with exactly one run");
  }
  for (const auto& run : runs) {
    wash::TrainOptions options;
    options.threads = threads;
    options.stop_after = stop_after;
    if (!checkpoint.empty()) options.checkpoint = checkpoint;
    wash::RunResult result =
        resume_from.empty() ? wash::train_population(run.cfg, options)
                            : wash::resume(resume_from, run.cfg, options);
    wash::write_run_artifacts(run.dir, run.cfg, result);
    std::cout << run.name << ": " << result.state.next_step << "/"
              << result.total_steps << " steps";
    if (result.eval) {
      std::cout << ", ensemble " << result.eval->ensemble_acc << ", averaged "
                << result.eval->averaged_acc;
    }
    std::cout << " -> " << run.dir.string() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& out_dir,
              std::size_t jobs, std::size_t threads) {
  wash::Manifest manifest = wash::load_manifest(manifest_path);
  if (!out_dir.empty()) manifest.output_dir = out_dir;
  const auto runs = wash::plan_sweep(manifest);
  std::vector<wash::SweepRow> rows(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        wash::TrainOptions options;
        options.threads = threads;
        const wash::RunResult result = wash::execute_run(runs[i], options);
        auto& row = rows[i];
        row.name = runs[i].name;
        row.axis_values = runs[i].axis_values;
        row.seed_index = runs[i].seed_index;
        row.eval = result.eval.value();
        row.final_avg_dist = result.metrics.empty()
                                 ? 0.0
                                 : result.metrics.back().avg_consensus_dist;
        row.comm_scalars_per_model =
            result.state.ledger.total_nominal() / runs[i].cfg.n_models;
        std::lock_guard lock(log_mutex);
        std::cout << runs[i].dir.string() << ": averaged "
                  << row.eval.averaged_acc << ", ensemble "
                  << row.eval.ensemble_acc << "\n";
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < std::max<std::size_t>(1, jobs); ++j) {
      pool.emplace_back(worker);
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::string> axis_keys;
  for (const auto& axis : manifest.axes) axis_keys.push_back(axis.key);
  std::filesystem::create_directories(manifest.output_dir);
  std::ofstream csv(manifest.output_dir / "sweep.csv",
                    std::ios::binary | std::ios::trunc);
  wash::write_sweep_csv(csv, rows, axis_keys);
  std::cout << "wrote " << (manifest.output_dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, std::uint64_t papa_period,
               const std::string& csv_path) {
  std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
  const auto rows = wash::build_report(paths, papa_period);
  wash::write_report_text(std::cout, rows);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    wash::write_report_csv(csv, rows);
  }
  return 0;
}

int cmd_toy2d(wash::toy2d::ToyConfig cfg, const std::string& strategy,
              std::size_t seeds, const std::string& out_path) {
  using namespace wash::toy2d;
  cfg.strategy = parse_strategy(strategy);
  if (seeds > 0) {
    // Endpoint summary over seeds [seed, seed + seeds).
    std::cout << "seed,point0,point1\n";
    std::size_t both_global = 0;
    std::size_t two_local = 0;
    const std::uint64_t first = cfg.seed;
    for (std::size_t s = 0; s < seeds; ++s) {
      cfg.seed = first + s;
      const ToyResult r = run_toy(cfg);
      std::cout << cfg.seed << ',' << to_string(r.endpoints[0]) << ','
                << to_string(r.endpoints[1]) << '\n';
      if (r.endpoints[0] == Basin::kGlobal && r.endpoints[1] == Basin::kGlobal) {
        ++both_global;
      }
      const bool a_b = r.endpoints[0] == Basin::kLocalA &&
                       r.endpoints[1] == Basin::kLocalB;
      const bool b_a = r.endpoints[0] == Basin::kLocalB &&
                       r.endpoints[1] == Basin::kLocalA;
      if (a_b || b_a) ++two_local;
    }
    std::cerr << strategy << ": both global " << both_global << "/" << seeds
              << ", two distinct local " << two_local << "/" << seeds << "\n";
    return 0;
  }
  const ToyResult r = run_toy(cfg);
  if (out_path.empty() || out_path == "-") {
    write_trajectory_csv(std::cout, r);
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    write_trajectory_csv(out, r);
  }
  std::cerr << "endpoints: " << to_string(r.endpoints[0]) << ", "
            << to_string(r.endpoints[1]) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population training with parameter shuffling and averaging"};
  app.require_subcommand(1);

  std::string manifest, out_dir, checkpoint, resume_from;
  std::size_t threads = 1;
  std::optional<std::uint64_t> stop_after;
  auto* train = app.add_subcommand("train", "Run every entry of a manifest");
  train->add_option("manifest", manifest, "Manifest JSON")->required();
  train->add_option("--out", out_dir, "Override the manifest output_dir");
  train->add_option("--threads", threads, "Worker threads per run");
  train->add_option("--stop-after", stop_after, "Stop after this many steps");
  train->add_option("--checkpoint", checkpoint, "Write a checkpoint here");
  train->add_option("--resume", resume_from, "Resume from this checkpoint");

  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Expand manifest sweep axes");
  sweep->add_option("manifest", manifest, "Manifest JSON")->required();
  sweep->add_option("--out", out_dir, "Override the manifest output_dir");
  sweep->add_option("--jobs", jobs, "Runs executed concurrently");
  sweep->add_option("--threads", threads, "Worker threads per run");

  std::vector<std::string> dirs;
  std::uint64_t papa_period = 10;
  std::string report_csv;
  auto* report = app.add_subcommand("report", "Compare finished runs");
  report->add_option("dirs", dirs, "Run directories")->required();
  report->add_option("--papa-period", papa_period,
                     "Reference papa period for communication ratios");
  report->add_option("--csv", report_csv, "Also write the table as CSV");

  wash::toy2d::ToyConfig toy;
  std::string toy_strategy = "none";
  std::size_t toy_seeds = 0;
  std::string toy_out;
  auto* toy2d = app.add_subcommand("toy2d", "Trace the two-point 2D example");
  toy2d->add_option("--strategy", toy_strategy, "none, papa or wash");
  toy2d->add_option("--seed", toy.seed, "Noise and shuffle seed");
  toy2d->add_option("--sigma", toy.noise_sigma, "Gradient noise std");
  toy2d->add_option("--steps", toy.steps, "SGD steps");
  toy2d->add_option("--lr", toy.lr, "Learning rate");
  toy2d->add_option("--alpha", toy.alpha, "papa EMA retention");
  toy2d->add_option("--papa-period", toy.papa_period, "Steps between EMAs");
  toy2d->add_option("--shuffle-p", toy.shuffle_p, "wash selection probability");
  toy2d->add_flag("--swap-on-select", toy.swap_on_select,
                  "Always swap a selected coordinate");
  toy2d->add_option("--seeds", toy_seeds,
                    "Summarize endpoints over this many seeds instead");
  toy2d->add_option("--out", toy_out, "Trajectory CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) {
      return cmd_train(manifest, out_dir, threads, stop_after, checkpoint,
                       resume_from);
    }
    if (*sweep) return cmd_sweep(manifest, out_dir, jobs, threads);
    if (*report) return cmd_report(dirs, papa_period, report_csv);
    if (*toy2d) return cmd_toy2d(toy, toy_strategy, toy_seeds, toy_out);
  } catch (const wash::NumericAbort& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const wash::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
