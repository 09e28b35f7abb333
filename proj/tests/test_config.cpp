// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>
#include <sstream>

#include "wash/artifacts.hpp"
#include "wash/config.hpp"
#include "wash/error.hpp"

using namespace wash;
using nlohmann::json;

TEST_CASE("defaults") {
  const RunConfig cfg = parse_run_config(json::object());
  CHECK(cfg.net.dims == std::vector<std::size_t>{20, 32, 32, 4});
  CHECK(cfg.opt.momentum == 0.9);
  CHECK(cfg.opt.weight_decay == 1e-4);
  CHECK(cfg.opt.lr_max == 0.1);
  CHECK(cfg.opt.lr_min == 1e-4);
  CHECK(cfg.strategy.alpha == 0.99);
  CHECK(cfg.strategy.period == 10);
  CHECK(cfg.data.synthetic.val_fraction == 0.02);
  CHECK_FALSE(cfg.strategy.alpha_follows_lr);
}

TEST_CASE("flat keys") {
  const json flat = {{"strategy.kind", "wash_opt"},
                     {"strategy.p", 0.01},
                     {"strategy.schedule", "increasing"},
                     {"strategy.window_start_epoch", 2},
                     {"strategy.window_end_epoch", 5.5},
                     {"net.dims", {5, 7, 3}},
                     {"net.activation", "tanh"},
                     {"data.classes", 3},
                     {"data.dim", 5},
                     {"data.hetero", true},
                     {"train.epochs", 4},
                     {"run.n_models", 6},
                     {"run.shuffle_seed", 99},
                     {"run.shared_init", false},
                     {"telemetry.every", 7},
                     {"eval.ensemble", "logits"},
                     {"eval.interp_lambdas", {0, 0.5, 1}}};
  const RunConfig cfg = parse_run_config(flat);
  CHECK(cfg.strategy.kind == StrategyKind::kWashOpt);
  CHECK(cfg.strategy.p == 0.01);
  CHECK(cfg.strategy.schedule == Schedule::kIncreasing);
  CHECK(cfg.window_start_epoch == 2.0);
  CHECK(cfg.window_end_epoch.value() == 5.5);
  CHECK(cfg.net.activation == Activation::kTanh);
  CHECK(cfg.data.hetero);
  CHECK(cfg.n_models == 6);
  CHECK(cfg.shuffle_seed == 99);
  CHECK_FALSE(cfg.uses_shared_init());
  CHECK(cfg.telemetry_every == 7);
  CHECK(cfg.eval.ensemble_mode == EnsembleMode::kLogits);
  CHECK(cfg.interp_lambdas.size() == 3);

  const RunConfig back = parse_run_config(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  RunConfig other = cfg;
  other.strategy.p = 0.02;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("bad configs") {
  const auto rejects = [](json flat) {
    CHECK_THROWS_AS(validate(parse_run_config(flat)), ConfigError);
  };
  rejects({{"strategy.kindd", "wash"}});
  rejects({{"strategy.kind", "gossip"}});
  rejects({{"strategy.p", "high"}});
  rejects({{"strategy.p", 2.0}});
  rejects({{"strategy.kind", "papa"}, {"strategy.alpha", 1.5}});
  rejects({{"strategy.period", -1}});
  rejects({{"strategy.window_start_epoch", 3}, {"strategy.window_end_epoch", 2}});
  rejects({{"train.batch", 0}});
  rejects({{"run.n_models", 0}});
  rejects({{"net.dims", {20, 4}}, {"data.classes", 3}});
  rejects({{"net.dims", {21, 8, 4}}});
  rejects({{"data.kind", "s3"}});
  rejects({{"eval.ensemble", "vote"}});
  CHECK_THROWS_AS(parse_run_config(json::array()), ConfigError);
  // Every config error is a validation error.
  CHECK_THROWS_AS(parse_run_config({{"nope", 1}}), ValidationError);
}

TEST_CASE("epoch conversions") {
  CHECK(steps_per_epoch(100, 32) == 4);
  CHECK(steps_per_epoch(96, 32) == 3);
  RunConfig cfg;
  cfg.window_start_epoch = 1.5;
  cfg.window_end_epoch = 3;
  resolve_window(cfg, 10);
  CHECK(cfg.strategy.window_start == 15);
  CHECK(cfg.strategy.window_end == 30);
  cfg.window_end_epoch.reset();
  resolve_window(cfg, 10);
  CHECK(cfg.strategy.window_end == UINT64_MAX);
}

TEST_CASE("manifest runs and sweeps") {
  const json doc = {
      {"output_dir", "out"},
      {"base", {{"train.epochs", 2}}},
      {"runs",
       {{{"name", "none"}, {"strategy.kind", "none"}},
        {{"name", "wash"}, {"strategy.kind", "wash"}}}},
      {"sweep", {{"strategy.p", {0.001, 0.1}}, {"strategy.schedule",
                                                 {"constant", "decreasing"}}}},
      {"seeds", 3}};
  const Manifest m = parse_manifest(doc);
  const auto runs = plan_runs(m);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].dir == std::filesystem::path("out") / "none");
  CHECK(runs[1].cfg.epochs == 2);

  const auto sweep = plan_sweep(m);
  CHECK(sweep.size() == 2 * 4 * 3);
  std::set<std::filesystem::path> dirs;
  std::set<std::uint64_t> seeds;
  for (const auto& r : sweep) {
    dirs.insert(r.dir);
    seeds.insert(r.cfg.shuffle_seed);
    CHECK(r.axis_values.size() == 2);
    CHECK(r.cfg.strategy.p == r.axis_values[0].second.get<double>());
    CHECK(r.cfg.init_seed == r.seed_index);
  }
  CHECK(dirs.size() == sweep.size());
  CHECK(seeds.size() == sweep.size());
  CHECK(plan_sweep(m)[5].cfg.shuffle_seed == sweep[5].cfg.shuffle_seed);

  CHECK_THROWS_AS(parse_manifest({{"sweep", {{"strategy.q", {1}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"runs", {{{"name", "a"}}, {{"name", "a"}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"outputdir", "x"}}), ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"runs", {{{"strategy.p", -1}}}}}),
                  ConfigError);
}

TEST_CASE("artifact formats") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(3.0) == "3");

  std::ostringstream metrics;
  std::vector<MetricsRecord> rows = {{5, 0.5, 1.25, 2.0, 4.0, 10, 7}};
  write_metrics_csv(metrics, rows);
  CHECK(metrics.str() ==
        "step,lr,mean_loss,avg_consensus_dist,sum_sq_dist,comm_scalars_cum,"
        "comm_scalars_effective_cum\n5,0.5,1.25,2,4,10,7\n");

  EvalSummary e;
  e.ensemble_acc = 0.9;
  e.averaged_acc = 0.8;
  e.greedy_soup_subset = {2, 0};
  e.per_model_acc = {0.7, 0.75, 0.77};
  const EvalSummary back = eval_from_json(eval_to_json(e));
  CHECK(back.averaged_acc == 0.8);
  CHECK(back.greedy_soup_subset == e.greedy_soup_subset);
  CHECK_THROWS_AS(eval_from_json(json::object()), ValidationError);

  InterpolationGrid grid{{0.5}, {{{1.0, 0.25}, {0.25, 0.5}}}};
  std::ostringstream interp;
  write_interp_csv(interp, grid, 0);
  CHECK(interp.str() == "model,0,1\n0,1,0.25\n1,0.25,0.5\n");

  std::ostringstream report;
  std::vector<ReportRow> report_rows = {{"a", "wash", 0.005, 0.9, 0.85, 0.88}};
  write_report_csv(report, report_rows);
  CHECK(report.str() ==
        "run,strategy,comm_ratio_vs_papa,ensemble_acc,averaged_acc,"
        "greedy_soup_acc\na,wash,0.0050000000000000001,0.90000000000000002,"
        "0.84999999999999998,0.88\n");
}
