// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/population.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include "wash/error.hpp"
#include "wash/rng.hpp"

namespace wash {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

std::uint64_t model_init_seed(const RunConfig& cfg, std::size_t n) {
  if (cfg.uses_shared_init() || n == 0) return cfg.init_seed;
  return mix64(cfg.init_seed ^ mix64(n));
}

// Runs fn(n) for every model, spreading models over up to `threads` workers.
// Rethrows the failure of the lowest-indexed model.
template <typename Fn>
void for_each_model(std::size_t n_models, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n_models);
  auto guarded = [&](std::size_t n) {
    try {
      fn(n);
    } catch (...) {
      errors[n] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, n_models);
  if (workers <= 1) {
    for (std::size_t n = 0; n < n_models; ++n) guarded(n);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t n = w; n < n_models; n += workers) guarded(n);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void coordinate(const RunConfig& cfg, const Layout& layout, std::uint64_t t,
                double lr, PopulationState& state, const TrainOptions& options) {
  const StrategyConfig& strategy = cfg.strategy;
  if (!strategy.active_at(t)) return;
  switch (strategy.kind) {
    case StrategyKind::kNone:
      return;
    case StrategyKind::kWash:
    case StrategyKind::kWashOpt: {
      const bool include_opt = strategy.kind == StrategyKind::kWashOpt;
      const ShufflePlan plan = sample_shuffle_plan(
          cfg.shuffle_seed, layout, strategy, state.models.size(), t);
      if (options.on_plan) options.on_plan(plan);
      state.ledger.record(
          apply_shuffle(state.models, state.opt, plan, include_opt));
      state.ledger.expected_per_model +=
          expected_scalars_per_step(strategy, layout);
      return;
    }
    case StrategyKind::kPapa:
    case StrategyKind::kPapaAll: {
      if ((t + 1) % strategy.period != 0) return;
      if (strategy.kind == StrategyKind::kPapa) {
        double alpha = strategy.alpha;
        if (strategy.alpha_follows_lr && cfg.opt.lr_max > 0.0) {
          alpha = 1.0 - (1.0 - strategy.alpha) * lr / cfg.opt.lr_max;
        }
        papa_ema_step(state.models, alpha);
      } else {
        papa_all_step(state.models);
      }
      state.ledger.record_allreduce(layout.total());
      state.ledger.expected_per_model += static_cast<double>(layout.total());
      return;
    }
  }
}

RunResult run_steps(RunConfig cfg, const Dataset& data, PopulationState state,
                    std::vector<MetricsRecord> metrics,
                    const TrainOptions& options) {
  validate(cfg);
  const std::uint64_t spe = steps_per_epoch(data.train.size(), cfg.batch);
  const std::uint64_t total = spe * cfg.epochs;
  resolve_window(cfg, spe);
  const std::uint64_t every = cfg.telemetry_every ? cfg.telemetry_every : spe;
  const std::uint64_t end = std::min(total, options.stop_after.value_or(total));
  const Layout layout = cfg.net.layout();
  const std::size_t n_models = state.models.size();

  std::vector<std::vector<Batch>> streams(n_models);
  std::uint64_t cached_epoch = UINT64_MAX;
  std::vector<double> losses(n_models, 0.0);

  for (std::uint64_t t = state.next_step; t < end; ++t) {
    const std::uint64_t epoch = t / spe;
    if (epoch != cached_epoch) {
      for (std::size_t n = 0; n < n_models; ++n) {
        streams[n] = make_heterogeneous_stream(
            data.train.size(), cfg.batch, static_cast<std::uint32_t>(n), epoch,
            cfg.order_seed, cfg.data.hetero);
      }
      cached_epoch = epoch;
    }
    const double lr = cosine_lr(t, total, cfg.opt.lr_max, cfg.opt.lr_min);

    try {
      for_each_model(n_models, options.threads, [&](std::size_t n) {
        const Batch& batch = streams[n][t % spe];
        const Matrix x = materialize_inputs(data.train, batch, cfg.order_seed);
        const auto y = batch_labels(data.train, batch);
        LossAndGrad lg = loss_and_grad(cfg.net, state.models[n], x, y,
                                       batch.aug.label_smoothing);
        if (!std::isfinite(lg.loss)) {
          throw NumericError("non-finite loss in model " + std::to_string(n));
        }
        sgd_step(state.models[n], lg.grads, state.opt[n], cfg.opt, lr);
        losses[n] = lg.loss;
      });
    } catch (const NumericError& e) {
      throw NumericAbort(e.what(), t);
    }

    coordinate(cfg, layout, t, lr, state, options);
    state.next_step = t + 1;

    if ((t + 1) % every == 0 || t + 1 == total) {
      double loss_sum = 0.0;
      for (double l : losses) loss_sum += l;
      metrics.push_back(telemetry_hook(state.models, t + 1, lr,
                                       loss_sum / static_cast<double>(n_models),
                                       state.ledger));
    }
  }

  RunResult result;
  result.total_steps = total;
  if (options.checkpoint) {
    save_checkpoint(*options.checkpoint,
                    {config_hash(cfg), state, metrics});
  }
  result.state = std::move(state);
  result.metrics = std::move(metrics);
  if (result.completed()) {
    result.eval =
        evaluate_population(cfg.net, result.state.models, data, cfg.eval);
  }
  return result;
}

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("checkpoint truncated");
  return value;
}

constexpr char kMagic[8] = {'W', 'A', 'S', 'H', 'C', 'K', 'P', '1'};

}  // namespace

Dataset load_run_dataset(const RunConfig& cfg) {
  Dataset data = cfg.data.kind == "file" ? load_dataset(cfg.data.path)
                                         : make_synthetic(cfg.data.synthetic);
  if (data.dim != cfg.net.input_dim() || data.classes != cfg.net.classes()) {
    throw ConfigError("net.dims do not match the dataset's dim and classes");
  }
  if (data.train.size() == 0) throw ConfigError("training split is empty");
  return data;
}

PopulationState initial_state(const RunConfig& cfg) {
  validate(cfg);
  PopulationState state;
  state.ledger = CommLedger(cfg.n_models);
  for (std::size_t n = 0; n < cfg.n_models; ++n) {
    state.models.push_back(init_params(cfg.net, model_init_seed(cfg, n)));
    state.opt.push_back(OptState::zeros_like(state.models.back()));
  }
  return state;
}

RunResult train_population(const RunConfig& cfg, const TrainOptions& options) {
  const Dataset data = load_run_dataset(cfg);
  return run_steps(cfg, data, initial_state(cfg), {}, options);
}

RunResult resume(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                 const TrainOptions& options) {
  validate(cfg);
  Checkpoint ckpt = load_checkpoint(checkpoint, cfg.net.layout());
  if (ckpt.config_hash != config_hash(cfg)) {
    throw ConfigError("checkpoint was written by a different config");
  }
  if (ckpt.state.models.size() != cfg.n_models) {
    throw ConfigError("checkpoint model count does not match run.n_models");
  }
  const Dataset data = load_run_dataset(cfg);
  return run_steps(cfg, data, std::move(ckpt.state), std::move(ckpt.metrics),
                   options);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  const auto& state = ckpt.state;
  const std::size_t n_models = state.models.size();
  const std::size_t d = n_models ? state.models[0].size() : 0;
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, ckpt.config_hash);
  put<std::uint64_t>(out, state.next_step);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(n_models));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(
                              n_models ? state.models[0].layer_count() : 0));
  put<std::uint64_t>(out, d);
  for (const auto& m : state.models) {
    out.write(reinterpret_cast<const char*>(m.flat().data()),
              static_cast<std::streamsize>(d * sizeof(double)));
  }
  for (const auto& s : state.opt) {
    out.write(reinterpret_cast<const char*>(s.momentum.flat().data()),
              static_cast<std::streamsize>(d * sizeof(double)));
  }
  for (auto v : state.ledger.nominal_per_model) put<std::uint64_t>(out, v);
  for (auto v : state.ledger.effective_per_model) put<std::uint64_t>(out, v);
  for (auto v : state.ledger.allreduce_per_model) put<std::uint64_t>(out, v);
  put<double>(out, state.ledger.expected_per_model);
  put<std::uint64_t>(out, ckpt.metrics.size());
  for (const auto& row : ckpt.metrics) {
    put<std::uint64_t>(out, row.step);
    put<double>(out, row.lr);
    put<double>(out, row.mean_loss);
    put<double>(out, row.avg_consensus_dist);
    put<double>(out, row.sum_sq_dist);
    put<std::uint64_t>(out, row.comm_scalars_cum);
    put<std::uint64_t>(out, row.comm_scalars_effective_cum);
  }
  if (!out) throw ValidationError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Layout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw ValidationError("not a checkpoint file: " + path.string());
  }
  Checkpoint ckpt;
  ckpt.config_hash = get<std::uint64_t>(in);
  auto& state = ckpt.state;
  state.next_step = get<std::uint64_t>(in);
  const auto n_models = get<std::uint32_t>(in);
  const auto n_layers = get<std::uint32_t>(in);
  const auto d = get<std::uint64_t>(in);
  if (d != layout.total() || n_layers != layout.layer_count()) {
    throw ShapeError("checkpoint parameter layout does not match the net");
  }
  auto read_params = [&] {
    std::vector<double> values(d);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(d * sizeof(double)));
    if (!in) throw ValidationError("checkpoint truncated");
    return LayeredParams(layout, std::move(values));
  };
  for (std::uint32_t n = 0; n < n_models; ++n) {
    state.models.push_back(read_params());
  }
  for (std::uint32_t n = 0; n < n_models; ++n) {
    state.opt.push_back({read_params()});
  }
  state.ledger = CommLedger(n_models);
  for (auto& v : state.ledger.nominal_per_model) v = get<std::uint64_t>(in);
  for (auto& v : state.ledger.effective_per_model) v = get<std::uint64_t>(in);
  for (auto& v : state.ledger.allreduce_per_model) v = get<std::uint64_t>(in);
  state.ledger.expected_per_model = get<double>(in);
  const auto rows = get<std::uint64_t>(in);
  for (std::uint64_t r = 0; r < rows; ++r) {
    MetricsRecord row;
    row.step = get<std::uint64_t>(in);
    row.lr = get<double>(in);
    row.mean_loss = get<double>(in);
    row.avg_consensus_dist = get<double>(in);
    row.sum_sq_dist = get<double>(in);
    row.comm_scalars_cum = get<std::uint64_t>(in);
    row.comm_scalars_effective_cum = get<std::uint64_t>(in);
    ckpt.metrics.push_back(row);
  }
  return ckpt;
}

}  // namespace wash
