// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/coordination.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "wash/error.hpp"
#include "wash/rng.hpp"

namespace wash {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kNone: return "none";
    case StrategyKind::kWash: return "wash";
    case StrategyKind::kWashOpt: return "wash_opt";
    case StrategyKind::kPapa: return "papa";
    case StrategyKind::kPapaAll: return "papa_all";
  }
  return "?";
}

std::string to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::kDecreasing: return "decreasing";
    case Schedule::kConstant: return "constant";
    case Schedule::kIncreasing: return "increasing";
  }
  return "?";
}

StrategyKind parse_strategy_kind(const std::string& name) {
  for (auto kind : {StrategyKind::kNone, StrategyKind::kWash,
                    StrategyKind::kWashOpt, StrategyKind::kPapa,
                    StrategyKind::kPapaAll}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown strategy kind '" + name + "'");
}

Schedule parse_schedule(const std::string& name) {
  for (auto s :
       {Schedule::kDecreasing, Schedule::kConstant, Schedule::kIncreasing}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown schedule '" + name + "'");
}

void StrategyConfig::validate() const {
  if (window_start > window_end) {
    throw ValidationError("strategy window start lies after its end");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("shuffle probability p must lie in [0, 1]");
  }
  if (kind == StrategyKind::kPapa && !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("papa alpha must lie in (0, 1)");
  }
  if ((kind == StrategyKind::kPapa || kind == StrategyKind::kPapaAll) &&
      period == 0) {
    throw ValidationError("papa period must be positive");
  }
}

double layer_probability(std::size_t l, std::size_t L, double p,
                         Schedule schedule) {
  if (L == 0 || l >= L) {
    throw ValidationError("layer " + std::to_string(l) + " out of range for L=" +
                          std::to_string(L));
  }
  if (schedule == Schedule::kConstant) return p;
  if (L == 1) {
    throw ValidationError("a single-layer model only supports the constant "
                          "schedule");
  }
  const double depth = static_cast<double>(l) / static_cast<double>(L - 1);
  return schedule == Schedule::kDecreasing ? p * (1.0 - depth) : p * depth;
}

namespace {

void select_block(CounterRng& rng, double prob, std::size_t begin,
                  std::size_t len, SamplingPath path,
                  std::vector<std::uint64_t>& out) {
  if (path == SamplingPath::kElementwise) {
    for (std::size_t k = 0; k < len; ++k) {
      if (rng.uniform() < prob) out.push_back(begin + k);
    }
    return;
  }
  std::uint64_t pos = rng.geometric(prob);
  while (pos < len) {
    out.push_back(begin + pos);
    const std::uint64_t gap = rng.geometric(prob);
    if (gap >= len) break;
    pos += 1 + gap;
  }
}

}  // namespace

ShufflePlan sample_shuffle_plan(std::uint64_t seed, const Layout& layout,
                                const StrategyConfig& cfg,
                                std::size_t n_models, std::uint64_t step,
                                SamplingPath path) {
  ShufflePlan plan;
  plan.step = step;
  plan.n_models = n_models;
  const std::size_t L = layout.layer_count();
  for (std::size_t l = 0; l < L; ++l) {
    const double prob = layer_probability(l, L, cfg.p, cfg.schedule);
    const std::size_t offset = layout.layer_offset(l);
    const std::size_t size = layout.layer_size(l);
    if (prob <= 0.0) continue;
    if (prob >= 1.0) {
      for (std::size_t k = 0; k < size; ++k) plan.coords.push_back(offset + k);
      continue;
    }
    SamplingPath layer_path = path;
    if (layer_path == SamplingPath::kAuto) {
      layer_path = prob <= kSparseThreshold ? SamplingPath::kGeometricGaps
                                            : SamplingPath::kElementwise;
    }
    for (std::size_t block = 0; block * kSelectBlock < size; ++block) {
      const std::size_t begin = block * kSelectBlock;
      const std::size_t len = std::min(kSelectBlock, size - begin);
      CounterRng rng(seed, Purpose::kShuffleSelect, step,
                     static_cast<std::uint32_t>(l),
                     static_cast<std::uint32_t>(block));
      select_block(rng, prob, offset + begin, len, layer_path, plan.coords);
    }
  }

  plan.perms.resize(plan.coords.size() * n_models);
  for (std::size_t k = 0; k < plan.coords.size(); ++k) {
    const std::uint64_t coord = plan.coords[k];
    CounterRng rng(seed, Purpose::kShufflePerm, step,
                   static_cast<std::uint32_t>(coord >> 32),
                   static_cast<std::uint32_t>(coord));
    auto perm = std::span(plan.perms).subspan(k * n_models, n_models);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = n_models; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.below(i)]);
    }
  }
  return plan;
}

CommDelta apply_shuffle(std::span<LayeredParams> pop,
                        std::span<OptState> states, const ShufflePlan& plan,
                        bool include_opt) {
  const std::size_t n_models = pop.size();
  if (plan.n_models != n_models) {
    throw ValidationError("plan was sampled for " +
                          std::to_string(plan.n_models) + " models, got " +
                          std::to_string(n_models));
  }
  require_homogeneous(pop);
  if (include_opt && states.size() != n_models) {
    throw ValidationError("optimizer state count does not match population");
  }
  const std::size_t d = pop[0].size();

  CommDelta delta{std::vector<std::uint64_t>(n_models, 0),
                  std::vector<std::uint64_t>(n_models, 0)};
  const std::uint64_t per_coord = include_opt ? 2 : 1;
  std::vector<double> buffer(n_models);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const std::uint64_t i = plan.coords[k];
    if (i >= d) {
      throw ValidationError("plan coordinate " + std::to_string(i) +
                            " out of range for d=" + std::to_string(d));
    }
    const auto perm = plan.perm(k);
    for (std::size_t n = 0; n < n_models; ++n) buffer[n] = pop[perm[n]][i];
    for (std::size_t n = 0; n < n_models; ++n) pop[n][i] = buffer[n];
    if (include_opt) {
      for (std::size_t n = 0; n < n_models; ++n) {
        buffer[n] = states[perm[n]].momentum[i];
      }
      for (std::size_t n = 0; n < n_models; ++n) {
        states[n].momentum[i] = buffer[n];
      }
    }
    for (std::size_t n = 0; n < n_models; ++n) {
      delta.nominal[n] += per_coord;
      if (perm[n] != n) delta.effective[n] += per_coord;
    }
  }
  return delta;
}

void papa_ema_step(std::span<LayeredParams> pop, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("EMA alpha must lie in (0, 1]");
  }
  const LayeredParams mean = consensus_mean(pop);
  const double pull = 1.0 - alpha;
  for (auto& model : pop) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      model[i] = alpha * model[i] + pull * mean[i];
    }
  }
}

void papa_all_step(std::span<LayeredParams> pop) {
  const LayeredParams mean = consensus_mean(pop);
  for (auto& model : pop) model = mean;
}

void CommLedger::record(const CommDelta& delta) {
  for (std::size_t n = 0; n < nominal_per_model.size(); ++n) {
    nominal_per_model[n] += delta.nominal.at(n);
    effective_per_model[n] += delta.effective.at(n);
  }
}

void CommLedger::record_allreduce(std::uint64_t d) {
  for (auto& v : allreduce_per_model) v += d;
}

std::uint64_t CommLedger::total_nominal() const {
  return std::accumulate(nominal_per_model.begin(), nominal_per_model.end(),
                         std::uint64_t{0}) +
         std::accumulate(allreduce_per_model.begin(),
                         allreduce_per_model.end(), std::uint64_t{0});
}

std::uint64_t CommLedger::total_effective() const {
  return std::accumulate(effective_per_model.begin(),
                         effective_per_model.end(), std::uint64_t{0}) +
         std::accumulate(allreduce_per_model.begin(),
                         allreduce_per_model.end(), std::uint64_t{0});
}

namespace {

double schedule_mean_factor(Schedule schedule) {
  return schedule == Schedule::kConstant ? 1.0 : 0.5;
}

}  // namespace

CommFraction expected_comm_fraction(const StrategyConfig& cfg,
                                    std::uint64_t papa_period) {
  if (papa_period == 0) throw ValidationError("papa period must be positive");
  double per_step = 0.0;
  switch (cfg.kind) {
    case StrategyKind::kNone:
      break;
    case StrategyKind::kWash:
      per_step = cfg.p * schedule_mean_factor(cfg.schedule);
      break;
    case StrategyKind::kWashOpt:
      per_step = 2.0 * cfg.p * schedule_mean_factor(cfg.schedule);
      break;
    case StrategyKind::kPapa:
    case StrategyKind::kPapaAll:
      if (cfg.period == 0) throw ValidationError("period must be positive");
      per_step = 1.0 / static_cast<double>(cfg.period);
      break;
  }
  return {per_step, per_step * static_cast<double>(papa_period)};
}

double expected_scalars_per_step(const StrategyConfig& cfg,
                                 const Layout& layout) {
  switch (cfg.kind) {
    case StrategyKind::kNone:
      return 0.0;
    case StrategyKind::kPapa:
    case StrategyKind::kPapaAll:
      return static_cast<double>(layout.total()) /
             static_cast<double>(cfg.period);
    case StrategyKind::kWash:
    case StrategyKind::kWashOpt:
      break;
  }
  double expected = 0.0;
  const std::size_t L = layout.layer_count();
  for (std::size_t l = 0; l < L; ++l) {
    expected += std::clamp(layer_probability(l, L, cfg.p, cfg.schedule), 0.0,
                           1.0) *
                static_cast<double>(layout.layer_size(l));
  }
  return cfg.kind == StrategyKind::kWashOpt ? 2.0 * expected : expected;
}

void write_plan(std::ostream& out, const ShufflePlan& plan,
                const Layout& layout) {
  for (std::size_t k = 0; k < plan.size(); ++k) {
    out << plan.step << ' ' << layout.locate(plan.coords[k]).layer << ' '
        << plan.coords[k];
    for (auto v : plan.perm(k)) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace wash
