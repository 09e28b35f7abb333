// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "wash/error.hpp"
#include "wash/rng.hpp"

namespace wash {

using nlohmann::json;

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

std::uint64_t as_uint(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  bad_value(key, "expected a non-negative integer");
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad_value(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_value(key, "expected a string");
  return v.get<std::string>();
}

template <typename Parse>
auto as_enum(const std::string& key, const json& v, Parse parse) {
  try {
    return parse(as_string(key, v));
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    bad_value(key, e.what());
  }
}

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"strategy.kind",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.kind = as_enum(k, v, parse_strategy_kind);
       }},
      {"strategy.p",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.p = as_double(k, v);
       }},
      {"strategy.schedule",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.schedule = as_enum(k, v, parse_schedule);
       }},
      {"strategy.alpha",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.alpha = as_double(k, v);
       }},
      {"strategy.alpha_follows_lr",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.alpha_follows_lr = as_bool(k, v);
       }},
      {"strategy.period",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.strategy.period = as_uint(k, v);
       }},
      {"strategy.window_start_epoch",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.window_start_epoch = as_double(k, v);
       }},
      {"strategy.window_end_epoch",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (v.is_null()) {
           c.window_end_epoch.reset();
         } else {
           c.window_end_epoch = as_double(k, v);
         }
       }},
      {"net.dims",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (!v.is_array()) bad_value(k, "expected an array of widths");
         c.net.dims.clear();
         for (const auto& w : v) c.net.dims.push_back(as_uint(k, w));
       }},
      {"net.activation",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.net.activation = as_enum(k, v, parse_activation);
       }},
      {"data.kind",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.kind = as_string(k, v);
       }},
      {"data.path",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.path = as_string(k, v);
       }},
      {"data.seed",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.seed = as_uint(k, v);
       }},
      {"data.classes",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.classes = as_uint(k, v);
       }},
      {"data.dim",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.dim = as_uint(k, v);
       }},
      {"data.n_train",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.n_train = as_uint(k, v);
       }},
      {"data.n_test",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.n_test = as_uint(k, v);
       }},
      {"data.spread",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.spread = as_double(k, v);
       }},
      {"data.modes",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.modes_per_class = as_uint(k, v);
       }},
      {"data.val_fraction",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.synthetic.val_fraction = as_double(k, v);
       }},
      {"data.hetero",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.data.hetero = as_bool(k, v);
       }},
      {"train.epochs",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.epochs = as_uint(k, v);
       }},
      {"train.batch",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.batch = as_uint(k, v);
       }},
      {"opt.momentum",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.opt.momentum = as_double(k, v);
       }},
      {"opt.weight_decay",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.opt.weight_decay = as_double(k, v);
       }},
      {"opt.lr_max",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.opt.lr_max = as_double(k, v);
       }},
      {"opt.lr_min",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.opt.lr_min = as_double(k, v);
       }},
      {"run.n_models",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.n_models = as_uint(k, v);
       }},
      {"run.init_seed",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.init_seed = as_uint(k, v);
       }},
      {"run.order_seed",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.order_seed = as_uint(k, v);
       }},
      {"run.shuffle_seed",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.shuffle_seed = as_uint(k, v);
       }},
      {"run.shared_init",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (v.is_null()) {
           c.shared_init.reset();
         } else {
           c.shared_init = as_bool(k, v);
         }
       }},
      {"telemetry.every",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.telemetry_every = as_uint(k, v);
       }},
      {"eval.ensemble",
       [](RunConfig& c, const std::string& k, const json& v) {
         const std::string mode = as_string(k, v);
         if (mode == "probabilities") {
           c.eval.ensemble_mode = EnsembleMode::kProbabilities;
         } else if (mode == "logits") {
           c.eval.ensemble_mode = EnsembleMode::kLogits;
         } else {
           bad_value(k, "expected 'probabilities' or 'logits'");
         }
       }},
      {"eval.greedy_strict",
       [](RunConfig& c, const std::string& k, const json& v) {
         c.eval.greedy_strict = as_bool(k, v);
       }},
      {"eval.interp_lambdas",
       [](RunConfig& c, const std::string& k, const json& v) {
         if (!v.is_array()) bad_value(k, "expected an array of numbers");
         c.interp_lambdas.clear();
         for (const auto& x : v) c.interp_lambdas.push_back(as_double(k, x));
       }},
  };
  return table;
}

}  // namespace

RunConfig parse_run_config(const json& flat) {
  if (!flat.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : flat.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

json to_json(const RunConfig& c) {
  json j = json::object();
  j["strategy.kind"] = to_string(c.strategy.kind);
  j["strategy.p"] = c.strategy.p;
  j["strategy.schedule"] = to_string(c.strategy.schedule);
  j["strategy.alpha"] = c.strategy.alpha;
  j["strategy.alpha_follows_lr"] = c.strategy.alpha_follows_lr;
  j["strategy.period"] = c.strategy.period;
  j["strategy.window_start_epoch"] = c.window_start_epoch;
  if (c.window_end_epoch) j["strategy.window_end_epoch"] = *c.window_end_epoch;
  j["net.dims"] = c.net.dims;
  j["net.activation"] = to_string(c.net.activation);
  j["data.kind"] = c.data.kind;
  j["data.path"] = c.data.path.string();
  j["data.seed"] = c.data.synthetic.seed;
  j["data.classes"] = c.data.synthetic.classes;
  j["data.dim"] = c.data.synthetic.dim;
  j["data.n_train"] = c.data.synthetic.n_train;
  j["data.n_test"] = c.data.synthetic.n_test;
  j["data.spread"] = c.data.synthetic.spread;
  j["data.modes"] = c.data.synthetic.modes_per_class;
  j["data.val_fraction"] = c.data.synthetic.val_fraction;
  j["data.hetero"] = c.data.hetero;
  j["train.epochs"] = c.epochs;
  j["train.batch"] = c.batch;
  j["opt.momentum"] = c.opt.momentum;
  j["opt.weight_decay"] = c.opt.weight_decay;
  j["opt.lr_max"] = c.opt.lr_max;
  j["opt.lr_min"] = c.opt.lr_min;
  j["run.n_models"] = c.n_models;
  j["run.init_seed"] = c.init_seed;
  j["run.order_seed"] = c.order_seed;
  j["run.shuffle_seed"] = c.shuffle_seed;
  j["run.shared_init"] = c.uses_shared_init();
  j["telemetry.every"] = c.telemetry_every;
  j["eval.ensemble"] = c.eval.ensemble_mode == EnsembleMode::kProbabilities
                           ? "probabilities"
                           : "logits";
  j["eval.greedy_strict"] = c.eval.greedy_strict;
  j["eval.interp_lambdas"] = c.interp_lambdas;
  return j;
}

void validate(const RunConfig& c) {
  try {
    c.net.validate();
    c.strategy.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (c.n_models < 1) throw ConfigError("run.n_models must be at least 1");
  if (c.batch == 0) throw ConfigError("train.batch must be positive");
  if (c.data.kind != "synthetic" && c.data.kind != "file") {
    throw ConfigError("data.kind must be 'synthetic' or 'file'");
  }
  if (c.data.kind == "file" && c.data.path.empty()) {
    throw ConfigError("data.kind 'file' needs data.path");
  }
  if (c.data.kind == "synthetic") {
    const auto& s = c.data.synthetic;
    if (c.net.input_dim() != s.dim || c.net.classes() != s.classes) {
      throw ConfigError("net.dims must start at data.dim and end at "
                        "data.classes");
    }
    if (s.classes < 2) throw ConfigError("data.classes must be at least 2");
    if (s.modes_per_class == 0) throw ConfigError("data.modes must be >= 1");
    if (!(s.val_fraction >= 0.0 && s.val_fraction < 1.0)) {
      throw ConfigError("data.val_fraction must lie in [0, 1)");
    }
    if (!(s.spread >= 0.0)) throw ConfigError("data.spread must be >= 0");
  }
  if (!(c.opt.lr_max >= c.opt.lr_min && c.opt.lr_min >= 0.0)) {
    throw ConfigError("need 0 <= opt.lr_min <= opt.lr_max");
  }
  if (!(c.opt.momentum >= 0.0 && c.opt.momentum < 1.0)) {
    throw ConfigError("opt.momentum must lie in [0, 1)");
  }
  if (!(c.window_start_epoch >= 0.0)) {
    throw ConfigError("strategy.window_start_epoch must be >= 0");
  }
  if (c.window_end_epoch && !(*c.window_end_epoch >= c.window_start_epoch)) {
    throw ConfigError("strategy window end lies before its start");
  }
  if (is_shuffling(c.strategy.kind) &&
      c.strategy.schedule != Schedule::kConstant && c.net.layer_count() < 2) {
    throw ConfigError("a single-layer net only supports the constant schedule");
  }
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t steps_per_epoch(std::size_t n_train, std::size_t batch) {
  if (batch == 0) throw ConfigError("train.batch must be positive");
  return (n_train + batch - 1) / batch;
}

void resolve_window(RunConfig& cfg, std::uint64_t spe) {
  auto to_step = [&](double epoch) {
    return static_cast<std::uint64_t>(
        std::llround(epoch * static_cast<double>(spe)));
  };
  cfg.strategy.window_start = to_step(cfg.window_start_epoch);
  cfg.strategy.window_end =
      cfg.window_end_epoch ? to_step(*cfg.window_end_epoch) : UINT64_MAX;
}

Manifest parse_manifest(const json& doc) {
  if (!doc.is_object()) throw ConfigError("manifest must be a JSON object");
  Manifest m;
  json base = json::object();
  for (const auto& [key, value] : doc.items()) {
    if (key == "output_dir") {
      m.output_dir = as_string(key, value);
    } else if (key == "base") {
      if (!value.is_object()) bad_value(key, "expected an object");
      base = value;
    } else if (key == "runs") {
      if (!value.is_array()) bad_value(key, "expected an array");
    } else if (key == "sweep") {
      if (!value.is_object()) bad_value(key, "expected an object");
      for (const auto& [axis, values] : value.items()) {
        if (!setters().contains(axis)) {
          throw ConfigError("unknown sweep axis '" + axis + "'");
        }
        if (!values.is_array() || values.empty()) {
          bad_value("sweep." + axis, "expected a non-empty array");
        }
        m.axes.push_back({axis, std::vector<json>(values.begin(), values.end())});
      }
    } else if (key == "seeds") {
      m.seeds = as_uint(key, value);
      if (m.seeds == 0) bad_value(key, "must be at least 1");
    } else {
      throw ConfigError("unknown manifest key '" + key + "'");
    }
  }

  const json runs = doc.contains("runs") ? doc["runs"] : json::array({json::object()});
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (!runs[r].is_object()) throw ConfigError("each run must be an object");
    ManifestRun run;
    run.flat = base;
    run.name = runs.size() == 1 ? "run" : "run" + std::to_string(r);
    for (const auto& [key, value] : runs[r].items()) {
      if (key == "name") {
        run.name = as_string(key, value);
      } else {
        run.flat[key] = value;
      }
    }
    parse_run_config(run.flat);
    for (const auto& prior : m.runs) {
      if (prior.name == run.name) {
        throw ConfigError("duplicate run name '" + run.name + "'");
      }
    }
    m.runs.push_back(std::move(run));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return parse_manifest(doc);
}

std::vector<PlannedRun> plan_runs(const Manifest& manifest) {
  std::vector<PlannedRun> out;
  for (const auto& run : manifest.runs) {
    out.push_back({run.name, manifest.output_dir / run.name,
                   parse_run_config(run.flat), {}, 0});
  }
  return out;
}

namespace {

std::string axis_tag(const std::string& key, const json& value) {
  std::string text = value.is_string() ? value.get<std::string>() : value.dump();
  std::string tag = key.substr(key.find('.') + 1) + "=" + text;
  for (char& ch : tag) {
    if (ch == '/' || ch == ' ' || ch == '"' || ch == '[' || ch == ']' ||
        ch == ',') {
      ch = '_';
    }
  }
  return tag;
}

}  // namespace

std::vector<PlannedRun> plan_sweep(const Manifest& manifest) {
  std::vector<PlannedRun> out;
  std::size_t combos = 1;
  for (const auto& axis : manifest.axes) combos *= axis.values.size();

  for (const auto& run : manifest.runs) {
    for (std::size_t combo = 0; combo < combos; ++combo) {
      json flat = run.flat;
      std::vector<std::pair<std::string, json>> values;
      std::filesystem::path dir = manifest.output_dir / run.name;
      std::size_t rest = combo;
      for (const auto& axis : manifest.axes) {
        const json& v = axis.values[rest % axis.values.size()];
        rest /= axis.values.size();
        flat[axis.key] = v;
        values.emplace_back(axis.key, v);
        dir /= axis_tag(axis.key, v);
      }
      for (std::size_t k = 0; k < manifest.seeds; ++k) {
        RunConfig cfg = parse_run_config(flat);
        cfg.init_seed += k;
        cfg.order_seed += k;
        cfg.shuffle_seed = mix64(cfg.shuffle_seed ^ mix64(out.size() + 1));
        out.push_back({run.name, dir / ("seed" + std::to_string(k)),
                       std::move(cfg), values, k});
      }
    }
  }
  return out;
}

}  // namespace wash
