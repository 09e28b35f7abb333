// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "wash/error.hpp"
#include "wash/rng.hpp"

namespace wash {

std::string to_string(Activation act) {
  return act == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation '" + name + "'");
}

Layout NetSpec::layout() const {
  std::vector<LayerShape> shapes;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    shapes.push_back({{dims[l + 1], dims[l] + 1}});
  }
  return Layout(std::move(shapes));
}

void NetSpec::validate() const {
  if (dims.size() < 2) {
    throw ValidationError("net needs at least an input and an output width");
  }
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
    throw ValidationError("net widths must be positive");
  }
}

Matrix Split::rows(std::span<const std::uint32_t> indices) const {
  Matrix out(indices.size(), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = input(indices[r]);
    std::copy(src.begin(), src.end(), out.data.begin() + r * dim);
  }
  return out;
}

Matrix Split::all() const {
  Matrix out(size(), dim);
  out.data = inputs;
  return out;
}

void Dataset::validate() const {
  if (classes == 0 || dim == 0) {
    throw ValidationError("dataset needs positive class count and dimension");
  }
  for (const Split* split : {&train, &val, &test}) {
    if (split->dim != dim || split->inputs.size() != split->size() * dim) {
      throw ValidationError("split input size does not match dimension");
    }
    for (auto label : split->labels) {
      if (label >= classes) {
        throw ValidationError("label " + std::to_string(label) +
                              " out of range for K=" + std::to_string(classes));
      }
    }
  }
}

LayeredParams init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  LayeredParams params(spec.layout());
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t fan_in = spec.dims[l];
    const std::size_t fan_out = spec.dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    CounterRng rng(seed, Purpose::kInit, l);
    auto w = params.layer(l);
    for (std::size_t o = 0; o < fan_out; ++o) {
      for (std::size_t i = 0; i < fan_in; ++i) {
        w[o * (fan_in + 1) + i] = bound * (2.0 * rng.uniform() - 1.0);
      }
      w[o * (fan_in + 1) + fan_in] = 0.0;
    }
  }
  return params;
}

namespace {

double activate(Activation act, double z) {
  return act == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the activation output a = act(z).
double activate_grad(Activation act, double a) {
  return act == Activation::kRelu ? (a > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}

// out = in * W^T + b for a layer tensor of shape (out, in + 1).
Matrix affine(const Matrix& in, std::span<const double> w, std::size_t n_out) {
  const std::size_t n_in = in.cols;
  const std::size_t stride = n_in + 1;
  Matrix out(in.rows, n_out);
  for (std::size_t r = 0; r < in.rows; ++r) {
    const double* x = in.data.data() + r * n_in;
    double* y = out.data.data() + r * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* wo = w.data() + o * stride;
      double acc = wo[n_in];
      for (std::size_t i = 0; i < n_in; ++i) acc += wo[i] * x[i];
      y[o] = acc;
    }
  }
  return out;
}

// Activations of every layer: acts[0] is the input, acts.back() the logits.
std::vector<Matrix> forward_all(const NetSpec& spec,
                                const LayeredParams& params,
                                const Matrix& inputs) {
  if (inputs.cols != spec.input_dim()) {
    throw ValidationError("input width " + std::to_string(inputs.cols) +
                          " does not match net input " +
                          std::to_string(spec.input_dim()));
  }
  if (!(params.layout() == spec.layout())) {
    throw ShapeError("parameters do not match the net spec");
  }
  for (double v : inputs.data) {
    if (!std::isfinite(v)) throw ValidationError("non-finite input value");
  }
  std::vector<Matrix> acts;
  acts.reserve(spec.layer_count() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    Matrix z = affine(acts.back(), params.layer(l), spec.dims[l + 1]);
    if (l + 1 < spec.layer_count()) {
      for (double& v : z.data) v = activate(spec.activation, v);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Matrix forward(const NetSpec& spec, const LayeredParams& params,
               const Matrix& inputs) {
  return std::move(forward_all(spec, params, inputs).back());
}

LossAndGrad loss_and_grad(const NetSpec& spec, const LayeredParams& params,
                          const Matrix& inputs,
                          std::span<const std::uint32_t> labels,
                          double label_smoothing) {
  if (labels.size() != inputs.rows) {
    throw ValidationError("label count does not match input rows");
  }
  const std::size_t k = spec.classes();
  for (auto label : labels) {
    if (label >= k) throw ValidationError("label out of range");
  }
  auto acts = forward_all(spec, params, inputs);
  const std::size_t batch = inputs.rows;
  const double inv_batch = batch == 0 ? 0.0 : 1.0 / static_cast<double>(batch);
  const double off_target = label_smoothing / static_cast<double>(k);
  const double on_target = 1.0 - label_smoothing + off_target;

  // delta = dL/dlogits, averaged over the batch.
  Matrix delta(batch, k);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const auto logits = acts.back().row(r);
    const double peak = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - peak);
    const double log_denom = std::log(denom);
    for (std::size_t c = 0; c < k; ++c) {
      const double log_prob = logits[c] - peak - log_denom;
      const double target = c == labels[r] ? on_target : off_target;
      loss -= target * log_prob;
      delta(r, c) = (std::exp(log_prob) - target) * inv_batch;
    }
  }
  loss *= inv_batch;

  LayeredParams grads(params.layout());
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    const Matrix& in = acts[l];
    const std::size_t n_in = in.cols;
    const std::size_t n_out = spec.dims[l + 1];
    const std::size_t stride = n_in + 1;
    auto gw = grads.layer(l);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* x = in.data.data() + r * n_in;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double dv = delta(r, o);
        if (dv == 0.0) continue;
        double* g = gw.data() + o * stride;
        for (std::size_t i = 0; i < n_in; ++i) g[i] += dv * x[i];
        g[n_in] += dv;
      }
    }
    if (l == 0) break;
    const auto w = params.layer(l);
    Matrix prev(batch, n_in);
    for (std::size_t r = 0; r < batch; ++r) {
      double* p = prev.data.data() + r * n_in;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double dv = delta(r, o);
        if (dv == 0.0) continue;
        const double* wo = w.data() + o * stride;
        for (std::size_t i = 0; i < n_in; ++i) p[i] += dv * wo[i];
      }
      const double* a = in.data.data() + r * n_in;
      for (std::size_t i = 0; i < n_in; ++i) {
        p[i] *= activate_grad(spec.activation, a[i]);
      }
    }
    delta = std::move(prev);
  }
  return {loss, std::move(grads)};
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[best]) best = c;
  }
  return best;
}

double accuracy(const NetSpec& spec, const LayeredParams& params,
                const Split& split) {
  if (split.size() == 0) return 0.0;
  const Matrix logits = forward(spec, params, split.all());
  std::size_t correct = 0;
  for (std::size_t r = 0; r < split.size(); ++r) {
    if (argmax(logits.row(r)) == split.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

namespace {

void shuffle_indices(std::vector<std::uint32_t>& idx, CounterRng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

Split gather(const std::vector<double>& x, const std::vector<std::uint32_t>& y,
             std::size_t dim, std::span<const std::uint32_t> order) {
  Split out;
  out.dim = dim;
  out.inputs.reserve(order.size() * dim);
  out.labels.reserve(order.size());
  for (auto i : order) {
    out.inputs.insert(out.inputs.end(), x.begin() + i * dim,
                      x.begin() + (i + 1) * dim);
    out.labels.push_back(y[i]);
  }
  return out;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.dim == 0 || spec.modes_per_class == 0) {
    throw ValidationError("synthetic data needs K >= 2, dim >= 1, modes >= 1");
  }
  if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0) {
    throw ValidationError("val_fraction must lie in [0, 1)");
  }
  const std::size_t n_centers = spec.classes * spec.modes_per_class;
  std::vector<double> centers(n_centers * spec.dim);
  {
    CounterRng rng(spec.seed, Purpose::kDataGen, 0);
    for (double& c : centers) c = rng.normal();
  }

  // Example e belongs to class e % K and mode (e / K) % modes.
  auto generate = [&](std::size_t count, std::uint64_t stream,
                      std::vector<double>& x, std::vector<std::uint32_t>& y) {
    CounterRng rng(spec.seed, Purpose::kDataGen, stream);
    x.resize(count * spec.dim);
    y.resize(count);
    for (std::size_t e = 0; e < count; ++e) {
      const std::size_t cls = e % spec.classes;
      const std::size_t mode = (e / spec.classes) % spec.modes_per_class;
      const double* center =
          centers.data() + (cls * spec.modes_per_class + mode) * spec.dim;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        x[e * spec.dim + j] = center[j] + spec.spread * rng.normal();
      }
      y[e] = static_cast<std::uint32_t>(cls);
    }
  };

  Dataset data;
  data.classes = spec.classes;
  data.dim = spec.dim;

  std::vector<double> x;
  std::vector<std::uint32_t> y;
  generate(spec.n_train, 1, x, y);
  std::vector<std::uint32_t> order(spec.n_train);
  std::iota(order.begin(), order.end(), 0u);
  CounterRng split_rng(spec.seed, Purpose::kDataGen, 3);
  shuffle_indices(order, split_rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.val_fraction * static_cast<double>(spec.n_train)));
  std::sort(order.begin(), order.begin() + n_val);
  std::sort(order.begin() + n_val, order.end());
  data.val = gather(x, y, spec.dim, std::span(order).first(n_val));
  data.train = gather(x, y, spec.dim, std::span(order).subspan(n_val));

  generate(spec.n_test, 2, x, y);
  data.test.dim = spec.dim;
  data.test.inputs = std::move(x);
  data.test.labels = std::move(y);
  return data;
}

HeteroAssignment hetero_assignment(std::uint64_t base_seed, std::uint32_t model,
                                   bool hetero) {
  if (!hetero) return {};
  auto pick = [&](std::span<const double> menu, std::uint32_t which) {
    std::vector<std::uint32_t> perm(menu.size());
    std::iota(perm.begin(), perm.end(), 0u);
    CounterRng rng(base_seed, Purpose::kHeteroMenu, which);
    shuffle_indices(perm, rng);
    return menu[perm[model % menu.size()]];
  };
  return {pick(kJitterMenu, 0), pick(kSmoothingMenu, 1)};
}

std::vector<Batch> make_heterogeneous_stream(std::size_t n_train,
                                             std::size_t batch_size,
                                             std::uint32_t model,
                                             std::uint64_t epoch,
                                             std::uint64_t base_seed,
                                             bool hetero) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  std::vector<std::uint32_t> order(n_train);
  std::iota(order.begin(), order.end(), 0u);
  CounterRng rng(base_seed, Purpose::kDataOrder, epoch, model);
  shuffle_indices(order, rng);

  const HeteroAssignment aug = hetero_assignment(base_seed, model, hetero);
  std::vector<Batch> batches;
  batches.reserve((n_train + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n_train; start += batch_size) {
    const std::size_t end = std::min(n_train, start + batch_size);
    Batch b;
    b.indices.assign(order.begin() + start, order.begin() + end);
    b.aug = aug;
    b.epoch = epoch;
    b.model = model;
    b.index_in_epoch = static_cast<std::uint32_t>(batches.size());
    batches.push_back(std::move(b));
  }
  return batches;
}

Matrix materialize_inputs(const Split& split, const Batch& batch,
                          std::uint64_t base_seed) {
  Matrix x = split.rows(batch.indices);
  if (batch.aug.jitter_sigma > 0.0) {
    CounterRng rng(base_seed, Purpose::kJitter, batch.epoch, batch.model,
                   batch.index_in_epoch);
    for (double& v : x.data) v += batch.aug.jitter_sigma * rng.normal();
  }
  return x;
}

std::vector<std::uint32_t> batch_labels(const Split& split, const Batch& batch) {
  std::vector<std::uint32_t> out;
  out.reserve(batch.indices.size());
  for (auto i : batch.indices) out.push_back(split.labels[i]);
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  std::string body = text.str();
  std::replace(body.begin(), body.end(), ',', ' ');
  std::istringstream tokens(body);

  Dataset data;
  std::size_t counts[3];
  if (!(tokens >> data.classes >> data.dim >> counts[0] >> counts[1] >>
        counts[2])) {
    throw ValidationError("dataset header must be `K dim n_train n_val n_test`");
  }
  Split* splits[3] = {&data.train, &data.val, &data.test};
  for (int s = 0; s < 3; ++s) {
    Split& split = *splits[s];
    split.dim = data.dim;
    split.inputs.resize(counts[s] * data.dim);
    split.labels.resize(counts[s]);
    for (std::size_t e = 0; e < counts[s]; ++e) {
      for (std::size_t j = 0; j < data.dim; ++j) {
        if (!(tokens >> split.inputs[e * data.dim + j])) {
          throw ValidationError("dataset truncated in record " +
                                std::to_string(e));
        }
      }
      long long label = -1;
      if (!(tokens >> label) || label < 0) {
        throw ValidationError("bad label in record " + std::to_string(e));
      }
      split.labels[e] = static_cast<std::uint32_t>(label);
    }
  }
  data.validate();
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset " + path.string());
  out << data.classes << ' ' << data.dim << ' ' << data.train.size() << ' '
      << data.val.size() << ' ' << data.test.size() << '\n';
  out << std::setprecision(17);
  for (const Split* split : {&data.train, &data.val, &data.test}) {
    for (std::size_t e = 0; e < split->size(); ++e) {
      for (double v : split->input(e)) out << v << ' ';
      out << split->labels[e] << '\n';
    }
  }
}

}  // namespace wash
