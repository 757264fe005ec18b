#include "logsieve/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "logsieve/binio.hpp"
#include "logsieve/errors.hpp"
#include "logsieve/rng.hpp"

namespace logsieve {
namespace mlp {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2)
    throw ShapeError("need at least an input and an output layer");
  for (int d : dims)
    if (d < 1) throw ShapeError("layer widths must be >= 1");
}

void softmax_in_place(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// z[l] = W[l] * a[l-1] + b[l]; hidden layers then ReLU. Keeps every
// activation for the backward pass: acts[0] = x, acts[l+1] = output of
// layer l (post-ReLU on hidden, raw logits on the last layer until the
// caller applies softmax).
void forward_all(const std::vector<std::vector<double>>& weights,
                 const std::vector<std::vector<double>>& biases,
                 const std::vector<int>& dims, const std::vector<double>& x,
                 std::vector<std::vector<double>>& acts) {
  const std::size_t L = weights.size();
  acts.resize(L + 1);
  acts[0] = x;
  for (std::size_t l = 0; l < L; ++l) {
    const int in = dims[l], out = dims[l + 1];
    auto& a = acts[l + 1];
    a.assign(out, 0.0);
    const double* W = weights[l].data();
    const double* prev = acts[l].data();
    for (int o = 0; o < out; ++o) {
      double sum = biases[l][o];
      const double* row = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) sum += row[i] * prev[i];
      a[o] = sum;
    }
    if (l + 1 < L)
      for (double& v : a) v = v > 0.0 ? v : 0.0;  // ReLU
  }
}

}  // namespace

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

MlpModel::MlpModel(std::vector<int> dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.emplace_back(
        static_cast<std::size_t>(dims_[l + 1]) * dims_[l], 0.0);
    biases_.emplace_back(dims_[l + 1], 0.0);
  }
}

MlpModel MlpModel::init(std::vector<int> dims, std::uint64_t seed) {
  MlpModel m(std::move(dims));
  Rng rng(seed);
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    const double limit = std::sqrt(6.0 / m.dims_[l]);
    for (double& w : m.weights_[l])
      w = (rng.next_double() * 2.0 - 1.0) * limit;
  }
  return m;
}

std::vector<double> MlpModel::forward(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(input_dim()))
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " entries, expected " + std::to_string(input_dim()));
  std::vector<std::vector<double>> acts;
  forward_all(weights_, biases_, dims_, x, acts);
  std::vector<double> out = acts.back();
  softmax_in_place(out);
  return out;
}

double MlpModel::loss(const std::vector<Example>& batch) const {
  return loss(batch, {});
}

double MlpModel::loss(const std::vector<Example>& batch,
                      const std::vector<double>& class_weights) const {
  if (batch.empty()) throw EmptyBatchError();
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(output_dim()))
    throw ShapeError("need one class weight per output class");
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= output_dim())
      throw Error("label " + std::to_string(ex.label) + " out of range");
    const auto p = forward(ex.x);
    const double w = class_weights.empty() ? 1.0 : class_weights[ex.label];
    // Clamp keeps the loss finite even for saturated wrong predictions.
    total += w * -std::log(std::max(p[ex.label], 1e-300));
  }
  return total / static_cast<double>(batch.size());
}

Gradients MlpModel::backward(const std::vector<Example>& batch) const {
  return backward(batch, {});
}

Gradients MlpModel::backward(const std::vector<Example>& batch,
                             const std::vector<double>& class_weights) const {
  if (batch.empty()) throw EmptyBatchError();
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(output_dim()))
    throw ShapeError("need one class weight per output class");
  const std::size_t L = weights_.size();
  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    g.weights[l].assign(weights_[l].size(), 0.0);
    g.biases[l].assign(biases_[l].size(), 0.0);
  }

  std::vector<std::vector<double>> acts;
  std::vector<double> delta, delta_prev;
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= output_dim())
      throw Error("label " + std::to_string(ex.label) + " out of range");
    forward_all(weights_, biases_, dims_, ex.x, acts);
    delta = acts.back();
    softmax_in_place(delta);
    delta[ex.label] -= 1.0;  // fused softmax + cross-entropy gradient
    if (!class_weights.empty())
      for (double& d : delta) d *= class_weights[ex.label];

    for (std::size_t l = L; l-- > 0;) {
      const int in = dims_[l], out = dims_[l + 1];
      const double* prev = acts[l].data();
      double* gw = g.weights[l].data();
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        g.biases[l][o] += d;
        double* row = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) row[i] += d * prev[i];
      }
      if (l == 0) break;
      delta_prev.assign(in, 0.0);
      const double* W = weights_[l].data();
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        const double* row = W + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) delta_prev[i] += row[i] * d;
      }
      // ReLU derivative: activations at or below zero block the signal.
      for (int i = 0; i < in; ++i)
        if (acts[l][i] <= 0.0) delta_prev[i] = 0.0;
      delta.swap(delta_prev);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t l = 0; l < L; ++l) {
    for (double& v : g.weights[l]) v *= inv_n;
    for (double& v : g.biases[l]) v *= inv_n;
  }
  return g;
}

void MlpModel::apply(const Gradients& g, double learning_rate) {
  if (g.weights.size() != weights_.size())
    throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (g.weights[l].size() != weights_[l].size() ||
        g.biases[l].size() != biases_[l].size())
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    for (std::size_t i = 0; i < weights_[l].size(); ++i)
      weights_[l][i] -= learning_rate * g.weights[l][i];
    for (std::size_t i = 0; i < biases_[l].size(); ++i)
      biases_[l][i] -= learning_rate * g.biases[l][i];
  }
}

MlpModel MlpModel::train(const std::vector<Example>& dataset,
                         std::vector<int> dims, const TrainConfig& cfg,
                         std::vector<double>* epoch_loss_trace) {
  if (dataset.empty()) throw TrainingDataEmptyError();
  check_dims(dims);
  if (cfg.learning_rate <= 0.0) throw Error("learning rate must be > 0");
  if (cfg.epochs < 1) throw Error("epoch count must be >= 1");
  if (cfg.batch_size < 1) throw Error("batch size must be >= 1");
  const std::size_t d_in = static_cast<std::size_t>(dims.front());
  for (const auto& ex : dataset) {
    if (ex.x.size() != d_in) throw ShapeError("example width mismatch");
    if (ex.label < 0 || ex.label >= dims.back())
      throw Error("label " + std::to_string(ex.label) + " out of range");
  }

  MlpModel m = init(std::move(dims), cfg.seed);
  Rng rng(mix_seed(cfg.seed, 1));  // shuffle stream, decoupled from init
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  if (epoch_loss_trace) epoch_loss_trace->clear();

  std::vector<Example> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(dataset[order[i]]);
      m.apply(m.backward(batch, cfg.class_weights), cfg.learning_rate);
    }
    if (epoch_loss_trace)
      epoch_loss_trace->push_back(m.loss(dataset, cfg.class_weights));
  }
  return m;
}

void MlpModel::save(std::ostream& os) const {
  BinWriter w(os);
  w.magic(kMagic, kVersion);
  w.u32(static_cast<std::uint32_t>(dims_.size()));
  for (int d : dims_) w.u32(static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    w.f64s(weights_[l]);
    w.f64s(biases_[l]);
  }
  if (!os) throw Error("write failed while saving model");
}

MlpModel MlpModel::load(std::istream& is) {
  BinReader r(is);
  const std::uint32_t version = r.magic(kMagic);
  if (version != kVersion)
    throw ModelFormatError("unsupported MLPC version " +
                           std::to_string(version));
  const std::uint32_t n_dims = r.u32();
  if (n_dims < 2 || n_dims > 64)
    throw ModelFormatError("implausible layer count");
  std::vector<int> dims(n_dims);
  for (auto& d : dims) {
    const std::uint32_t v = r.u32();
    if (v < 1 || v > (1u << 24)) throw ModelFormatError("implausible width");
    d = static_cast<int>(v);
  }
  MlpModel m(std::move(dims));
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    std::vector<double> w = r.f64s();
    if (w.size() != m.weights_[l].size())
      throw ModelFormatError("weight block does not match layer dims");
    std::vector<double> b = r.f64s();
    if (b.size() != m.biases_[l].size())
      throw ModelFormatError("bias block does not match layer dims");
    for (double v : w)
      if (!std::isfinite(v)) throw ModelFormatError("non-finite weight");
    for (double v : b)
      if (!std::isfinite(v)) throw ModelFormatError("non-finite bias");
    m.weights_[l] = std::move(w);
    m.biases_[l] = std::move(b);
  }
  r.expect_eof();
  return m;
}

}  // namespace mlp
}  // namespace logsieve
