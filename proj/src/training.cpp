/* Copyright 2026 The kws Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "kws/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kws {
namespace {

constexpr double kProbFloor = 1e-12;

template <typename T>
using Params = std::vector<std::vector<T>>;

template <typename T>
Params<T> ToParams(const WeightSet& w, const std::vector<TensorInfo>& manifest) {
  Params<T> p;
  for (const auto& info : manifest) {
    const auto& v = w.find(info.name)->values;
    p.emplace_back(v.begin(), v.end());
  }
  return p;
}

template <typename T>
Params<T> ZerosLike(const Params<T>& p) {
  Params<T> z;
  for (const auto& v : p) z.emplace_back(v.size(), T(0));
  return z;
}

// Forward/backward over an ArchSpec at precision T, caching every
// intermediate needed for exact gradients.
template <typename T>
class Engine {
 public:
  struct Cache {
    std::vector<std::vector<T>> inputs;  // inputs[i] enters layer i
    std::vector<std::vector<T>> pre;     // conv/dense pre-activation, logits
    std::vector<std::vector<std::uint32_t>> argmax;  // pool routing
    std::vector<T> probs;
  };

  explicit Engine(const ArchSpec& arch)
      : arch_(arch), trace_(validate(arch)), manifest_(weight_manifest(arch)) {
    const auto names = LayerNames(arch);
    for (const auto& name : names) {
      weight_slot_.push_back(Slot(name + ".weight"));
      bias_slot_.push_back(Slot(name + ".bias"));
    }
  }

  const std::vector<TensorInfo>& manifest() const { return manifest_; }
  std::size_t layers() const { return arch_.layers.size(); }

  // Layer owning manifest entry `slot`.
  std::size_t LayerOf(int slot) const {
    for (std::size_t i = 0; i < layers(); ++i) {
      if (weight_slot_[i] == slot || bias_slot_[i] == slot) return i;
    }
    return 0;
  }

  Cache NewCache(const FeatureWindow& x) const {
    Cache c;
    c.inputs.resize(layers());
    c.pre.resize(layers());
    c.argmax.resize(layers());
    c.inputs[0].assign(x.data.begin(), x.data.end());
    return c;
  }

  // Runs layers [from, end); c.inputs[from] must be populated.
  void Run(const Params<T>& p, Cache& c, std::size_t from) const {
    for (std::size_t i = from; i < layers(); ++i) {
      std::vector<T> out = Layer(p, c, i);
      if (i + 1 < layers()) {
        c.inputs[i + 1] = std::move(out);
      } else {
        c.probs = std::move(out);
      }
    }
  }

  T Loss(const Cache& c, int label) const {
    return -std::log(std::max(c.probs[label], static_cast<T>(kProbFloor)));
  }

  // Activation pattern of layers >= from: ReLU masks and pooling argmax.
  std::vector<std::uint32_t> Pattern(const Cache& c, std::size_t from) const {
    std::vector<std::uint32_t> out;
    for (std::size_t i = from; i < layers(); ++i) {
      if (std::holds_alternative<ConvLayer>(arch_.layers[i]) ||
          std::holds_alternative<DenseLayer>(arch_.layers[i])) {
        for (T v : c.pre[i]) out.push_back(v > T(0));
      }
      out.insert(out.end(), c.argmax[i].begin(), c.argmax[i].end());
    }
    return out;
  }

  // Adds d loss / d params for one example into `grads`.
  void Backprop(const Params<T>& p, const Cache& c, int label, Params<T>& grads) const {
    std::vector<T> g(c.probs.begin(), c.probs.end());
    g[label] -= T(1);  // softmax + cross-entropy
    for (std::size_t i = layers(); i-- > 0;) {
      g = LayerBackward(p, c, i, std::move(g), grads, /*need_input_grad=*/i > 0);
    }
  }

 private:
  int Slot(const std::string& name) const {
    for (std::size_t s = 0; s < manifest_.size(); ++s) {
      if (manifest_[s].name == name) return static_cast<int>(s);
    }
    return -1;
  }

  std::vector<T> Layer(const Params<T>& p, Cache& c, std::size_t i) const {
    const std::vector<T>& x = c.inputs[i];
    const LayerSpec& layer = arch_.layers[i];
    c.argmax[i].clear();
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      return ConvForward(*conv, p[weight_slot_[i]], p[bias_slot_[i]], i, c);
    }
    if (std::holds_alternative<FlattenLayer>(layer)) return x;
    const std::vector<T>& w = p[weight_slot_[i]];
    const int out = static_cast<int>(trace_.layer_outputs[i].size());
    const std::size_t in = x.size();
    std::vector<T>& pre = c.pre[i];
    pre.assign(out, T(0));
    for (int o = 0; o < out; ++o) {
      const T* row = w.data() + static_cast<std::size_t>(o) * in;
      T acc = bias_slot_[i] >= 0 ? p[bias_slot_[i]][o] : T(0);
      for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
      pre[o] = acc;
    }
    if (std::holds_alternative<DenseLayer>(layer)) {
      std::vector<T> y(pre);
      for (T& v : y) v = v > T(0) ? v : T(0);
      return y;
    }
    if (std::holds_alternative<SoftmaxLayer>(layer)) {
      const T peak = *std::max_element(pre.begin(), pre.end());
      std::vector<T> y(out);
      T total = 0;
      for (int o = 0; o < out; ++o) total += y[o] = std::exp(pre[o] - peak);
      for (T& v : y) v /= total;
      return y;
    }
    return pre;  // low-rank
  }

  std::vector<T> ConvForward(const ConvLayer& conv, const std::vector<T>& w,
                             const std::vector<T>& b, std::size_t i, Cache& c) const {
    const Dims3 in = trace_.layer_inputs[i].dims;
    const int ot = ConvExtent(in.time, conv.m, conv.stride.s);
    const int of = ConvExtent(in.freq, conv.r, conv.stride.v);
    const int n = conv.n;
    const int ci = in.channels;
    const std::vector<T>& x = c.inputs[i];
    std::vector<T>& pre = c.pre[i];
    pre.assign(static_cast<std::size_t>(ot) * of * n, T(0));
    for (int t = 0; t < ot; ++t) {
      for (int f = 0; f < of; ++f) {
        T* acc = pre.data() + (static_cast<std::size_t>(t) * of + f) * n;
        std::copy(b.begin(), b.end(), acc);
        for (int a = 0; a < conv.m; ++a) {
          for (int bb = 0; bb < conv.r; ++bb) {
            const T* px = x.data() + ((static_cast<std::size_t>(t) * conv.stride.s + a) * in.freq +
                                      f * conv.stride.v + bb) * ci;
            const T* pw = w.data() + ((static_cast<std::size_t>(a) * conv.r + bb) * ci) * n;
            for (int ch = 0; ch < ci; ++ch) {
              const T xv = px[ch];
              const T* wk = pw + static_cast<std::size_t>(ch) * n;
              for (int k = 0; k < n; ++k) acc[k] += xv * wk[k];
            }
          }
        }
      }
    }
    std::vector<T> post(pre);
    for (T& v : post) v = v > T(0) ? v : T(0);
    if (conv.pool.p == 1 && conv.pool.q == 1) return post;

    const int pt = ot / conv.pool.p;
    const int pf = of / conv.pool.q;
    std::vector<T> pooled(static_cast<std::size_t>(pt) * pf * n);
    auto& arg = c.argmax[i];
    arg.assign(pooled.size(), 0);
    for (int t = 0; t < pt; ++t) {
      for (int f = 0; f < pf; ++f) {
        for (int k = 0; k < n; ++k) {
          std::size_t best = (static_cast<std::size_t>(t) * conv.pool.p * of +
                              f * conv.pool.q) * n + k;
          for (int a = 0; a < conv.pool.p; ++a) {
            for (int bb = 0; bb < conv.pool.q; ++bb) {
              const std::size_t idx = ((static_cast<std::size_t>(t) * conv.pool.p + a) * of +
                                       f * conv.pool.q + bb) * n + k;
              if (post[idx] > post[best]) best = idx;
            }
          }
          const std::size_t o = (static_cast<std::size_t>(t) * pf + f) * n + k;
          pooled[o] = post[best];
          arg[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
    return pooled;
  }

  std::vector<T> LayerBackward(const Params<T>& p, const Cache& c, std::size_t i,
                               std::vector<T> g, Params<T>& grads,
                               bool need_input_grad) const {
    const LayerSpec& layer = arch_.layers[i];
    const std::vector<T>& x = c.inputs[i];
    if (std::holds_alternative<FlattenLayer>(layer)) return g;
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      return ConvBackward(*conv, p, c, i, g, grads, need_input_grad);
    }
    if (std::holds_alternative<DenseLayer>(layer)) {
      const auto& pre = c.pre[i];
      for (std::size_t o = 0; o < g.size(); ++o) {
        if (!(pre[o] > T(0))) g[o] = T(0);
      }
    }
    const std::vector<T>& w = p[weight_slot_[i]];
    std::vector<T>& dw = grads[weight_slot_[i]];
    const std::size_t in = x.size();
    std::vector<T> dx(need_input_grad ? in : 0, T(0));
    for (std::size_t o = 0; o < g.size(); ++o) {
      const T go = g[o];
      if (go == T(0)) continue;
      T* drow = dw.data() + o * in;
      const T* row = w.data() + o * in;
      for (std::size_t j = 0; j < in; ++j) drow[j] += go * x[j];
      if (need_input_grad) {
        for (std::size_t j = 0; j < in; ++j) dx[j] += row[j] * go;
      }
    }
    if (bias_slot_[i] >= 0) {
      auto& db = grads[bias_slot_[i]];
      for (std::size_t o = 0; o < g.size(); ++o) db[o] += g[o];
    }
    return dx;
  }

  std::vector<T> ConvBackward(const ConvLayer& conv, const Params<T>& p, const Cache& c,
                              std::size_t i, const std::vector<T>& g_out,
                              Params<T>& grads, bool need_input_grad) const {
    const Dims3 in = trace_.layer_inputs[i].dims;
    const int ot = ConvExtent(in.time, conv.m, conv.stride.s);
    const int of = ConvExtent(in.freq, conv.r, conv.stride.v);
    const int n = conv.n;
    const int ci = in.channels;
    const auto& pre = c.pre[i];
    const auto& x = c.inputs[i];

    std::vector<T> gp;
    if (c.argmax[i].empty()) {
      gp = g_out;
    } else {
      gp.assign(pre.size(), T(0));
      for (std::size_t o = 0; o < g_out.size(); ++o) gp[c.argmax[i][o]] += g_out[o];
    }
    for (std::size_t j = 0; j < gp.size(); ++j) {
      if (!(pre[j] > T(0))) gp[j] = T(0);
    }

    const auto& w = p[weight_slot_[i]];
    auto& dw = grads[weight_slot_[i]];
    auto& db = grads[bias_slot_[i]];
    std::vector<T> dx(need_input_grad ? x.size() : 0, T(0));
    for (int t = 0; t < ot; ++t) {
      for (int f = 0; f < of; ++f) {
        const T* g = gp.data() + (static_cast<std::size_t>(t) * of + f) * n;
        if (std::all_of(g, g + n, [](T v) { return v == T(0); })) continue;
        for (int k = 0; k < n; ++k) db[k] += g[k];
        for (int a = 0; a < conv.m; ++a) {
          for (int bb = 0; bb < conv.r; ++bb) {
            const std::size_t xoff = ((static_cast<std::size_t>(t) * conv.stride.s + a) * in.freq +
                                      f * conv.stride.v + bb) * ci;
            const std::size_t woff = ((static_cast<std::size_t>(a) * conv.r + bb) * ci) * n;
            for (int ch = 0; ch < ci; ++ch) {
              const T xv = x[xoff + ch];
              T* dwk = dw.data() + woff + static_cast<std::size_t>(ch) * n;
              for (int k = 0; k < n; ++k) dwk[k] += xv * g[k];
              if (need_input_grad) {
                const T* wk = w.data() + woff + static_cast<std::size_t>(ch) * n;
                T s = 0;
                for (int k = 0; k < n; ++k) s += wk[k] * g[k];
                dx[xoff + ch] += s;
              }
            }
          }
        }
      }
    }
    return dx;
  }

  const ArchSpec& arch_;
  ShapeTrace trace_;
  std::vector<TensorInfo> manifest_;
  std::vector<int> weight_slot_;
  std::vector<int> bias_slot_;
};

void CheckExample(const ArchSpec& arch, const LabeledExample& e) {
  if (e.label < 0 || e.label >= arch.labels()) {
    throw Error(ErrorKind::kInvalidArgument,
                "label " + std::to_string(e.label) + " out of range for " +
                    std::to_string(arch.labels()) + " classes");
  }
  if (e.window.t != arch.input_t || e.window.f != arch.input_f) {
    throw Error(ErrorKind::kShape, "example window does not match " + arch.name + " input");
  }
}

int Argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * 3.14159265358979323846 * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void TrainConfig::check() const {
  if (!(learning_rate >= 0.0f) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  if (epochs < 1) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  if (!(init_scale > 0.0f)) throw Error(ErrorKind::kInvalidArgument, "init scale must be > 0");
}

WeightSet init_weights(const ArchSpec& arch, float scale, std::uint64_t seed) {
  WeightSet w = zero_weights(arch);
  Rng rng(seed);
  for (auto& t : w.tensors) {
    for (float& v : t.values) v = static_cast<float>(rng.uniform(-scale, scale));
  }
  return w;
}

double cross_entropy(std::span<const float> posterior, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= posterior.size()) {
    throw Error(ErrorKind::kInvalidArgument, "label " + std::to_string(label) +
                                                 " out of range for posterior of size " +
                                                 std::to_string(posterior.size()));
  }
  return -std::log(std::max(static_cast<double>(posterior[label]), kProbFloor));
}

const std::vector<double>* Gradients::find(const std::string& name) const {
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (manifest[i].name == name) return &values[i];
  }
  return nullptr;
}

Gradients backward(const ArchSpec& arch, const WeightSet& weights,
                   std::span<const LabeledExample> batch) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidArgument, "empty batch");
  check_weights(arch, weights);
  Engine<double> engine(arch);
  const auto params = ToParams<double>(weights, engine.manifest());
  auto grads = ZerosLike(params);
  double loss = 0.0;
  for (const auto& e : batch) {
    CheckExample(arch, e);
    auto cache = engine.NewCache(e.window);
    engine.Run(params, cache, 0);
    loss += engine.Loss(cache, e.label);
    engine.Backprop(params, cache, e.label, grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grads) {
    for (double& v : g) v *= inv;
  }
  return {engine.manifest(), std::move(grads), loss * inv};
}

Tensor3 maxpool_backward(const Tensor3& input, const PoolPair& pool,
                         const Tensor3& grad_out) {
  const Tensor3 pooled = maxpool(input, pool);
  if (grad_out.dims() != pooled.dims()) {
    throw Error(ErrorKind::kShape, "pooled gradient has dims " + grad_out.dims().str() +
                                       ", expected " + pooled.dims().str());
  }
  Tensor3 grad_in(input.dims());
  const Dims3& od = pooled.dims();
  for (int t = 0; t < od.time; ++t) {
    for (int f = 0; f < od.freq; ++f) {
      for (int c = 0; c < od.channels; ++c) {
        int bt = t * pool.p;
        int bf = f * pool.q;
        for (int a = 0; a < pool.p; ++a) {
          for (int b = 0; b < pool.q; ++b) {
            if (input.at(t * pool.p + a, f * pool.q + b, c) > input.at(bt, bf, c)) {
              bt = t * pool.p + a;
              bf = f * pool.q + b;
            }
          }
        }
        grad_in.at(bt, bf, c) += grad_out.at(t, f, c);
      }
    }
  }
  return grad_in;
}

GradCheckResult grad_check(const ArchSpec& arch, const WeightSet& weights,
                           const LabeledExample& example, GradCheckOptions opts) {
  check_weights(arch, weights);
  CheckExample(arch, example);
  Engine<double> engine(arch);
  auto params = ToParams<double>(weights, engine.manifest());
  auto analytic = ZerosLike(params);
  auto base = engine.NewCache(example.window);
  engine.Run(params, base, 0);
  engine.Backprop(params, base, example.label, analytic);

  Rng rng(opts.seed);
  GradCheckResult result;
  const auto& manifest = engine.manifest();
  for (std::size_t slot = 0; slot < manifest.size(); ++slot) {
    const std::size_t layer = engine.LayerOf(static_cast<int>(slot));
    const auto base_pattern = engine.Pattern(base, layer);
    const std::size_t size = params[slot].size();

    // Candidate coordinates in draw order; exhaustive for small tensors.
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = size; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    const std::size_t wanted =
        std::min<std::size_t>(size, static_cast<std::size_t>(opts.samples_per_tensor));

    std::size_t checked = 0;
    for (std::size_t idx : order) {
      if (checked == wanted) break;
      double& w = params[slot][idx];
      const double saved = w;
      auto probe = base;
      w = saved + opts.epsilon;
      engine.Run(params, probe, layer);
      const double up = engine.Loss(probe, example.label);
      const bool up_same = engine.Pattern(probe, layer) == base_pattern;
      w = saved - opts.epsilon;
      engine.Run(params, probe, layer);
      const double down = engine.Loss(probe, example.label);
      const bool down_same = engine.Pattern(probe, layer) == base_pattern;
      w = saved;
      if (!up_same || !down_same) {
        ++result.redrawn;
        continue;
      }
      const double numeric = (up - down) / (2.0 * opts.epsilon);
      const double a = analytic[slot][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = manifest[slot].name;
      }
      ++checked;
    }
    result.coordinates += checked;
  }
  return result;
}

TrainResult train_from(const ArchSpec& arch, WeightSet weights,
                       const std::vector<LabeledExample>& data, const TrainConfig& cfg) {
  cfg.check();
  if (data.empty()) throw Error(ErrorKind::kData, "empty training set");
  check_weights(arch, weights);
  for (const auto& e : data) CheckExample(arch, e);

  Engine<double> engine(arch);
  auto params = ToParams<double>(weights, engine.manifest());
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[shuffle_rng.below(k)]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto grads = ZerosLike(params);
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = data[order[b]];
        auto cache = engine.NewCache(e.window);
        engine.Run(params, cache, 0);
        loss_sum += engine.Loss(cache, e.label);
        correct += Argmax(cache.probs) == e.label;
        engine.Backprop(params, cache, e.label, grads);
      }
      const double step = static_cast<double>(cfg.learning_rate) / static_cast<double>(end - start);
      for (std::size_t s = 0; s < params.size(); ++s) {
        for (std::size_t j = 0; j < params[s].size(); ++j) params[s][j] -= step * grads[s][j];
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      throw Error(ErrorKind::kNumeric, "training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(
        {epoch, mean_loss, static_cast<double>(correct) / static_cast<double>(data.size())});
  }

  for (std::size_t s = 0; s < params.size(); ++s) {
    auto& values = weights.tensors[s].values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      values[j] = static_cast<float>(params[s][j]);
    }
    if (!all_finite(values)) {
      throw Error(ErrorKind::kNumeric, "non-finite weights in " + weights.tensors[s].name);
    }
  }
  result.weights = std::move(weights);
  return result;
}

TrainResult train(const ArchSpec& arch, const std::vector<LabeledExample>& data,
                  const TrainConfig& cfg) {
  cfg.check();
  return train_from(arch, init_weights(arch, cfg.init_scale, cfg.seed), data, cfg);
}

int predict(const ArchSpec& arch, const WeightSet& weights, const FeatureWindow& x) {
  const auto p = forward(arch, weights, x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double accuracy(const ArchSpec& arch, const WeightSet& weights,
                const std::vector<LabeledExample>& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& e : data) correct += predict(arch, weights, e.window) == e.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace kws
