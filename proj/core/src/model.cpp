// Copyright 2026 The otafl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otafl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/rng.hpp"

namespace otafl {
namespace {

constexpr double kInitScale = 0.05;

void validate_shapes(std::span<const LayerShape> shapes) {
  if (shapes.empty()) throw InvalidInputError("model needs at least one layer");
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (shapes[l].rows == 0 || shapes[l].cols == 0)
      throw InvalidInputError("layer " + std::to_string(l) +
                              " has a zero dimension");
    if (l + 1 < shapes.size() && shapes[l].cols != shapes[l + 1].rows)
      throw InvalidInputError("layer " + std::to_string(l) +
                              " fan-out does not match layer " +
                              std::to_string(l + 1) + " fan-in");
  }
}

void validate_batch(const ModelParams& m, const Dataset& data,
                    std::span<const std::size_t> batch) {
  if (batch.empty()) throw InvalidInputError("batch is empty");
  if (data.feat_dim != m.input_dim())
    throw InvalidInputError("feature dimension does not match model input");
  if (data.classes != m.output_dim())
    throw InvalidInputError("class count does not match model output");
  for (std::size_t i : batch)
    if (i >= data.size()) throw InvalidInputError("batch index out of range");
}

// Per-sample activations; acts[0] is the input row, acts[l] the output of
// layer l-1 (tanh for hidden layers, raw logits for the last).
struct Workspace {
  std::vector<std::vector<double>> acts;
  std::vector<double> probs;
  std::vector<double> dz;
  std::vector<double> dz_prev;

  explicit Workspace(const ModelParams& m) {
    acts.resize(m.layers() + 1);
    acts[0].resize(m.input_dim());
    for (std::size_t l = 0; l < m.layers(); ++l)
      acts[l + 1].resize(m.shapes[l].cols);
    probs.resize(m.output_dim());
    std::size_t widest = m.input_dim();
    for (const auto& s : m.shapes) widest = std::max(widest, s.cols);
    dz.resize(widest);
    dz_prev.resize(widest);
  }
};

void forward_sample(const ModelParams& m, std::span<const double> x,
                    Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const std::size_t layers = m.layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto [rows, cols] = m.shapes[l];
    const double* w = m.values.data() + m.weight_offset(l);
    const double* bias =
        m.with_bias ? m.values.data() + m.bias_offset(l) : nullptr;
    const std::vector<double>& in = ws.acts[l];
    std::vector<double>& out = ws.acts[l + 1];
    for (std::size_t c = 0; c < cols; ++c) out[c] = bias ? bias[c] : 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double a = in[r];
      const double* wrow = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) out[c] += a * wrow[c];
    }
    if (l + 1 < layers)
      for (double& v : out) v = std::tanh(v);
  }
}

// Stable softmax cross-entropy from the logits currently in acts.back();
// fills ws.probs and returns the sample loss.
double softmax_loss(int label, Workspace& ws) {
  const std::vector<double>& z = ws.acts.back();
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    ws.probs[c] = std::exp(z[c] - zmax);
    sum += ws.probs[c];
  }
  for (double& p : ws.probs) p /= sum;
  return std::log(sum) + zmax - z[static_cast<std::size_t>(label)];
}

// Backpropagates the sample whose activations are in ws, accumulating
// into g (same layout as m.values).
void backward_sample(const ModelParams& m, int label, Workspace& ws,
                     std::vector<double>& g) {
  const std::size_t layers = m.layers();
  std::vector<double>& dz = ws.dz;
  const std::size_t out_dim = m.output_dim();
  for (std::size_t c = 0; c < out_dim; ++c) dz[c] = ws.probs[c];
  dz[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t l = layers; l-- > 0;) {
    const auto [rows, cols] = m.shapes[l];
    const double* w = m.values.data() + m.weight_offset(l);
    double* gw = g.data() + m.weight_offset(l);
    const std::vector<double>& in = ws.acts[l];
    for (std::size_t r = 0; r < rows; ++r) {
      const double a = in[r];
      double* grow = gw + r * cols;
      for (std::size_t c = 0; c < cols; ++c) grow[c] += a * dz[c];
    }
    if (m.with_bias) {
      double* gb = g.data() + m.bias_offset(l);
      for (std::size_t c = 0; c < cols; ++c) gb[c] += dz[c];
    }
    if (l == 0) break;
    // d(loss)/d(in) through the weights, then through the tanh.
    std::vector<double>& prev = ws.dz_prev;
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      const double* wrow = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) s += wrow[c] * dz[c];
      prev[r] = s * (1.0 - in[r] * in[r]);
    }
    std::swap(ws.dz, ws.dz_prev);
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

std::size_t ModelParams::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += shapes[l].rows * shapes[l].cols;
  return off;
}

std::size_t ModelParams::bias_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (const auto& s : shapes) off += s.rows * s.cols;
  for (std::size_t l = 0; l < layer; ++l) off += shapes[l].cols;
  return off;
}

void validate(const LocalHyper& hyper, Algorithm algorithm) {
  if (!(hyper.lr > 0.0)) throw InvalidInputError("lr must be positive");
  if (!(hyper.momentum >= 0.0 && hyper.momentum < 1.0))
    throw InvalidInputError("momentum must lie in [0, 1)");
  if (hyper.local_epochs < 0)
    throw InvalidInputError("local_epochs must be non-negative");
  if (hyper.batch_size == 0)
    throw InvalidInputError("batch_size must be positive");
  if (!(hyper.tau > 0.0)) throw InvalidInputError("tau must be positive");
  if (!std::isfinite(hyper.mu) || hyper.mu < 0.0)
    throw InvalidInputError("mu must be finite and non-negative");
  if (algorithm == Algorithm::kFedAvg && hyper.mu != 0.0)
    throw InvalidInputError("FedAvg requires mu = 0");
  if (algorithm != Algorithm::kFedAvg && !(hyper.mu > 0.0))
    throw InvalidInputError("FedProx/Upcycled require mu > 0");
}

ModelParams init_model(std::span<const LayerShape> shapes, bool with_bias,
                       std::uint64_t seed) {
  validate_shapes(shapes);
  ModelParams m;
  m.shapes.assign(shapes.begin(), shapes.end());
  m.with_bias = with_bias;
  std::size_t n_weights = 0;
  std::size_t n_biases = 0;
  for (const auto& s : shapes) {
    n_weights += s.rows * s.cols;
    n_biases += s.cols;
  }
  m.values.assign(n_weights + (with_bias ? n_biases : 0), 0.0);
  StreamRng rng(seed, "model_init");
  for (std::size_t i = 0; i < n_weights; ++i)
    m.values[i] = rng.uniform(-kInitScale, kInitScale);
  return m;
}

double forward_loss(const ModelParams& m, const Dataset& data,
                    std::span<const std::size_t> batch) {
  validate_batch(m, data, batch);
  Workspace ws(m);
  double total = 0.0;
  for (std::size_t i : batch) {
    forward_sample(m, data.row(i), ws);
    total += softmax_loss(data.labels[i], ws);
  }
  return total / static_cast<double>(batch.size());
}

double forward_loss(const ModelParams& m, const Dataset& data) {
  const auto idx = all_indices(data.size());
  return forward_loss(m, data, idx);
}

std::vector<double> grad(const ModelParams& m, const Dataset& data,
                         std::span<const std::size_t> batch, double mu,
                         const ModelParams& anchor) {
  validate_batch(m, data, batch);
  if (mu != 0.0 && anchor.values.size() != m.values.size())
    throw InvalidInputError("anchor dimension does not match model");
  Workspace ws(m);
  std::vector<double> g(m.dim(), 0.0);
  for (std::size_t i : batch) {
    forward_sample(m, data.row(i), ws);
    softmax_loss(data.labels[i], ws);
    backward_sample(m, data.labels[i], ws, g);
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (double& v : g) v *= inv_b;
  if (mu != 0.0)
    for (std::size_t j = 0; j < g.size(); ++j)
      g[j] += mu * (m.values[j] - anchor.values[j]);
  return g;
}

std::vector<double> grad(const ModelParams& m, const Dataset& data) {
  const auto idx = all_indices(data.size());
  return grad(m, data, idx, 0.0, m);
}

double accuracy(const ModelParams& m, const Dataset& data) {
  if (data.empty()) throw InvalidInputError("empty dataset");
  Workspace ws(m);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward_sample(m, data.row(i), ws);
    const auto& z = ws.acts.back();
    const auto arg = static_cast<int>(
        std::max_element(z.begin(), z.end()) - z.begin());
    if (arg == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

ModelParams local_solve(const ModelParams& global, const ClientRecord& client,
                        const LocalHyper& hyper, Algorithm algorithm,
                        std::uint64_t seed, std::int64_t round) {
  if (!(hyper.lr > 0.0)) throw InvalidInputError("lr must be positive");
  if (!(hyper.momentum >= 0.0 && hyper.momentum < 1.0))
    throw InvalidInputError("momentum must lie in [0, 1)");
  if (hyper.batch_size == 0)
    throw InvalidInputError("batch_size must be positive");
  if (!std::isfinite(hyper.mu) || hyper.mu < 0.0)
    throw InvalidInputError("mu must be finite and non-negative");
  if (client.train.empty()) throw InvalidInputError("client has no data");

  const double mu = algorithm == Algorithm::kFedAvg ? 0.0 : hyper.mu;
  const std::size_t n = client.train.size();
  ModelParams w = global;
  std::vector<double> velocity(w.dim(), 0.0);
  std::vector<std::size_t> order = all_indices(n);
  StreamRng rng(seed, "local_solve",
                static_cast<std::uint64_t>(client.id),
                static_cast<std::uint64_t>(round));

  for (int epoch = 0; epoch < hyper.local_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < n; at += hyper.batch_size) {
      const std::size_t take = std::min(hyper.batch_size, n - at);
      const std::span<const std::size_t> batch(order.data() + at, take);
      // Data-loss gradient only; the proximal term is applied via the
      // resolvent step below, which stays stable for any mu.
      const auto g = grad(w, client.train, batch, 0.0, w);
      for (std::size_t j = 0; j < velocity.size(); ++j)
        velocity[j] = hyper.momentum * velocity[j] + g[j];
      if (mu == 0.0) {
        for (std::size_t j = 0; j < w.values.size(); ++j)
          w.values[j] -= hyper.lr * velocity[j];
      } else {
        const double shrink = 1.0 / (1.0 + hyper.lr * mu);
        for (std::size_t j = 0; j < w.values.size(); ++j) {
          const double candidate = w.values[j] - hyper.lr * velocity[j];
          w.values[j] = global.values[j] +
                        shrink * (candidate - global.values[j]);
        }
      }
    }
  }
  require_finite(w, "local_solve");
  return w;
}

std::vector<double> clip_update(std::vector<double> delta, double tau) {
  if (!(tau > 0.0)) throw InvalidInputError("tau must be positive");
  // Long-double accumulation keeps the recomputed norm of an
  // already-clipped vector safely inside the acceptance slack, which is
  // what makes a second application an exact no-op.
  long double sq = 0.0L;
  for (double v : delta) {
    if (!std::isfinite(v)) throw InvalidInputError("update has non-finite entries");
    sq += static_cast<long double>(v) * static_cast<long double>(v);
  }
  const double norm = static_cast<double>(std::sqrt(sq));
  if (norm <= tau * (1.0 + 1e-12)) return delta;
  const double factor = tau / norm;
  for (double& v : delta) v *= factor;
  return delta;
}

void require_finite(const ModelParams& m, const char* where) {
  if (!all_finite(m.values))
    throw InvariantViolationError(std::string("non-finite model parameters after ") +
                                  where);
}

}  // namespace otafl
