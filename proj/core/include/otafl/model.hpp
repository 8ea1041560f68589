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
//
// The learned model and its local training loop.
//
// Architecture: a fully-connected network with tanh hidden activations
// and a linear output layer trained with softmax cross-entropy.  All
// parameters (weights, then biases, layer by layer) live in one flat
// double vector so that model deltas are ordinary vectors for the
// channel/power-control stages.
//
// Local training solves, for anchor point w_g and proximal weight mu,
//
//   min_w  F_i(w) + (mu/2) ||w - w_g||^2
//
// by mini-batch SGD with momentum, applying the proximal term through a
// forward-backward (resolvent) step
//
//   w <- w_g + (w - lr*v - w_g) / (1 + lr*mu),
//
// which is exactly plain SGD at mu = 0 and remains stable for arbitrarily
// large mu (the iterate contracts onto the anchor instead of diverging).

#ifndef OTAFL_MODEL_HPP_
#define OTAFL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "otafl/data.hpp"

namespace otafl {

enum class Algorithm { kFedAvg, kFedProx, kUpcycled };

struct LayerShape {
  std::size_t rows = 0;  // fan-in
  std::size_t cols = 0;  // fan-out
};

// Flat parameter vector plus its layer structure.  Layout: all weight
// matrices (row-major) in layer order, then all bias vectors in layer
// order (biases present only when with_bias).
struct ModelParams {
  std::vector<double> values;
  std::vector<LayerShape> shapes;
  bool with_bias = true;

  std::size_t dim() const { return values.size(); }
  std::size_t layers() const { return shapes.size(); }
  std::size_t input_dim() const { return shapes.front().rows; }
  std::size_t output_dim() const { return shapes.back().cols; }

  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
};

// Hyper-parameters of one local solve.
struct LocalHyper {
  double lr = 0.05;
  double momentum = 0.5;
  int local_epochs = 5;
  std::size_t batch_size = 32;
  double mu = 0.0;   // proximal weight; must be 0 for FedAvg, > 0 otherwise
  double tau = 1.0;  // clipping bound on the model delta
};

// Throws InvalidInputError when the hyper block violates the
// algorithm coupling (FedAvg requires mu == 0, FedProx/Upcycled mu > 0)
// or contains non-positive lr/batch/tau or momentum outside [0, 1).
void validate(const LocalHyper& hyper, Algorithm algorithm);

// Allocates a model for the given layer chain (shapes[k].cols must equal
// shapes[k+1].rows) with weights uniform on [-0.05, 0.05] and zero
// biases.  Deterministic in seed.  Throws InvalidInputError on an empty
// or inconsistent chain or zero dimensions.
ModelParams init_model(std::span<const LayerShape> shapes, bool with_bias,
                       std::uint64_t seed);

// Mean softmax cross-entropy of the model over the given batch (row
// indices into data).  Batch must be nonempty and data.feat_dim must
// match the input layer.
double forward_loss(const ModelParams& m, const Dataset& data,
                    std::span<const std::size_t> batch);

// Full-dataset convenience overload.
double forward_loss(const ModelParams& m, const Dataset& data);

// Gradient of [batch loss + (mu/2)||w - anchor||^2] at m.  anchor may be
// the model itself for a plain gradient.
std::vector<double> grad(const ModelParams& m, const Dataset& data,
                         std::span<const std::size_t> batch, double mu,
                         const ModelParams& anchor);

// Plain data-loss gradient over the full dataset.
std::vector<double> grad(const ModelParams& m, const Dataset& data);

// Fraction of rows whose argmax logit equals the label.
double accuracy(const ModelParams& m, const Dataset& data);

// Runs the local solve described above from the broadcast model `global`
// on `client`'s training data and returns the resulting local model.
// FedAvg uses mu = 0; FedProx and Upcycled use hyper.mu with `global` as
// the proximal anchor.  The mini-batch order is drawn from a stream keyed
// by (seed, client.id, round), so the result is reproducible regardless
// of scheduling.
ModelParams local_solve(const ModelParams& global, const ClientRecord& client,
                        const LocalHyper& hyper, Algorithm algorithm,
                        std::uint64_t seed, std::int64_t round);

// Projects `delta` onto the L2 ball of radius tau:
// delta * min(1, tau/||delta||).  Idempotent; a second application
// returns its input bitwise.  tau must be positive and delta finite.
std::vector<double> clip_update(std::vector<double> delta, double tau);

// Throws InvariantViolationError unless every parameter is finite.
void require_finite(const ModelParams& m, const char* where);

}  // namespace otafl

#endif  // OTAFL_MODEL_HPP_
