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

#include "otafl/channel.hpp"

#include <cmath>

#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/rng.hpp"

namespace otafl {

ChannelDraw draw_channels(std::size_t k, std::int64_t round,
                          std::uint64_t seed, double sigma_c) {
  if (k == 0) throw InvalidInputError("need at least one client channel");
  if (!(sigma_c >= 0.0)) throw InvalidInputError("sigma_c must be non-negative");
  ChannelDraw draw;
  draw.round = round;
  draw.sigma_c = sigma_c;
  draw.gains.resize(k);
  StreamRng rng(seed, "channel", static_cast<std::uint64_t>(round));
  for (double& g : draw.gains) g = rng.rayleigh_unit_power();
  draw.jammer_gain = rng.rayleigh_unit_power();
  return draw;
}

std::vector<double> ota_aggregate(
    const std::vector<std::vector<double>>& signals, const ChannelDraw& draw,
    const std::vector<double>* jammer_signal, std::uint64_t noise_seed) {
  if (signals.empty()) throw InvalidInputError("no transmit signals");
  if (signals.size() != draw.gains.size())
    throw InvalidInputError("signal count does not match channel draw");
  const std::size_t dim = signals.front().size();
  if (dim == 0) throw InvalidInputError("empty transmit signal");
  for (const auto& x : signals)
    if (x.size() != dim)
      throw InvalidInputError("transmit signals have mismatched dimensions");
  if (jammer_signal && jammer_signal->size() != dim)
    throw InvalidInputError("jammer signal dimension mismatch");

  std::vector<double> y(dim, 0.0);
  for (std::size_t i = 0; i < signals.size(); ++i)
    axpy(draw.gains[i], signals[i], y);
  if (jammer_signal) axpy(draw.jammer_gain, *jammer_signal, y);
  if (draw.sigma_c > 0.0) {
    StreamRng rng(noise_seed, "awgn", static_cast<std::uint64_t>(draw.round));
    for (double& v : y) v += draw.sigma_c * rng.normal();
  }
  return y;
}

bool check_power(std::span<const double> x, double power_cap) {
  if (!(power_cap > 0.0)) throw InvalidInputError("power cap must be positive");
  return squared_norm(x) <= power_cap * (1.0 + 1e-9);
}

}  // namespace otafl
