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
// The over-the-air multiple-access channel.
//
// Per uplink use, each client i observes a block-fading magnitude |h_i|
// (Rayleigh, E[|h_i|^2] = 1) and transmits an analog vector x_i; the
// server receives the superposition
//
//   y = sum_i |h_i| x_i + |h_cj| x_cj + z,   z ~ N(0, sigma_c^2 I),
//
// i.e. the channel itself performs the weighted sum the aggregation
// needs.  Phase pre-compensation at the transmitters is assumed, so only
// magnitudes appear.

#ifndef OTAFL_CHANNEL_HPP_
#define OTAFL_CHANNEL_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace otafl {

// Fading realization for one uplink transmission.
struct ChannelDraw {
  std::vector<double> gains;   // |h_i|, one per client
  double jammer_gain = 0.0;    // |h_cj|
  double sigma_c = 0.0;        // receiver noise stddev per coordinate
  std::int64_t round = 0;      // transmission index the draw belongs to
};

// Draws |h_1..h_k| and |h_cj| for transmission `round` from the stream
// keyed by (seed, "channel", round).  k must be positive, sigma_c
// non-negative.
ChannelDraw draw_channels(std::size_t k, std::int64_t round,
                          std::uint64_t seed, double sigma_c);

// Receives the superposition of the given transmit signals under `draw`.
// signals[i] is client i's x_i and is scaled by draw.gains[i]; the
// optional jammer signal is scaled by draw.jammer_gain; AWGN with stddev
// draw.sigma_c is added per coordinate from the stream keyed by
// (noise_seed, "awgn", draw.round).  All vectors must share one length.
std::vector<double> ota_aggregate(
    const std::vector<std::vector<double>>& signals, const ChannelDraw& draw,
    const std::vector<double>* jammer_signal, std::uint64_t noise_seed);

// True when ||x||^2 <= power_cap * (1 + 1e-9); the slack keeps exact
// at-the-cap transmissions from tripping on rounding.
bool check_power(std::span<const double> x, double power_cap);

}  // namespace otafl

#endif  // OTAFL_CHANNEL_HPP_
