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
// Transmit power control and cooperative-jammer design.
//
// Client i scales its clipped update by
//
//   alpha_i = alpha_u * p_i / (|h_i| * tau * s_i),
//
// where alpha_u is the common receive-side scale and s_i >= 1 backs the
// client off just enough to respect its power cap P_i: since the clipped
// update has norm at most tau, ||x_i||^2 <= (alpha_u p_i / (|h_i| s_i))^2,
// and s_i = max(1, alpha_u p_i / (|h_i| sqrt(P_i))) makes that at most
// P_i.  After the server divides by alpha_u, client i's update enters the
// aggregate with effective weight p_i / (tau * s_i).
//
// The cooperative jammer transmits N(0, alpha_cj^2 I); its receive-side
// variance (alpha_cj |h_cj| / alpha_u)^2 tops the effective noise up to
// the floor sigma*^2 = M ln(1/delta) / (2 |D|^2 a^2) that makes the
// privacy budget (eps, delta) hold after M transmissions, where a solves
// 2a + a^2/ln(1/delta) = eps.

#ifndef OTAFL_POWER_CONTROL_HPP_
#define OTAFL_POWER_CONTROL_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace otafl {

// Back-off factor s_i = max(1, alpha_u * p_i / (|h_i| * sqrt(power_cap))).
// All inputs must be positive.
double compute_s(double alpha_u, double p_i, double h_mag, double power_cap);

// Transmit scale alpha_i = alpha_u * p_i / (|h_i| * tau * s_i).
double client_pc_factor(double alpha_u, double p_i, double h_mag, double tau,
                        double s_i);

// x_i = alpha_i * delta_clipped.
std::vector<double> build_transmit_signal(double alpha_i,
                                          std::span<const double> delta);

// Solves 2a + a^2 / ln(1/delta) = eps for the positive root
//   a = -ln(1/delta) + sqrt(ln(1/delta)^2 + eps * ln(1/delta)).
// Requires eps > 0 and delta in (0, 1).
double compute_a(double eps, double delta);

// Per-transmission effective-noise floor sigma*^2 required to end M
// transmissions inside (eps, delta):
//   sigma*^2 = rounds * ln(1/delta) / (2 * data_total^2 * a^2).
double required_noise_floor(double eps, double delta, int rounds,
                            std::int64_t data_total);

// True when the channel noise alone, seen at scale alpha_u, is below the
// floor — i.e. a jammer (or a smaller alpha_u) is required to reach the
// privacy target.  `a` is the root from compute_a for the same target.
bool jammer_needed(int rounds, std::int64_t data_total, double a, double delta,
                   double sigma_c, double alpha_u);

// Smallest jammer amplitude whose receive-side variance tops the channel
// noise up to the floor:
//
//   alpha_cj = (alpha_u / |h_cj|) *
//              sqrt(sigma*^2 - sigma_c^2 / alpha_u^2),
//
// clamped to 0 when the channel noise already meets the floor.
double design_jammer(double eps_target, double delta, int rounds,
                     std::int64_t data_total, double alpha_u, double h_cj,
                     double sigma_c);

// Same top-up but against a precomputed floor; design_jammer composes
// required_noise_floor with this, and the trainer reuses it per round.
double jammer_amplitude_for_floor(double noise_floor, double alpha_u,
                                  double h_cj, double sigma_c);

// Channel-adaptive receive scale: alpha_u = tau * min_i(|h_i| sqrt(P_i) / p_i)
// over the current fading draw, which drives every back-off factor to
// s_i = 1 whenever tau <= 1.
double dynamic_alpha_u(std::span<const double> gains,
                       std::span<const double> power_caps,
                       std::span<const double> weights, double tau);

}  // namespace otafl

#endif  // OTAFL_POWER_CONTROL_HPP_
