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

#include "otafl/power_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otafl/errors.hpp"

namespace otafl {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw InvalidInputError(std::string(name) + " must be positive");
}

void require_privacy_target(double eps, double delta) {
  if (!(eps > 0.0)) throw InvalidInputError("eps must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("delta must lie in (0, 1)");
}

}  // namespace

double compute_s(double alpha_u, double p_i, double h_mag, double power_cap) {
  require_positive(alpha_u, "alpha_u");
  require_positive(p_i, "p_i");
  require_positive(h_mag, "|h_i|");
  require_positive(power_cap, "power cap");
  return std::max(1.0, alpha_u * p_i / (h_mag * std::sqrt(power_cap)));
}

double client_pc_factor(double alpha_u, double p_i, double h_mag, double tau,
                        double s_i) {
  require_positive(alpha_u, "alpha_u");
  require_positive(p_i, "p_i");
  require_positive(h_mag, "|h_i|");
  require_positive(tau, "tau");
  if (!(s_i >= 1.0)) throw InvalidInputError("s_i must be at least 1");
  return alpha_u * p_i / (h_mag * tau * s_i);
}

std::vector<double> build_transmit_signal(double alpha_i,
                                          std::span<const double> delta) {
  require_positive(alpha_i, "alpha_i");
  std::vector<double> x(delta.begin(), delta.end());
  for (double& v : x) v *= alpha_i;
  return x;
}

double compute_a(double eps, double delta) {
  require_privacy_target(eps, delta);
  const double ln1d = -std::log(delta);
  // Positive root of a^2/ln(1/delta) + 2a - eps = 0, written in the
  // cancellation-free form.
  return eps / (1.0 + std::sqrt(1.0 + eps / ln1d));
}

double required_noise_floor(double eps, double delta, int rounds,
                            std::int64_t data_total) {
  require_privacy_target(eps, delta);
  if (rounds < 1) throw InvalidInputError("rounds must be at least 1");
  if (data_total < 1) throw InvalidInputError("data_total must be at least 1");
  const double a = compute_a(eps, delta);
  const double ln1d = -std::log(delta);
  const double d = static_cast<double>(data_total);
  return static_cast<double>(rounds) * ln1d / (2.0 * d * d * a * a);
}

bool jammer_needed(int rounds, std::int64_t data_total, double a, double delta,
                   double sigma_c, double alpha_u) {
  require_positive(a, "a");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("delta must lie in (0, 1)");
  if (rounds < 1) throw InvalidInputError("rounds must be at least 1");
  if (data_total < 1) throw InvalidInputError("data_total must be at least 1");
  if (!(sigma_c >= 0.0)) throw InvalidInputError("sigma_c must be non-negative");
  require_positive(alpha_u, "alpha_u");
  const double ln1d = -std::log(delta);
  const double d = static_cast<double>(data_total);
  const double floor = static_cast<double>(rounds) * ln1d / (2.0 * d * d * a * a);
  const double channel_var =
      std::isinf(alpha_u) ? 0.0 : (sigma_c / alpha_u) * (sigma_c / alpha_u);
  return channel_var < floor;
}

double jammer_amplitude_for_floor(double noise_floor, double alpha_u,
                                  double h_cj, double sigma_c) {
  if (!(noise_floor >= 0.0))
    throw InvalidInputError("noise floor must be non-negative");
  require_positive(alpha_u, "alpha_u");
  require_positive(h_cj, "|h_cj|");
  if (!(sigma_c >= 0.0)) throw InvalidInputError("sigma_c must be non-negative");
  const double channel_var = (sigma_c / alpha_u) * (sigma_c / alpha_u);
  const double radicand = noise_floor - channel_var;
  if (radicand <= 0.0) return 0.0;
  return alpha_u / h_cj * std::sqrt(radicand);
}

double design_jammer(double eps_target, double delta, int rounds,
                     std::int64_t data_total, double alpha_u, double h_cj,
                     double sigma_c) {
  const double floor = required_noise_floor(eps_target, delta, rounds, data_total);
  return jammer_amplitude_for_floor(floor, alpha_u, h_cj, sigma_c);
}

double dynamic_alpha_u(std::span<const double> gains,
                       std::span<const double> power_caps,
                       std::span<const double> weights, double tau) {
  if (gains.empty() || gains.size() != power_caps.size() ||
      gains.size() != weights.size())
    throw InvalidInputError("gains/power_caps/weights must share a nonzero size");
  require_positive(tau, "tau");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    require_positive(gains[i], "|h_i|");
    require_positive(power_caps[i], "power cap");
    require_positive(weights[i], "p_i");
    best = std::min(best, gains[i] * std::sqrt(power_caps[i]) / weights[i]);
  }
  return tau * best;
}

}  // namespace otafl
