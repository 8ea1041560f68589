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

#include "otafl/privacy.hpp"

#include <cmath>
#include <limits>

#include "otafl/errors.hpp"

namespace otafl {

EffectiveNoise EffectiveNoise::from_parts(double jammer_var, double sigma_c,
                                          double alpha_u) {
  if (!(jammer_var >= 0.0))
    throw InvalidInputError("jammer variance must be non-negative");
  if (!(sigma_c >= 0.0)) throw InvalidInputError("sigma_c must be non-negative");
  if (!(alpha_u > 0.0)) throw InvalidInputError("alpha_u must be positive");
  return {jammer_var + (sigma_c / alpha_u) * (sigma_c / alpha_u)};
}

double epsilon_from_sum(double accumulated_sum, std::int64_t data_total,
                        double delta) {
  if (!(accumulated_sum >= 0.0))
    throw InvalidInputError("accumulated sum must be non-negative");
  if (data_total < 1) throw InvalidInputError("data_total must be at least 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("delta must lie in (0, 1)");
  if (accumulated_sum == 0.0) return 0.0;
  const double d = static_cast<double>(data_total);
  const double r = accumulated_sum / (2.0 * d * d);
  const double ln1d = -std::log(delta);
  return 2.0 * std::sqrt(r * ln1d) + r;
}

PrivacyLedger::PrivacyLedger(double delta, std::int64_t data_total,
                             std::size_t num_clients)
    : delta_(delta), data_total_(data_total), client_sums_(num_clients, 0.0) {
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("delta must lie in (0, 1)");
  if (data_total < 1) throw InvalidInputError("data_total must be at least 1");
  if (num_clients == 0) throw InvalidInputError("need at least one client");
}

void PrivacyLedger::record_round(const EffectiveNoise& noise,
                                 std::span<const double> s_by_client) {
  if (!(noise.sigma_sq > 0.0))
    throw DegeneratePrivacyError(
        "effective noise variance is zero; epsilon diverges");
  if (s_by_client.size() != client_sums_.size())
    throw InvalidInputError("s_by_client size does not match client count");
  for (double s : s_by_client)
    if (!(s >= 1.0)) throw InvalidInputError("every s_i must be at least 1");

  for (std::size_t i = 0; i < client_sums_.size(); ++i)
    client_sums_[i] += 1.0 / (s_by_client[i] * s_by_client[i] * noise.sigma_sq);
  bound_sum_ += 1.0 / noise.sigma_sq;
  ++rounds_counted_;
}

double PrivacyLedger::epsilon_for_client(std::size_t client) const {
  if (client >= client_sums_.size())
    throw InvalidInputError("unknown client index");
  if (degenerate_) return std::numeric_limits<double>::infinity();
  return epsilon_from_sum(client_sums_[client], data_total_, delta_);
}

double PrivacyLedger::epsilon_upper_bound() const {
  if (degenerate_) return std::numeric_limits<double>::infinity();
  return epsilon_from_sum(bound_sum_, data_total_, delta_);
}

}  // namespace otafl
