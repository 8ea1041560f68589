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
// Moments-accountant privacy ledger.
//
// Each uplink transmission m contributes Gaussian noise with effective
// (receive-side, post-scaling) variance sigma_m^2 while client i's update
// enters with sensitivity 1 / (|D| s_{i,m}) per sample.  Accumulating the
// log-moment terms over M transmissions and optimizing the moment order
// yields, for accumulated sum S_i = sum_m 1 / (s_{i,m}^2 sigma_m^2),
//
//   eps_i = 2 * sqrt( S_i / (2 |D|^2) * ln(1/delta) ) + S_i / (2 |D|^2).
//
// The across-clients upper bound replaces S_i by
// S_bar = sum_m 1 / sigma_m^2 (i.e. s = 1, the worst case, since
// s_{i,m} >= 1).  Iterations that transmit nothing add nothing.

#ifndef OTAFL_PRIVACY_HPP_
#define OTAFL_PRIVACY_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace otafl {

// Effective per-coordinate noise variance seen by the aggregate after the
// server's 1/alpha_u scaling.
struct EffectiveNoise {
  double sigma_sq = 0.0;

  // jammer_var is the receive-side jammer variance
  // (alpha_cj * |h_cj| / alpha_u)^2; channel noise contributes
  // sigma_c^2 / alpha_u^2.
  static EffectiveNoise from_parts(double jammer_var, double sigma_c,
                                   double alpha_u);
};

// Closed-form epsilon for an accumulated moment sum.
double epsilon_from_sum(double accumulated_sum, std::int64_t data_total,
                        double delta);

class PrivacyLedger {
 public:
  // delta in (0, 1), data_total >= 1, num_clients >= 1.
  PrivacyLedger(double delta, std::int64_t data_total,
                std::size_t num_clients);

  // Absorbs one uplink transmission: sigma_sq must be positive (a zero
  // variance makes epsilon diverge -> DegeneratePrivacyError) and every
  // s_i >= 1.  s_by_client.size() must equal num_clients.
  void record_round(const EffectiveNoise& noise,
                    std::span<const double> s_by_client);

  // Marks the run as having released an unnoised aggregate; every epsilon
  // query returns +infinity afterwards.
  void mark_degenerate() { degenerate_ = true; }
  bool degenerate() const { return degenerate_; }

  double epsilon_for_client(std::size_t client) const;

  // Worst-case epsilon over clients (s = 1 in every round); an upper
  // bound on epsilon_for_client for every client.
  double epsilon_upper_bound() const;

  double delta() const { return delta_; }
  std::int64_t data_total() const { return data_total_; }
  std::size_t num_clients() const { return client_sums_.size(); }
  int rounds_counted() const { return rounds_counted_; }

  // Accumulated moment sums (exposed for replay verification).
  double client_sum(std::size_t client) const { return client_sums_.at(client); }
  double bound_sum() const { return bound_sum_; }

 private:
  double delta_;
  std::int64_t data_total_;
  std::vector<double> client_sums_;  // S_i
  double bound_sum_ = 0.0;           // S_bar
  int rounds_counted_ = 0;
  bool degenerate_ = false;
};

}  // namespace otafl

#endif  // OTAFL_PRIVACY_HPP_
