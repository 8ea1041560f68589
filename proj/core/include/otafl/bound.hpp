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
// Convergence-bound evaluator.
//
// For L-smooth, B-dissimilar local objectives satisfying a rho-strong
// convexity-style growth condition, the mean optimality gap after M
// transmissions obeys
//
//   (1/M) sum_m E[f(w^{2m-2}) - f*]
//     <= (f(w^0) - f*) / (M C1) + C6 / C1
//        + (1 / (M C1)) * sum_m (C2,m + C3,m + C4,m + C5,m),
//
// with per-round constants (q bounds the iterate gap, G the gradient
// norm, kappa_i the client-drift proxy, d the model dimension):
//
//   C1   = 1/(2 mu) - L B / (mu rho^2)
//   C2,m = mu/(mu+lambda_m) * (1 + 2 L B (L + rho) / (mu rho^2)) * q G
//   C3,m = (mu/(mu+lambda_m))^2 * L * (1 + (L + rho)^2 / (mu rho^2)) * q^2
//   C4,m = E_i[ (2 mu (tau s_i - 1)^2 + (2L - mu) mu)
//               / (2 mu^2 (tau s_i)^2) * (kappa_i + G)^2 ]
//   C5,m = (L d / 2) * (|h_cj| alpha_cj / alpha_u)^2
//   C6   = L sigma_c^2 d / (2 alpha_u^2)
//
// C1 <= 0 means the premises do not cover the configuration; the
// evaluator reports that instead of producing a number.

#ifndef OTAFL_BOUND_HPP_
#define OTAFL_BOUND_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "otafl/data.hpp"
#include "otafl/fl_protocol.hpp"
#include "otafl/model.hpp"

namespace otafl {

// Problem-level constants entering the bound.  Per-round quantities
// (s_i, lambda_m, alpha_u, jammer amplitude) are supplied per round.
struct BoundProblem {
  double smoothness = 0.0;          // L
  double dissimilarity = 0.0;       // B
  double growth = 0.0;              // rho
  double iterate_gap = 0.0;         // q
  double grad_bound = 0.0;          // G
  double mu = 0.0;
  double tau = 0.0;
  double sigma_c = 0.0;
  std::size_t dim = 0;              // d
  std::vector<double> kappa;        // kappa_i, one per client
  std::vector<double> weights;      // p_i, one per client
};

struct RoundTerms {
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
};

struct BoundReport {
  bool applicable = false;  // false iff C1 <= 0
  double value = 0.0;       // NaN when not applicable
  double c1 = 0.0;
  double c6 = 0.0;
  std::vector<RoundTerms> rounds;
};

double eval_c1(const BoundProblem& p);
double eval_c6(const BoundProblem& p, double alpha_u);

// Constants of transmission m.  s_by_client are that round's back-off
// factors; (h_cj, alpha_cj) the jammer realization (0, 0 when silent).
RoundTerms eval_constants(const BoundProblem& p, double lambda_m,
                          std::span<const double> s_by_client, double alpha_u,
                          double h_cj, double alpha_cj);

// Full right-hand side over M rounds.  alpha_u_by_round, s/jammer
// histories must each have M entries; f0_minus_fstar >= 0.  C6 is
// evaluated at the smallest alpha_u seen (the conservative choice when
// the scale varies round to round).
BoundReport eval_bound(const BoundProblem& p, const LambdaSchedule& lambda,
                       double f0_minus_fstar,
                       std::span<const std::vector<double>> s_history,
                       std::span<const double> alpha_u_history,
                       std::span<const std::pair<double, double>> jammer_history);

// Empirical helpers for filling BoundProblem from a concrete run.

// max_i ||grad F_i(w) - grad f(w)|| at the given model.
std::vector<double> estimate_kappa(const std::vector<ClientRecord>& clients,
                                   const ModelParams& model);

// Crude smoothness probe: max over sampled pairs near `model` of
// ||grad f(w1) - grad f(w2)|| / ||w1 - w2||.
double estimate_smoothness(const std::vector<ClientRecord>& clients,
                           const ModelParams& model, int probes,
                           std::uint64_t seed);

}  // namespace otafl

#endif  // OTAFL_BOUND_HPP_
