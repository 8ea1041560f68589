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

#include "otafl/bound.hpp"

#include <cmath>
#include <limits>

#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/rng.hpp"

namespace otafl {
namespace {

void validate_problem(const BoundProblem& p) {
  if (!(p.smoothness > 0.0)) throw InvalidInputError("smoothness L must be positive");
  if (!(p.dissimilarity >= 0.0))
    throw InvalidInputError("dissimilarity B must be non-negative");
  if (!(p.growth > 0.0)) throw InvalidInputError("growth rho must be positive");
  if (!(p.iterate_gap >= 0.0)) throw InvalidInputError("iterate gap q must be non-negative");
  if (!(p.grad_bound >= 0.0)) throw InvalidInputError("grad bound G must be non-negative");
  if (!(p.mu > 0.0)) throw InvalidInputError("mu must be positive");
  if (!(p.tau > 0.0)) throw InvalidInputError("tau must be positive");
  if (!(p.sigma_c >= 0.0)) throw InvalidInputError("sigma_c must be non-negative");
  if (p.dim == 0) throw InvalidInputError("model dimension must be positive");
  if (p.kappa.size() != p.weights.size() || p.kappa.empty())
    throw InvalidInputError("kappa and weights must share a nonzero size");
}

}  // namespace

double eval_c1(const BoundProblem& p) {
  validate_problem(p);
  return 1.0 / (2.0 * p.mu) -
         p.smoothness * p.dissimilarity / (p.mu * p.growth * p.growth);
}

double eval_c6(const BoundProblem& p, double alpha_u) {
  validate_problem(p);
  if (!(alpha_u > 0.0)) throw InvalidInputError("alpha_u must be positive");
  return p.smoothness * p.sigma_c * p.sigma_c * static_cast<double>(p.dim) /
         (2.0 * alpha_u * alpha_u);
}

RoundTerms eval_constants(const BoundProblem& p, double lambda_m,
                          std::span<const double> s_by_client, double alpha_u,
                          double h_cj, double alpha_cj) {
  validate_problem(p);
  if (!(lambda_m > 0.0)) throw InvalidInputError("lambda must be positive");
  if (s_by_client.size() != p.weights.size())
    throw InvalidInputError("s_by_client size does not match weights");
  if (!(alpha_u > 0.0)) throw InvalidInputError("alpha_u must be positive");
  if (!(h_cj >= 0.0) || !(alpha_cj >= 0.0))
    throw InvalidInputError("jammer realization must be non-negative");

  const double L = p.smoothness;
  const double B = p.dissimilarity;
  const double rho = p.growth;
  const double mu = p.mu;
  const double coef = mu / (mu + lambda_m);

  RoundTerms t;
  t.c2 = coef * (1.0 + 2.0 * L * B * (L + rho) / (mu * rho * rho)) *
         p.iterate_gap * p.grad_bound;
  t.c3 = coef * coef * L *
         (1.0 + (L + rho) * (L + rho) / (mu * rho * rho)) * p.iterate_gap *
         p.iterate_gap;
  double c4 = 0.0;
  for (std::size_t i = 0; i < s_by_client.size(); ++i) {
    const double s = s_by_client[i];
    if (!(s >= 1.0)) throw InvalidInputError("every s_i must be at least 1");
    const double ts = p.tau * s;
    const double drift = p.kappa[i] + p.grad_bound;
    const double num = 2.0 * mu * (ts - 1.0) * (ts - 1.0) + (2.0 * L - mu) * mu;
    c4 += p.weights[i] * num / (2.0 * mu * mu * ts * ts) * drift * drift;
  }
  t.c4 = c4;
  const double recv = h_cj * alpha_cj / alpha_u;
  t.c5 = L * static_cast<double>(p.dim) / 2.0 * recv * recv;
  return t;
}

BoundReport eval_bound(const BoundProblem& p, const LambdaSchedule& lambda,
                       double f0_minus_fstar,
                       std::span<const std::vector<double>> s_history,
                       std::span<const double> alpha_u_history,
                       std::span<const std::pair<double, double>> jammer_history) {
  validate_problem(p);
  validate(lambda);
  if (!(f0_minus_fstar >= 0.0))
    throw InvalidInputError("f0 - f* must be non-negative");
  const std::size_t rounds = s_history.size();
  if (rounds == 0) throw InvalidInputError("need at least one round");
  if (alpha_u_history.size() != rounds || jammer_history.size() != rounds)
    throw InvalidInputError("per-round histories must share one length");

  BoundReport report;
  report.c1 = eval_c1(p);
  report.rounds.reserve(rounds);
  double alpha_u_min = std::numeric_limits<double>::infinity();
  double term_sum = 0.0;
  for (std::size_t m = 0; m < rounds; ++m) {
    const double lambda_m = lambda.at(static_cast<int>(m) + 1);
    const auto t =
        eval_constants(p, lambda_m, s_history[m], alpha_u_history[m],
                       jammer_history[m].first, jammer_history[m].second);
    term_sum += t.c2 + t.c3 + t.c4 + t.c5;
    alpha_u_min = std::min(alpha_u_min, alpha_u_history[m]);
    report.rounds.push_back(t);
  }
  report.c6 = eval_c6(p, alpha_u_min);
  if (report.c1 <= 0.0) {
    report.applicable = false;
    report.value = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.applicable = true;
  const double mc1 = static_cast<double>(rounds) * report.c1;
  report.value = f0_minus_fstar / mc1 + report.c6 / report.c1 + term_sum / mc1;
  return report;
}

std::vector<double> estimate_kappa(const std::vector<ClientRecord>& clients,
                                   const ModelParams& model) {
  if (clients.empty()) throw InvalidInputError("no clients");
  std::vector<std::vector<double>> grads(clients.size());
  std::vector<double> mean(model.dim(), 0.0);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    grads[i] = grad(model, clients[i].train);
    axpy(clients[i].weight, grads[i], mean);
  }
  std::vector<double> kappa(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i)
    kappa[i] = l2_norm(subtract(grads[i], mean));
  return kappa;
}

double estimate_smoothness(const std::vector<ClientRecord>& clients,
                           const ModelParams& model, int probes,
                           std::uint64_t seed) {
  if (clients.empty()) throw InvalidInputError("no clients");
  if (probes < 1) throw InvalidInputError("need at least one probe");
  const auto weighted_grad = [&](const ModelParams& at) {
    std::vector<double> g(at.dim(), 0.0);
    for (const auto& c : clients) axpy(c.weight, grad(at, c.train), g);
    return g;
  };
  StreamRng rng(seed, "smoothness_probe");
  double best = 0.0;
  for (int pr = 0; pr < probes; ++pr) {
    ModelParams w1 = model;
    ModelParams w2 = model;
    for (std::size_t j = 0; j < model.dim(); ++j) {
      w1.values[j] += 0.1 * rng.normal();
      w2.values[j] += 0.1 * rng.normal();
    }
    const double dist = l2_norm(subtract(w1.values, w2.values));
    if (dist == 0.0) continue;
    const double gap = l2_norm(subtract(weighted_grad(w1), weighted_grad(w2)));
    best = std::max(best, gap / dist);
  }
  return best;
}

}  // namespace otafl
