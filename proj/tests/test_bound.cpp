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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "otafl/bound.hpp"
#include "otafl/data.hpp"
#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/model.hpp"
#include "otafl/rng.hpp"
#include "support/oracles.hpp"

using namespace otafl;

namespace {

BoundProblem sample_problem(StreamRng& rng, std::size_t clients) {
  BoundProblem p;
  p.smoothness = std::exp(rng.uniform(-1.0, 2.0));
  p.dissimilarity = rng.uniform(0.0, 0.3);
  p.growth = std::exp(rng.uniform(-0.5, 1.5));
  p.iterate_gap = rng.uniform(0.0, 2.0);
  p.grad_bound = rng.uniform(0.1, 3.0);
  p.mu = std::exp(rng.uniform(-1.0, 2.0));
  p.tau = std::exp(rng.uniform(-1.0, 1.0));
  p.sigma_c = rng.uniform(0.0, 1.0);
  p.dim = 1 + rng.uniform_int(500);
  double wsum = 0.0;
  for (std::size_t i = 0; i < clients; ++i) {
    p.kappa.push_back(rng.uniform(0.0, 2.0));
    p.weights.push_back(0.1 + rng.uniform01());
    wsum += p.weights.back();
  }
  for (auto& w : p.weights) w /= wsum;
  return p;
}

}  // namespace

TEST_CASE("per-round constants match the long-double reference on a grid") {
  StreamRng rng(3, "bound_grid");
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.uniform_int(5);
    BoundProblem p = sample_problem(rng, k);
    const int rounds = 1 + static_cast<int>(rng.uniform_int(12));
    std::vector<std::vector<double>> s_hist;
    std::vector<double> alpha_hist, lambda_hist;
    std::vector<std::pair<double, double>> jam_hist;
    LambdaSchedule lambda{{{1, rng.uniform(0.05, 0.5)}}};
    for (int m = 0; m < rounds; ++m) {
      std::vector<double> s;
      for (std::size_t i = 0; i < k; ++i) s.push_back(1.0 + 2.0 * rng.uniform01());
      s_hist.push_back(std::move(s));
      alpha_hist.push_back(std::exp(rng.uniform(-1.0, 1.0)));
      jam_hist.emplace_back(rng.uniform01(), rng.uniform01());
      lambda_hist.push_back(lambda.at(m + 1));
    }
    const double f0 = rng.uniform(0.0, 5.0);

    const BoundReport got = eval_bound(p, lambda, f0, s_hist, alpha_hist,
                                       jam_hist);
    const long double c1 = 1.0L / (2.0L * p.mu) -
                           static_cast<long double>(p.smoothness) *
                               p.dissimilarity / (p.mu * p.growth * p.growth);
    CHECK(std::abs(got.c1 - static_cast<double>(c1)) <=
          1e-12 * std::max(1.0, std::abs(static_cast<double>(c1))));
    if (c1 <= 0.0L) {
      CHECK(!got.applicable);
      CHECK(std::isnan(got.value));
      continue;
    }
    const long double want = test::oracle_bound_rhs(
        p, lambda_hist, f0, s_hist, alpha_hist, jam_hist);
    CHECK(got.applicable);
    CHECK(std::abs(got.value - static_cast<double>(want)) <=
          1e-9 * std::max(1.0, std::abs(static_cast<double>(want))));
    ++checked;
  }
  CHECK(checked >= 40);  // the sampler must hit plenty of applicable cases
}

TEST_CASE("an unsatisfied curvature condition is flagged, not crashed") {
  BoundProblem p;
  p.smoothness = 10.0;
  p.dissimilarity = 1.0;  // L B / rho^2 = 10 > 1/2 -> C1 < 0
  p.growth = 1.0;
  p.iterate_gap = 1.0;
  p.grad_bound = 1.0;
  p.mu = 1.0;
  p.tau = 1.0;
  p.sigma_c = 0.5;
  p.dim = 10;
  p.kappa = {1.0};
  p.weights = {1.0};
  const std::vector<std::vector<double>> s_hist = {{1.0}};
  const std::vector<double> alpha_hist = {1.0};
  const std::vector<std::pair<double, double>> jam_hist = {{0.0, 0.0}};
  const BoundReport r = eval_bound(p, LambdaSchedule{{{1, 0.5}}}, 1.0, s_hist,
                                   alpha_hist, jam_hist);
  CHECK(!r.applicable);
  CHECK(std::isnan(r.value));
  CHECK(r.c1 < 0.0);
}

TEST_CASE("louder jammers and noisier channels loosen the bound") {
  StreamRng rng(9, "bound_mono");
  BoundProblem p = sample_problem(rng, 3);
  p.dissimilarity = 0.01;  // keep C1 > 0
  p.mu = 1.0;
  p.smoothness = 1.0;
  p.growth = 1.0;
  // With mu = L = tau = 1 the clipping-loss factor in C4 is minimized at
  // tau * s = 1.5, so s = 1.5 vs s = 4 below is a clean monotone pair.
  p.tau = 1.0;
  REQUIRE(eval_c1(p) > 0.0);
  const LambdaSchedule lambda{{{1, 0.2}}};
  const std::vector<std::vector<double>> s_hist(
      4, std::vector<double>(3, 1.5));
  const std::vector<double> alpha_hist(4, 1.0);
  const std::vector<std::pair<double, double>> quiet(4, {1.0, 0.0});
  const std::vector<std::pair<double, double>> loud(4, {1.0, 0.5});
  const double quiet_rhs =
      eval_bound(p, lambda, 1.0, s_hist, alpha_hist, quiet).value;
  const double loud_rhs =
      eval_bound(p, lambda, 1.0, s_hist, alpha_hist, loud).value;
  CHECK(loud_rhs > quiet_rhs);

  BoundProblem noisier = p;
  noisier.sigma_c = p.sigma_c + 1.0;
  const double noisy_rhs =
      eval_bound(noisier, lambda, 1.0, s_hist, alpha_hist, quiet).value;
  CHECK(noisy_rhs > quiet_rhs);

  // Larger back-off (deeper clipping attenuation) also costs.
  const std::vector<std::vector<double>> s_deep(
      4, std::vector<double>(3, 4.0));
  const double deep_rhs =
      eval_bound(p, lambda, 1.0, s_deep, alpha_hist, quiet).value;
  CHECK(deep_rhs > quiet_rhs);
}

TEST_CASE("c6 uses the smallest alpha_u across rounds") {
  StreamRng rng(11, "c6");
  BoundProblem p = sample_problem(rng, 2);
  p.dissimilarity = 0.0;
  p.sigma_c = 0.5;
  const LambdaSchedule lambda{{{1, 0.3}}};
  const std::vector<std::vector<double>> s_hist(3, std::vector<double>(2, 1.0));
  const std::vector<double> alpha_hist = {2.0, 0.5, 1.0};
  const std::vector<std::pair<double, double>> jam(3, {0.0, 0.0});
  const BoundReport r = eval_bound(p, lambda, 0.0, s_hist, alpha_hist, jam);
  CHECK(r.c6 == doctest::Approx(eval_c6(p, 0.5)).epsilon(1e-15));
}

TEST_CASE("bound inputs are validated") {
  StreamRng rng(13, "bound_valid");
  BoundProblem p = sample_problem(rng, 2);
  BoundProblem bad = p;
  bad.mu = 0.0;
  CHECK_THROWS_AS(eval_c1(bad), InvalidInputError);
  bad = p;
  bad.smoothness = -1.0;
  CHECK_THROWS_AS(eval_c1(bad), InvalidInputError);
  bad = p;
  bad.kappa.pop_back();
  CHECK_THROWS_AS(eval_c1(bad), InvalidInputError);
  CHECK_THROWS_AS(eval_c6(p, 0.0), InvalidInputError);
  const std::vector<double> short_s = {1.0};
  CHECK_THROWS_AS(eval_constants(p, 0.5, short_s, 1.0, 0.0, 0.0),
                  InvalidInputError);
  const std::vector<double> low_s = {0.5, 1.0};
  CHECK_THROWS_AS(eval_constants(p, 0.5, low_s, 1.0, 0.0, 0.0),
                  InvalidInputError);
}

TEST_CASE("empirical estimators produce usable problem inputs") {
  SyntheticSpec spec;
  spec.num_clients = 4;
  spec.n_min = spec.n_max = 40;
  spec.feat_dim = 6;
  spec.classes = 3;
  auto records = make_client_records(gen_synthetic(spec, 51));
  const std::vector<LayerShape> shapes = {{6, 8}, {8, 3}};
  const ModelParams m = init_model(shapes, true, 51);

  const std::vector<double> kappa = estimate_kappa(records, m);
  REQUIRE(kappa.size() == records.size());
  for (double k : kappa) {
    CHECK(k >= 0.0);
    CHECK(std::isfinite(k));
  }
  // kappa_i is the deviation of client i's gradient from the weighted
  // mean, so the weighted deviations cannot all be zero on non-identical
  // clients, and each one is bounded by the sum of gradient norms.
  double max_kappa = 0.0;
  for (double k : kappa) max_kappa = std::max(max_kappa, k);
  CHECK(max_kappa > 0.0);

  const double L = estimate_smoothness(records, m, 8, 51);
  CHECK(L > 0.0);
  CHECK(std::isfinite(L));
  // Estimates are deterministic given the seed.
  CHECK(estimate_smoothness(records, m, 8, 51) == L);
  CHECK(estimate_kappa(records, m) == kappa);
}
