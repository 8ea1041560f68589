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
#include <limits>
#include <vector>

#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/power_control.hpp"
#include "otafl/rng.hpp"
#include "support/oracles.hpp"

using namespace otafl;

TEST_CASE("back-off factor s_i floors at 1 and tracks the power cap") {
  // alpha_u p / (|h| sqrt(P)) = 2 * 0.3 / (0.8 * 1) = 0.75 -> floor.
  CHECK(compute_s(2.0, 0.3, 0.8, 1.0) == 1.0);
  // With P = 0.09 the raw ratio is 0.6 / 0.24 = 2.5.
  CHECK(compute_s(2.0, 0.3, 0.8, 0.09) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(compute_s(0.0, 0.3, 0.8, 1.0), InvalidInputError);
  CHECK_THROWS_AS(compute_s(2.0, 0.3, 0.0, 1.0), InvalidInputError);
  CHECK_THROWS_AS(compute_s(2.0, 0.3, 0.8, 0.0), InvalidInputError);
}

TEST_CASE("transmit scale and effective weight compose as designed") {
  // alpha_i = alpha_u p / (|h| tau s) = 2*0.3 / (0.8*0.5*1) = 1.5.
  const double alpha_i = client_pc_factor(2.0, 0.3, 0.8, 0.5, 1.0);
  CHECK(alpha_i == doctest::Approx(1.5).epsilon(1e-15));
  // Receive side: |h| alpha_i / alpha_u = p / (tau s) = 0.6.
  CHECK(0.8 * alpha_i / 2.0 == doctest::Approx(0.6).epsilon(1e-15));

  const std::vector<double> delta = {0.3, -0.4};
  const auto x = build_transmit_signal(alpha_i, delta);
  CHECK(x[0] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(-0.6).epsilon(1e-15));
}

TEST_CASE("clipped transmissions never exceed the power budget") {
  // Property: for any draw, s_i chosen by compute_s keeps
  // ||alpha_i * delta||^2 <= P when ||delta|| <= tau.
  StreamRng rng(5, "power_prop");
  for (int trial = 0; trial < 2000; ++trial) {
    const double alpha_u = std::exp(rng.uniform(-2.0, 3.0));
    const double p = rng.uniform(0.01, 1.0);
    const double h = rng.rayleigh_unit_power() + 1e-6;
    const double cap = std::exp(rng.uniform(-4.0, 4.0));
    const double tau = std::exp(rng.uniform(-2.0, 2.0));
    const double s = compute_s(alpha_u, p, h, cap);
    CHECK(s >= 1.0);
    const double alpha_i = client_pc_factor(alpha_u, p, h, tau, s);
    // Worst case update: norm exactly tau.
    const double norm = alpha_i * tau;
    CHECK(norm * norm <= cap * (1.0 + 1e-9));
  }
}

TEST_CASE("compute_a matches the naive radical root in long double") {
  StreamRng rng(9, "a_grid");
  for (int i = 0; i < 1000; ++i) {
    const double eps = std::exp(rng.uniform(std::log(1e-3), std::log(50.0)));
    const double delta = std::exp(rng.uniform(std::log(1e-9), std::log(0.5)));
    const double a = compute_a(eps, delta);
    const long double want = test::oracle_a(eps, delta);
    CHECK(std::abs(a - static_cast<double>(want)) <=
          1e-12 * std::max(1.0, std::abs(static_cast<double>(want))));
    // The defining equation holds to near machine precision.
    const long double L = std::log(1.0L / static_cast<long double>(delta));
    const long double lhs =
        2.0L * static_cast<long double>(a) +
        static_cast<long double>(a) * static_cast<long double>(a) / L;
    CHECK(std::abs(static_cast<double>(lhs) - eps) <= 1e-12 * eps);
  }
  CHECK(compute_a(4.4, 0.01) ==
        doctest::Approx(1.8345768012980702).epsilon(1e-12));
  CHECK(compute_a(1.0, 1e-5) ==
        doctest::Approx(0.48959003083023227).epsilon(1e-12));
  CHECK_THROWS_AS(compute_a(0.0, 0.01), InvalidInputError);
  CHECK_THROWS_AS(compute_a(1.0, 0.0), InvalidInputError);
  CHECK_THROWS_AS(compute_a(1.0, 1.0), InvalidInputError);
}

TEST_CASE("noise floor follows the closed form") {
  StreamRng rng(13, "floor_grid");
  for (int i = 0; i < 300; ++i) {
    const double eps = std::exp(rng.uniform(std::log(0.05), std::log(20.0)));
    const double delta = std::exp(rng.uniform(std::log(1e-8), std::log(0.1)));
    const int rounds = 1 + static_cast<int>(rng.uniform_int(500));
    const std::int64_t data = 50 + static_cast<std::int64_t>(rng.uniform_int(100000));
    const double got = required_noise_floor(eps, delta, rounds, data);
    const long double want = test::oracle_floor(eps, delta, rounds, data);
    CHECK(std::abs(got - static_cast<double>(want)) <=
          1e-12 * static_cast<double>(want));
  }
  CHECK_THROWS_AS(required_noise_floor(1.0, 1e-5, 0, 100), InvalidInputError);
  CHECK_THROWS_AS(required_noise_floor(1.0, 1e-5, 10, 0), InvalidInputError);
}

TEST_CASE("jammer_needed flips exactly at the floor") {
  const double eps = 1.0, delta = 1e-5;
  const int rounds = 10;
  const std::int64_t data = 100;
  const double a = compute_a(eps, delta);
  const double floor = required_noise_floor(eps, delta, rounds, data);
  // Spec-point: floor ~ 0.024016 with these numbers.
  CHECK(floor == doctest::Approx(0.024016).epsilon(1e-4));

  // Channel variance below the floor -> jammer needed.
  CHECK(jammer_needed(rounds, data, a, delta, 0.1, 1.0));
  // Channel variance above the floor -> not needed.
  const double big_sigma = std::sqrt(floor) * 1.01;
  CHECK(!jammer_needed(rounds, data, a, delta, big_sigma, 1.0));
  // alpha_u shrinks the received signal, boosting relative noise.
  CHECK(!jammer_needed(rounds, data, a, delta, 0.1, 0.1));
  // Infinite alpha_u means no channel help at all.
  CHECK(jammer_needed(rounds, data, a, delta, 0.1,
                      std::numeric_limits<double>::infinity()));
  // No channel noise at all: always needed.
  CHECK(jammer_needed(rounds, data, a, delta, 0.0, 1.0));
}

TEST_CASE("design_jammer reproduces the worked example") {
  const double alpha_cj = design_jammer(1.0, 1e-5, 10, 100, 1.0, 1.0, 0.1);
  CHECK(alpha_cj == doctest::Approx(0.118389).epsilon(1e-4));
  // Feeding the designed variance back through the accountant's epsilon
  // formula lands exactly on the target (round trip, checked in the
  // privacy tests at scale; spot check here).
  const double floor = required_noise_floor(1.0, 1e-5, 10, 100);
  const double sigma_eff = alpha_cj * alpha_cj + 0.01;  // h_cj = alpha_u = 1
  CHECK(sigma_eff == doctest::Approx(floor).epsilon(1e-12));

  // A channel already at the floor needs no jammer.
  CHECK(design_jammer(1.0, 1e-5, 10, 100, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("jammer_amplitude_for_floor inverts the receive-side variance") {
  const double floor = 0.5;
  const double alpha_u = 2.0, h_cj = 0.8, sigma_c = 0.3;
  const double alpha_cj =
      jammer_amplitude_for_floor(floor, alpha_u, h_cj, sigma_c);
  const double recv = h_cj * alpha_cj / alpha_u;
  CHECK(recv * recv + sigma_c * sigma_c / (alpha_u * alpha_u) ==
        doctest::Approx(floor).epsilon(1e-12));
  // Already-met floor clamps to zero.
  CHECK(jammer_amplitude_for_floor(0.01, 1.0, 1.0, 0.5) == 0.0);
  CHECK_THROWS_AS(jammer_amplitude_for_floor(0.5, 1.0, 0.0, 0.1),
                  InvalidInputError);
}

TEST_CASE("dynamic alpha_u drives every back-off factor to one") {
  const std::vector<double> gains = {0.8, 1.3, 0.4};
  const std::vector<double> caps = {1.0, 0.25, 4.0};
  const std::vector<double> weights = {0.5, 0.3, 0.2};
  const double tau = 0.7;
  const double alpha_u = dynamic_alpha_u(gains, caps, weights, tau);
  // alpha_u = tau * min_i |h_i| sqrt(P_i) / p_i.
  double want = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gains.size(); ++i)
    want = std::min(want, gains[i] * std::sqrt(caps[i]) / weights[i]);
  CHECK(alpha_u == doctest::Approx(tau * want).epsilon(1e-15));
  for (std::size_t i = 0; i < gains.size(); ++i)
    CHECK(compute_s(alpha_u, weights[i], gains[i], caps[i]) == 1.0);
  CHECK_THROWS_AS(dynamic_alpha_u({}, {}, {}, tau), InvalidInputError);
}
