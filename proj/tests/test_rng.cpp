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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "otafl/rng.hpp"

using namespace otafl;

TEST_CASE("stream keys separate seed, tag, and indices") {
  const std::uint64_t base = stream_key(1, "channel", 0);
  CHECK(stream_key(2, "channel", 0) != base);
  CHECK(stream_key(1, "awgn", 0) != base);
  CHECK(stream_key(1, "channel", 1) != base);
  CHECK(stream_key(1, "channel", 0, 1) != base);
  // Same inputs, same key — including across constexpr evaluation.
  constexpr std::uint64_t ct = stream_key(5, "local_solve", 3, 9);
  CHECK(ct == stream_key(5, "local_solve", 3, 9));
}

TEST_CASE("golden first draws pin the generator layout") {
  // Frozen outputs: any change to seeding, hashing, or the transforms
  // silently breaks every recorded experiment, so it must fail loudly.
  CHECK(stream_key(42, "channel", 7) == 10953407209591406874ULL);
  StreamRng u(42, "golden");
  CHECK(u.uniform01() == doctest::Approx(0.3325939554805547).epsilon(1e-15));
  CHECK(u.uniform01() == doctest::Approx(0.65280970696695861).epsilon(1e-15));
  StreamRng n(42, "golden");
  n.uniform01();
  n.uniform01();
  CHECK(n.normal() == doctest::Approx(-0.77527605022914114).epsilon(1e-15));
  CHECK(n.normal() == doctest::Approx(-0.76311676118892136).epsilon(1e-15));
  CHECK(n.normal() == doctest::Approx(0.59647596994205121).epsilon(1e-15));
  StreamRng h(7, "channel", 3);
  CHECK(h.rayleigh_unit_power() ==
        doctest::Approx(0.35024473650536564).epsilon(1e-15));
}

TEST_CASE("identical streams replay bit-for-bit") {
  StreamRng a(123, "replay", 4, 2);
  StreamRng b(123, "replay", 4, 2);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform01() == b.uniform01());
  for (int i = 0; i < 1000; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform01 stays in [0, 1) and uniform_open01 in (0, 1)") {
  StreamRng r(5, "range");
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform_open01();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("uniform_int covers [0, n) without bias artifacts") {
  StreamRng r(11, "ints");
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = r.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    // ~10000 expected per bucket; 5 sigma is ~±480.
    CHECK(c > 9400);
    CHECK(c < 10600);
  }
}

TEST_CASE("normal() has unit variance and no lag-1 correlation") {
  StreamRng r(17, "normal_mc");
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0, lag = 0.0, prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
    if (i > 0) lag += x * prev;
    prev = x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double corr = (lag / (n - 1) - mean * mean) / var;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("rayleigh draws have unit second moment") {
  StreamRng r(23, "rayleigh_mc");
  const int n = 1000000;
  long double sum2 = 0.0L;
  for (int i = 0; i < n; ++i) {
    const double h = r.rayleigh_unit_power();
    REQUIRE(h > 0.0);
    sum2 += static_cast<long double>(h) * h;
  }
  const double second = static_cast<double>(sum2 / n);
  CHECK(second > 0.997);
  CHECK(second < 1.003);
}

TEST_CASE("shuffle is a permutation and differs across streams") {
  std::vector<int> v(64);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> a = v, b = v;
  StreamRng ra(3, "shuffle", 0);
  StreamRng rb(3, "shuffle", 1);
  ra.shuffle(a);
  rb.shuffle(b);
  std::vector<int> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  CHECK(sa == v);
  CHECK(sb == v);
  CHECK(a != b);  // astronomically unlikely to collide
  // Replays reproduce the same permutation.
  std::vector<int> a2 = v;
  StreamRng ra2(3, "shuffle", 0);
  ra2.shuffle(a2);
  CHECK(a == a2);
}

TEST_CASE("fill_normal scales by the requested stddev") {
  std::vector<double> x, y;
  StreamRng rx(9, "fill");
  StreamRng ry(9, "fill");
  x.resize(256);
  y.resize(256);
  rx.fill_normal(x, 1.0);
  ry.fill_normal(y, 2.5);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y[i] == doctest::Approx(2.5 * x[i]).epsilon(1e-12));
}
