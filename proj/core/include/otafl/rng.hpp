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
// Deterministic, keyed random streams.
//
// Every consumer of randomness in the simulator opens its own stream,
// keyed by (experiment seed, purpose tag, up to two integer coordinates
// such as client id and round index).  Streams are mutually independent
// for distinct keys and their output depends only on the key, never on
// draw order elsewhere in the program — this is what makes runs
// reproducible under any thread count.
//
// The generator is std::mt19937_64 (its output sequence for a given seed
// is pinned by the C++ standard).  Uniform/normal/Rayleigh variates are
// produced by hand-rolled transforms rather than std::*_distribution,
// whose algorithms vary across standard-library implementations.

#ifndef OTAFL_RNG_HPP_
#define OTAFL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace otafl {

// Finalizer from the splitmix64 generator; bijective 64-bit mixing.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the purpose tag, so stream keys are stable across builds
// (no dependence on std::hash).
constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives the engine seed for stream (seed, tag, a, b).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = mix64(seed ^ 0x6f7461666c726e67ULL);  // "otaflrng"
  k = mix64(k ^ hash_tag(tag));
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  return k;
}

class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
            std::uint64_t b = 0)
      : engine_(stream_key(seed, tag, a, b)) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1); safe as a log/denominator input.
  double uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer on [0, n); n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; pairs are cached so consecutive calls
  // cost one transform per two variates.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double r = std::sqrt(-2.0 * std::log(uniform_open01()));
    const double theta = kTwoPi * uniform01();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Rayleigh magnitude normalized to unit second moment: E[h^2] = 1.
  // If U ~ Uniform(0,1) then |h| = sqrt(-ln U) has P(|h| > x) = exp(-x^2).
  double rayleigh_unit_power() { return std::sqrt(-std::log(uniform_open01())); }

  void fill_normal(std::vector<double>& out, double stddev) {
    for (double& v : out) v = stddev * normal();
  }

  // Deterministic Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace otafl

#endif  // OTAFL_RNG_HPP_
