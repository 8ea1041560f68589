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

#ifndef OTAFL_LINALG_HPP_
#define OTAFL_LINALG_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "otafl/errors.hpp"

namespace otafl {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> v) { return dot(v, v); }

inline double l2_norm(std::span<const double> v) {
  return std::sqrt(squared_norm(v));
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> v, double alpha) {
  for (double& x : v) x *= alpha;
}

inline std::vector<double> scaled(std::span<const double> v, double alpha) {
  std::vector<double> out(v.begin(), v.end());
  scale(out, alpha);
  return out;
}

// a - b
inline std::vector<double> subtract(std::span<const double> a,
                                    std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline double linf_distance(std::span<const double> a,
                            std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_same_size(std::span<const double> a,
                              std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw InvalidInputError(what);
}

}  // namespace otafl

#endif  // OTAFL_LINALG_HPP_
