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
// Minimal dependency-free SVG line plots for run artifacts.

#ifndef OTAFL_SVG_HPP_
#define OTAFL_SVG_HPP_

#include <span>
#include <string>
#include <vector>

namespace otafl {

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;  // same length as xs
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;  // at least one, each nonempty
};

// Renders the charts stacked vertically into one SVG document string.
std::string render_svg(std::span<const Chart> charts);

// Renders and writes to `path`.  Throws InvalidInputError when charts is
// empty or a chart has no series, and ConfigError when the file cannot
// be written.
void emit_svg(std::span<const Chart> charts, const std::string& path);

}  // namespace otafl

#endif  // OTAFL_SVG_HPP_
