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
// INI-style experiment configuration:
//
//   [section]
//   key = value   # comment
//
// Keys are addressed as "section.key".  Command-line overrides use the
// same dotted form.

#ifndef OTAFL_CONFIG_HPP_
#define OTAFL_CONFIG_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace otafl {

class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text,
                                     const std::string& origin = "<string>");

  // "section.key=value"; later sets win.
  void set_override(const std::string& assignment);
  void set(const std::string& dotted_key, const std::string& value);

  std::optional<std::string> raw(const std::string& dotted_key) const;
  bool has(const std::string& dotted_key) const;

  // Typed getters; the _or forms fall back to a default, the required
  // forms throw ConfigError when the key is absent.  Malformed values
  // always throw ConfigError naming the key.
  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  // All dotted keys, sorted (for unknown-key validation and echoing the
  // effective config into summaries).
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

}  // namespace otafl

#endif  // OTAFL_CONFIG_HPP_
