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

#include "otafl/data.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "otafl/errors.hpp"
#include "otafl/rng.hpp"

namespace otafl {
namespace {

constexpr double kLabelNoise = 0.05;

void validate_spec(const SyntheticSpec& spec) {
  if (spec.num_clients == 0) throw InvalidInputError("num_clients must be positive");
  if (spec.n_min == 0 || spec.n_min > spec.n_max)
    throw InvalidInputError("per-client sample range must satisfy 1 <= n_min <= n_max");
  if (spec.feat_dim == 0) throw InvalidInputError("feat_dim must be positive");
  if (spec.classes < 2) throw InvalidInputError("need at least two classes");
  if (spec.mode == PartitionMode::kLabelShard && spec.shards_per_client == 0)
    throw InvalidInputError("shards_per_client must be positive");
}

// Label of x under the shared ground-truth map, restricted to `allowed`.
int restricted_argmax(std::span<const double> x, const std::vector<double>& w,
                      const std::vector<double>& b, std::size_t classes,
                      const std::vector<int>& allowed) {
  int best = allowed.front();
  double best_logit = -1e300;
  for (int c : allowed) {
    double z = b[static_cast<std::size_t>(c)];
    for (std::size_t f = 0; f < x.size(); ++f)
      z += x[f] * w[f * classes + static_cast<std::size_t>(c)];
    if (z > best_logit) {
      best_logit = z;
      best = c;
    }
  }
  return best;
}

}  // namespace

std::vector<Dataset> gen_synthetic(const SyntheticSpec& spec,
                                   std::uint64_t seed) {
  validate_spec(spec);

  // Shared ground truth: labels come from argmax(Wx + b).
  std::vector<double> w(spec.feat_dim * spec.classes);
  std::vector<double> b(spec.classes);
  {
    StreamRng truth(seed, "truth");
    for (double& v : w) v = truth.uniform(-1.0, 1.0);
    for (double& v : b) v = truth.uniform(-0.1, 0.1);
  }

  std::vector<std::size_t> sizes(spec.num_clients);
  {
    StreamRng size_rng(seed, "client_sizes");
    for (auto& n : sizes)
      n = spec.n_min + size_rng.uniform_int(spec.n_max - spec.n_min + 1);
  }

  // Class visibility per client: everything in IID mode; in label-shard
  // mode each client sees only the classes of its shards.
  std::vector<std::vector<int>> allowed(spec.num_clients);
  if (spec.mode == PartitionMode::kIid) {
    std::vector<int> all(spec.classes);
    std::iota(all.begin(), all.end(), 0);
    for (auto& a : allowed) a = all;
  } else {
    std::vector<int> shards(spec.num_clients * spec.shards_per_client);
    for (std::size_t j = 0; j < shards.size(); ++j)
      shards[j] = static_cast<int>(j % spec.classes);
    StreamRng shard_rng(seed, "shards");
    shard_rng.shuffle(shards);
    for (std::size_t i = 0; i < spec.num_clients; ++i) {
      auto first = shards.begin() +
                   static_cast<std::ptrdiff_t>(i * spec.shards_per_client);
      allowed[i].assign(first,
                        first + static_cast<std::ptrdiff_t>(spec.shards_per_client));
      std::sort(allowed[i].begin(), allowed[i].end());
      allowed[i].erase(std::unique(allowed[i].begin(), allowed[i].end()),
                       allowed[i].end());
    }
  }

  std::vector<Dataset> out(spec.num_clients);
  std::vector<double> x(spec.feat_dim);
  for (std::size_t i = 0; i < spec.num_clients; ++i) {
    Dataset& d = out[i];
    d.feat_dim = spec.feat_dim;
    d.classes = spec.classes;
    d.features.reserve(sizes[i] * spec.feat_dim);
    d.labels.reserve(sizes[i]);
    StreamRng rng(seed, "client_data", i);
    for (std::size_t n = 0; n < sizes[i]; ++n) {
      for (double& v : x) v = rng.normal();
      int label = restricted_argmax(x, w, b, spec.classes, allowed[i]);
      if (rng.uniform01() < kLabelNoise) {
        label = allowed[i][static_cast<std::size_t>(
            rng.uniform_int(allowed[i].size()))];
      }
      d.push_row(x, label);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_frac,
                                             std::uint64_t seed) {
  if (data.empty()) throw InvalidInputError("cannot split an empty dataset");
  if (!(test_frac >= 0.0 && test_frac < 1.0))
    throw InvalidInputError("test_frac must lie in [0, 1)");

  const std::size_t n = data.size();
  const auto n_test =
      static_cast<std::size_t>(static_cast<double>(n) * test_frac);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  StreamRng rng(seed, "split");
  rng.shuffle(idx);

  Dataset train, test;
  train.feat_dim = test.feat_dim = data.feat_dim;
  train.classes = test.classes = data.classes;
  for (std::size_t j = 0; j < n; ++j) {
    Dataset& dst = (j < n - n_test) ? train : test;
    dst.push_row(data.row(idx[j]), data.labels[idx[j]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset load_table(const std::string& path, std::size_t feat_dim,
                   std::size_t classes) {
  if (feat_dim == 0) throw InvalidInputError("feat_dim must be positive");
  if (classes < 2) throw InvalidInputError("need at least two classes");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file: " + path);

  Dataset d;
  d.feat_dim = feat_dim;
  d.classes = classes;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> x(feat_dim);
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    for (std::size_t f = 0; f < feat_dim; ++f) {
      if (!(row >> x[f]))
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": expected " + std::to_string(feat_dim) +
                          " feature columns");
    }
    long long label = -1;
    if (!(row >> label) || label < 0 ||
        label >= static_cast<long long>(classes))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": label must be an integer in [0, " +
                        std::to_string(classes) + ")");
    std::string rest;
    if (row >> rest)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": trailing columns");
    d.push_row(x, static_cast<int>(label));
  }
  if (d.empty()) throw ConfigError("data file has no rows: " + path);
  return d;
}

std::vector<Dataset> partition_pool(const Dataset& pool,
                                    std::size_t num_clients,
                                    PartitionMode mode,
                                    std::size_t shards_per_client,
                                    std::uint64_t seed) {
  if (num_clients == 0) throw InvalidInputError("num_clients must be positive");
  if (pool.size() < num_clients)
    throw InvalidInputError("pool smaller than client count");

  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);

  std::vector<std::vector<std::size_t>> assigned(num_clients);
  StreamRng rng(seed, "partition");
  if (mode == PartitionMode::kIid) {
    rng.shuffle(idx);
    const std::size_t base = pool.size() / num_clients;
    const std::size_t rem = pool.size() % num_clients;
    std::size_t at = 0;
    for (std::size_t i = 0; i < num_clients; ++i) {
      const std::size_t take = base + (i < rem ? 1 : 0);
      assigned[i].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                         idx.begin() + static_cast<std::ptrdiff_t>(at + take));
      at += take;
    }
  } else {
    if (shards_per_client == 0)
      throw InvalidInputError("shards_per_client must be positive");
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pool.labels[a] < pool.labels[b];
                     });
    const std::size_t num_shards = num_clients * shards_per_client;
    if (pool.size() < num_shards)
      throw InvalidInputError("pool smaller than shard count");
    std::vector<std::vector<std::size_t>> shards(num_shards);
    const std::size_t base = pool.size() / num_shards;
    const std::size_t rem = pool.size() % num_shards;
    std::size_t at = 0;
    for (std::size_t s = 0; s < num_shards; ++s) {
      const std::size_t take = base + (s < rem ? 1 : 0);
      shards[s].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                       idx.begin() + static_cast<std::ptrdiff_t>(at + take));
      at += take;
    }
    std::vector<std::size_t> order(num_shards);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t i = 0; i < num_clients; ++i)
      for (std::size_t k = 0; k < shards_per_client; ++k)
        for (std::size_t row : shards[order[i * shards_per_client + k]])
          assigned[i].push_back(row);
  }

  std::vector<Dataset> out(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    out[i].feat_dim = pool.feat_dim;
    out[i].classes = pool.classes;
    for (std::size_t row : assigned[i])
      out[i].push_row(pool.row(row), pool.labels[row]);
  }
  return out;
}

std::vector<ClientRecord> make_client_records(std::vector<Dataset> trains) {
  if (trains.empty()) throw InvalidInputError("no client datasets");
  std::size_t total = 0;
  for (const auto& t : trains) {
    if (t.empty()) throw InvalidInputError("client dataset is empty");
    total += t.size();
  }
  std::vector<ClientRecord> out(trains.size());
  for (std::size_t i = 0; i < trains.size(); ++i) {
    out[i].id = static_cast<int>(i);
    out[i].weight = static_cast<double>(trains[i].size()) /
                    static_cast<double>(total);
    out[i].train = std::move(trains[i]);
  }
  return out;
}

}  // namespace otafl
