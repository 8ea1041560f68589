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
// Client datasets: synthetic generation, partitioning across clients
// (IID or label-sharded), train/test splitting, and a plain-text loader.

#ifndef OTAFL_DATA_HPP_
#define OTAFL_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace otafl {

// Dense classification dataset; features are row-major n x feat_dim.
struct Dataset {
  std::size_t feat_dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feat_dim, feat_dim};
  }

  void push_row(std::span<const double> x, int label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }
};

// One federated client: its local training data, its aggregation weight
// p_i (sample share), its transmit power budget P_i, its dissimilarity
// proxy kappa_i, and the scaling factors s_i it used on each uplink
// transmission (appended by the trainer, consumed by the bound module).
struct ClientRecord {
  int id = 0;
  Dataset train;
  double weight = 0.0;        // p_i; sums to 1 across clients
  double power_cap = 0.0;     // P_i
  double kappa = 0.0;         // kappa_i
  std::vector<double> s_history;
};

enum class PartitionMode { kIid, kLabelShard };

struct SyntheticSpec {
  std::size_t num_clients = 0;
  std::size_t n_min = 0;        // per-client sample count range, inclusive
  std::size_t n_max = 0;
  std::size_t feat_dim = 0;
  std::size_t classes = 0;
  PartitionMode mode = PartitionMode::kIid;
  std::size_t shards_per_client = 2;  // label-shard mode only
};

// Draws per-client datasets from a shared ground-truth linear map:
// features ~ N(0, I), label = argmax(Wx + b) with (W, b) drawn once from
// the seed, plus 5% label noise.  IID mode samples every client from the
// full distribution; label-shard mode gives each client samples from only
// `shards_per_client` classes (the classic pathological non-IID split).
// Deterministic in (spec, seed).
std::vector<Dataset> gen_synthetic(const SyntheticSpec& spec,
                                   std::uint64_t seed);

// Splits one dataset into (train, test) with `test_frac` of the rows held
// out, after a seeded shuffle.  test_frac in [0, 1); at least one row
// remains in train.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_frac,
                                             std::uint64_t seed);

// Reads whitespace-separated rows "x_1 ... x_f label" (label integral,
// in [0, classes)).  Lines starting with '#' are skipped.
Dataset load_table(const std::string& path, std::size_t feat_dim,
                   std::size_t classes);

// Splits a loaded pool across clients under the given mode; sizes are as
// equal as the pool allows.  Deterministic in (pool, mode, seed).
std::vector<Dataset> partition_pool(const Dataset& pool,
                                    std::size_t num_clients,
                                    PartitionMode mode,
                                    std::size_t shards_per_client,
                                    std::uint64_t seed);

// Builds ClientRecords from per-client train sets: p_i = n_i / sum(n),
// power caps filled in later by the runner.  Kappas default to 0.
std::vector<ClientRecord> make_client_records(std::vector<Dataset> trains);

}  // namespace otafl

#endif  // OTAFL_DATA_HPP_
