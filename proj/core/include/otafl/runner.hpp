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
// Experiment runner: parses a configuration, executes it across seeds,
// and writes run artifacts (per-seed metrics CSV, per-seed accounting
// CSV, summary.json, curves.svg) into the output directory.

#ifndef OTAFL_RUNNER_HPP_
#define OTAFL_RUNNER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otafl/bound.hpp"
#include "otafl/config.hpp"
#include "otafl/data.hpp"
#include "otafl/fl_protocol.hpp"
#include "otafl/model.hpp"

namespace otafl {

enum class JammerMode { kAuto, kOff, kForced };

struct DataConfig {
  std::string preset = "desk";   // "desk" or "mnist_mlp" defaults
  std::size_t num_clients = 10;
  std::size_t n_min = 80;
  std::size_t n_max = 120;
  std::size_t feat_dim = 16;
  std::size_t classes = 4;
  PartitionMode mode = PartitionMode::kIid;
  std::size_t shards_per_client = 2;
  double test_frac = 0.2;
  std::string import_path;       // when nonempty, load instead of generate
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {32};
  bool with_bias = true;
};

struct ChannelNetConfig {
  double snr_db = 1.0;   // per-client SNR target: P_i = snr * dim * sigma_c^2
  double sigma_c = 1.0;
};

struct PowerConfig {
  AlphaUMode mode = AlphaUMode::kDynamic;
  double alpha_u = 1.0;       // fixed mode
  double alpha_u_ref = 0.0;   // dynamic mode: activation reference; 0 = unset
  ServerRescale rescale = ServerRescale::kNone;
};

struct PrivacyConfig {
  double delta = 1e-5;
  std::optional<double> eps_target;  // absent: no target, report only
  JammerMode jammer_mode = JammerMode::kAuto;
  double jammer_margin = 1.0;
  double h_cj_override = 0.0;  // > 0 pins |h_cj| instead of fading draws
};

struct BoundConfig {
  bool enabled = false;
  double smoothness = 1.0;
  double dissimilarity = 0.1;
  double growth = 1.0;
  double iterate_gap = 1.0;
  double grad_bound = 1.0;
  double kappa = 1.0;  // uniform per-client gradient dissimilarity level
  double f0_minus_fstar = 1.0;
  bool estimate = false;  // estimate L and kappa_i from the data at init
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kUpcycled;
  int rounds = 40;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
  int threads = 1;
  bool emit_plots = true;

  DataConfig data;
  ModelConfig model;
  LocalHyper hyper;
  LambdaSchedule lambda = LambdaSchedule::staircase();
  ChannelNetConfig channel;
  PowerConfig power;
  PrivacyConfig privacy;
  BoundConfig bound;
};

// Builds an ExperimentConfig from parsed key-values; unknown keys and
// malformed values raise ConfigError.
ExperimentConfig build_config(const KeyValueConfig& kv);
ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<std::string>& overrides);
void validate(const ExperimentConfig& cfg);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> metrics;
  double final_train_loss = 0.0;
  double final_test_acc = 0.0;
  double eps_bound_final = 0.0;
  double eps_max_client_final = 0.0;
  double max_power_ratio = 0.0;
  double min_s = 0.0;
  std::int64_t data_total = 0;
  BoundReport bound;
  std::string metrics_path;
  std::string noise_path;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  double mean_final_test_acc = 0.0;
  double std_final_test_acc = 0.0;
  std::string output_dir;
  std::string summary_path;
  std::string svg_path;
};

// Executes every seed, writes artifacts, and verifies the emitted
// accounting files replay to the in-memory ledger (a mismatch raises
// InvariantViolationError).
RunResult run_experiment(const ExperimentConfig& cfg);

// metrics CSV: fixed header
// iter,transmitted,train_loss,test_acc,eps_bound,eps_max_client,
// jammer_var,avg_tx_power,wall_ms — floats at %.9g, LF line endings.
void emit_csv(std::span<const RoundMetrics> rows, const std::string& path);
std::vector<RoundMetrics> parse_metrics_csv(const std::string& path);

// Accounting sidecar consumed by `accountant --replay`: a comment header
// carrying delta and |D|, then one row per iteration with the effective
// noise variance, the emitted epsilons, and every client's s_i at %.17g.
struct NoiseTrace {
  double delta = 0.0;
  std::int64_t data_total = 0;
  std::size_t num_clients = 0;
  struct Row {
    int iteration = 0;
    bool transmitted = false;
    double sigma_eff_sq = 0.0;
    double eps_bound = 0.0;
    double eps_max_client = 0.0;
    std::vector<double> s_by_client;
  };
  std::vector<Row> rows;
};

void emit_noise_csv(const NoiseTrace& trace, const std::string& path);
NoiseTrace read_noise_csv(const std::string& path);

// Rebuilds a ledger from the trace and checks the recomputed epsilons
// against the emitted columns to `tol` (relative).  Returns the replayed
// final (eps_bound, eps_max_client); mismatch raises
// InvariantViolationError.
std::pair<double, double> replay_accounting(const NoiseTrace& trace,
                                            double tol = 1e-12);

}  // namespace otafl

#endif  // OTAFL_RUNNER_HPP_
