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
// Federated-learning orchestration over the analog channel.
//
// FedAvg and FedProx transmit on every global iteration.  Upcycled runs
// 2M logical iterations for M uplink transmissions: odd iterations
// 2m-1 do the usual broadcast / local-solve / transmit round, and even
// iterations 2m reuse the previous update by extrapolating
//
//   w^{2m} = w^{2m-1} + mu/(mu + lambda_m) * (w^{2m-1} - w^{2m-2})
//
// entirely at the server — no client computation, no transmission, and
// (because nothing new touches the data) no privacy spend.

#ifndef OTAFL_FL_PROTOCOL_HPP_
#define OTAFL_FL_PROTOCOL_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/data.hpp"
#include "otafl/model.hpp"
#include "otafl/privacy.hpp"

namespace otafl {

// Piecewise-constant regularization weight lambda_m over transmission
// index m (1-based): breakpoints are (first_m, value) with strictly
// increasing first_m, the first at m = 1, all values positive.
struct LambdaSchedule {
  std::vector<std::pair<int, double>> breakpoints;

  // Staircase used by the desk experiments:
  // 0.15 for m in [1,25], 0.4 in [26,50], 0.9 in [51,75], 1.9 from 76.
  static LambdaSchedule staircase();

  double at(int m) const;
};

void validate(const LambdaSchedule& schedule);

struct GlobalSchedule {
  Algorithm algorithm = Algorithm::kFedAvg;
  int rounds = 0;  // M: number of uplink transmissions
  LambdaSchedule lambda;

  // Logical global iterations: 2M for Upcycled, M otherwise.
  int total_iterations() const {
    return algorithm == Algorithm::kUpcycled ? 2 * rounds : rounds;
  }
};

void validate(const GlobalSchedule& schedule);

// w_new = w_prev + effective_sum + jammer_term + noise_term.  The latter
// two spans may be empty (treated as zero); nonempty spans must match
// w_prev's dimension.
ModelParams odd_global_update(const ModelParams& w_prev,
                              std::span<const double> effective_sum,
                              std::span<const double> jammer_term,
                              std::span<const double> noise_term);

// w^{2m} = w_odd + mu/(mu + lambda_m) * (w_odd - w_prev_even).
// Requires mu + lambda_m > 0.
ModelParams even_global_update(const ModelParams& w_odd,
                               const ModelParams& w_prev_even, double mu,
                               double lambda_m);

enum class AlphaUMode { kDynamic, kFixed };
enum class ServerRescale { kNone, kTauOnly };

struct PowerOptions {
  AlphaUMode mode = AlphaUMode::kDynamic;
  double alpha_u_fixed = 1.0;  // used when mode == kFixed
  // Undoes the 1/tau attenuation that clipping-aware power control puts
  // on every client weight by multiplying the whole received update by
  // tau at the server (a post-processing step, so privacy is unaffected).
  ServerRescale rescale = ServerRescale::kNone;
};

// Per-run jammer decision.  When enabled, each transmission tops the
// effective noise up to `noise_floor` (sigma*^2); margin >= 1 scales the
// resulting amplitude.
struct JammerPlan {
  bool enabled = false;
  double noise_floor = 0.0;
  double margin = 1.0;
};

struct TrainerOptions {
  PowerOptions power;
  JammerPlan jammer;
  double sigma_c = 1.0;
  double h_cj_override = 0.0;  // > 0 pins |h_cj| instead of the fading draw
  int threads = 1;
};

// One metrics row per global iteration.
struct RoundMetrics {
  int iteration = 0;
  bool transmitted = false;
  double train_loss = 0.0;     // weighted train loss at the new global model
  double test_acc = 0.0;       // NaN when no test set is attached
  double eps_bound = 0.0;      // ledger upper bound; +inf when degenerate
  double eps_max_client = 0.0; // max_i epsilon_for_client
  double jammer_var = 0.0;     // receive-side jammer variance this round
  double avg_tx_power = 0.0;   // mean_i ||x_i||^2
  std::int64_t wall_ms = 0;
};

// Holds the evolving global model, the clients, and the privacy ledger,
// and advances them one global iteration at a time.
class Trainer {
 public:
  // `test_set` may be null (test_acc reported as NaN).  Throws
  // InvalidInputError / ConfigError on inconsistent inputs.
  Trainer(GlobalSchedule schedule, LocalHyper hyper,
          std::vector<ClientRecord> clients, ModelParams init,
          TrainerOptions options, double delta, std::uint64_t seed,
          const Dataset* test_set);

  // Executes global iteration `iteration_index` (must be the next one,
  // 1-based) and returns its metrics row.
  RoundMetrics run_round(int iteration_index);

  int iterations_done() const { return iteration_; }
  bool done() const { return iteration_ >= schedule_.total_iterations(); }

  const ModelParams& global() const { return global_; }
  const ModelParams& prev_even() const { return prev_even_; }
  const PrivacyLedger& ledger() const { return ledger_; }
  const std::vector<ClientRecord>& clients() const { return clients_; }
  std::int64_t data_total() const { return ledger_.data_total(); }

  // Run-level diagnostics accumulated across transmissions.
  double max_power_ratio() const { return max_power_ratio_; }
  double min_s() const { return min_s_; }
  double min_alpha_u() const { return min_alpha_u_; }
  const std::vector<double>& sigma_history() const { return sigma_history_; }
  const std::vector<double>& alpha_u_history() const { return alpha_u_history_; }
  const std::vector<std::pair<double, double>>& jammer_history() const {
    return jammer_history_;  // (|h_cj|, alpha_cj) per transmission
  }

 private:
  RoundMetrics transmit_round(int iteration, int m);
  RoundMetrics extrapolate_round(int iteration, int m);
  void fill_eval_fields(RoundMetrics& row) const;

  GlobalSchedule schedule_;
  LocalHyper hyper_;
  std::vector<ClientRecord> clients_;
  TrainerOptions options_;
  std::uint64_t seed_;
  const Dataset* test_set_;

  ModelParams global_;
  ModelParams prev_even_;  // Upcycled: last even-iteration model
  PrivacyLedger ledger_;
  int iteration_ = 0;

  double max_power_ratio_ = 0.0;
  double min_s_ = std::numeric_limits<double>::infinity();
  double min_alpha_u_ = std::numeric_limits<double>::infinity();
  std::vector<double> sigma_history_;
  std::vector<double> alpha_u_history_;
  std::vector<std::pair<double, double>> jammer_history_;
};

}  // namespace otafl

#endif  // OTAFL_FL_PROTOCOL_HPP_
