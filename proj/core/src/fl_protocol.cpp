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

#include "otafl/fl_protocol.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <utility>

#include "otafl/errors.hpp"
#include "otafl/linalg.hpp"
#include "otafl/power_control.hpp"
#include "otafl/rng.hpp"

namespace otafl {
namespace {

// Runs fn(i) for i in [0, n) across up to `threads` workers on contiguous
// chunks.  Results must be written to disjoint slots; the first exception
// is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t base = n / workers;
  const std::size_t rem = n % workers;
  std::size_t at = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t take = base + (w < rem ? 1 : 0);
    const std::size_t lo = at;
    const std::size_t hi = at + take;
    at = hi;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

LambdaSchedule LambdaSchedule::staircase() {
  return {{{1, 0.15}, {26, 0.4}, {51, 0.9}, {76, 1.9}}};
}

double LambdaSchedule::at(int m) const {
  if (m < 1) throw InvalidInputError("transmission index must be >= 1");
  validate(*this);
  double value = breakpoints.front().second;
  for (const auto& [first_m, v] : breakpoints) {
    if (first_m > m) break;
    value = v;
  }
  return value;
}

void validate(const LambdaSchedule& schedule) {
  if (schedule.breakpoints.empty())
    throw InvalidInputError("lambda schedule is empty");
  if (schedule.breakpoints.front().first != 1)
    throw InvalidInputError("lambda schedule must start at m = 1");
  int prev = 0;
  for (const auto& [first_m, v] : schedule.breakpoints) {
    if (first_m <= prev)
      throw InvalidInputError("lambda breakpoints must strictly increase");
    if (!(v > 0.0)) throw InvalidInputError("lambda values must be positive");
    prev = first_m;
  }
}

void validate(const GlobalSchedule& schedule) {
  if (schedule.rounds < 1) throw InvalidInputError("rounds must be at least 1");
  if (schedule.algorithm == Algorithm::kUpcycled) validate(schedule.lambda);
}

ModelParams odd_global_update(const ModelParams& w_prev,
                              std::span<const double> effective_sum,
                              std::span<const double> jammer_term,
                              std::span<const double> noise_term) {
  if (effective_sum.size() != w_prev.dim())
    throw InvalidInputError("effective_sum dimension mismatch");
  if (!jammer_term.empty() && jammer_term.size() != w_prev.dim())
    throw InvalidInputError("jammer_term dimension mismatch");
  if (!noise_term.empty() && noise_term.size() != w_prev.dim())
    throw InvalidInputError("noise_term dimension mismatch");
  ModelParams w = w_prev;
  axpy(1.0, effective_sum, w.values);
  if (!jammer_term.empty()) axpy(1.0, jammer_term, w.values);
  if (!noise_term.empty()) axpy(1.0, noise_term, w.values);
  return w;
}

ModelParams even_global_update(const ModelParams& w_odd,
                               const ModelParams& w_prev_even, double mu,
                               double lambda_m) {
  if (w_odd.dim() != w_prev_even.dim())
    throw InvalidInputError("model dimension mismatch");
  if (!(mu + lambda_m > 0.0))
    throw InvalidInputError("mu + lambda must be positive");
  const double coef = mu / (mu + lambda_m);
  ModelParams w = w_odd;
  for (std::size_t j = 0; j < w.values.size(); ++j)
    w.values[j] += coef * (w_odd.values[j] - w_prev_even.values[j]);
  return w;
}

Trainer::Trainer(GlobalSchedule schedule, LocalHyper hyper,
                 std::vector<ClientRecord> clients, ModelParams init,
                 TrainerOptions options, double delta, std::uint64_t seed,
                 const Dataset* test_set)
    : schedule_(std::move(schedule)),
      hyper_(hyper),
      clients_(std::move(clients)),
      options_(options),
      seed_(seed),
      test_set_(test_set),
      global_(std::move(init)),
      prev_even_(global_),
      ledger_(delta, [&] {
        if (clients_.empty()) throw InvalidInputError("no clients");
        std::int64_t total = 0;
        for (const auto& c : clients_)
          total += static_cast<std::int64_t>(c.train.size());
        return total;
      }(), clients_.size()) {
  validate(schedule_);
  validate(hyper_, schedule_.algorithm);
  if (!(options_.sigma_c >= 0.0))
    throw InvalidInputError("sigma_c must be non-negative");
  if (options_.power.mode == AlphaUMode::kFixed &&
      !(options_.power.alpha_u_fixed > 0.0))
    throw InvalidInputError("fixed alpha_u must be positive");
  if (options_.jammer.enabled && !(options_.jammer.noise_floor > 0.0))
    throw InvalidInputError("enabled jammer needs a positive noise floor");
  if (!(options_.jammer.margin >= 1.0))
    throw InvalidInputError("jammer margin must be at least 1");
  double weight_sum = 0.0;
  for (const auto& c : clients_) {
    if (c.train.empty()) throw InvalidInputError("client has no training data");
    if (!(c.weight > 0.0)) throw InvalidInputError("client weight must be positive");
    if (!(c.power_cap > 0.0))
      throw InvalidInputError("client power cap must be positive");
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-6)
    throw InvalidInputError("client weights must sum to 1");
  require_finite(global_, "init");
  if (test_set_ && test_set_->empty()) test_set_ = nullptr;
}

RoundMetrics Trainer::run_round(int iteration_index) {
  if (iteration_index != iteration_ + 1)
    throw InvalidInputError("iterations must be executed in order");
  if (iteration_index > schedule_.total_iterations())
    throw InvalidInputError("schedule is already complete");
  iteration_ = iteration_index;
  if (schedule_.algorithm == Algorithm::kUpcycled && iteration_index % 2 == 0)
    return extrapolate_round(iteration_index, iteration_index / 2);
  const int m = schedule_.algorithm == Algorithm::kUpcycled
                    ? (iteration_index + 1) / 2
                    : iteration_index;
  return transmit_round(iteration_index, m);
}

RoundMetrics Trainer::transmit_round(int iteration, int m) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t k = clients_.size();
  const double tau = hyper_.tau;

  ChannelDraw draw = draw_channels(k, m, seed_, options_.sigma_c);
  if (options_.h_cj_override > 0.0) draw.jammer_gain = options_.h_cj_override;

  double alpha_u = options_.power.alpha_u_fixed;
  if (options_.power.mode == AlphaUMode::kDynamic) {
    std::vector<double> caps(k), weights(k);
    for (std::size_t i = 0; i < k; ++i) {
      caps[i] = clients_[i].power_cap;
      weights[i] = clients_[i].weight;
    }
    alpha_u = dynamic_alpha_u(draw.gains, caps, weights, tau);
  }

  // Local solves and clipping, parallel over clients; everything a worker
  // touches is keyed by (seed, client, m), so the schedule cannot change
  // the outcome.
  std::vector<std::vector<double>> clipped(k);
  parallel_for(k, options_.threads, [&](std::size_t i) {
    ModelParams local = local_solve(global_, clients_[i], hyper_,
                                    schedule_.algorithm, seed_, m);
    clipped[i] =
        clip_update(subtract(local.values, global_.values), tau);
  });

  std::vector<double> s(k);
  std::vector<std::vector<double>> signals(k);
  double power_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    s[i] = compute_s(alpha_u, clients_[i].weight, draw.gains[i],
                     clients_[i].power_cap);
    const double alpha_i = client_pc_factor(alpha_u, clients_[i].weight,
                                            draw.gains[i], tau, s[i]);
    signals[i] = build_transmit_signal(alpha_i, clipped[i]);
    const double tx_power = squared_norm(signals[i]);
    power_sum += tx_power;
    const double ratio = tx_power / clients_[i].power_cap;
    if (!check_power(signals[i], clients_[i].power_cap))
      throw InvariantViolationError(
          "client " + std::to_string(clients_[i].id) +
          " exceeded its power cap on transmission " + std::to_string(m));
    max_power_ratio_ = std::max(max_power_ratio_, ratio);
    min_s_ = std::min(min_s_, s[i]);
    clients_[i].s_history.push_back(s[i]);
  }
  min_alpha_u_ = std::min(min_alpha_u_, alpha_u);

  double alpha_cj = 0.0;
  std::vector<double> jammer_signal;
  if (options_.jammer.enabled) {
    alpha_cj = options_.jammer.margin *
               jammer_amplitude_for_floor(options_.jammer.noise_floor, alpha_u,
                                          draw.jammer_gain, options_.sigma_c);
    if (alpha_cj > 0.0) {
      jammer_signal.resize(global_.dim());
      StreamRng rng(seed_, "jammer", static_cast<std::uint64_t>(m));
      rng.fill_normal(jammer_signal, alpha_cj);
    }
  }

  std::vector<double> received =
      ota_aggregate(signals, draw,
                    jammer_signal.empty() ? nullptr : &jammer_signal, seed_);
  scale(received, 1.0 / alpha_u);
  if (options_.power.rescale == ServerRescale::kTauOnly)
    scale(received, tau);
  global_ = odd_global_update(global_, received, {}, {});
  require_finite(global_, "global update");

  const double jammer_var =
      (alpha_cj * draw.jammer_gain / alpha_u) * (alpha_cj * draw.jammer_gain / alpha_u);
  const double sigma_eff =
      jammer_var + (options_.sigma_c / alpha_u) * (options_.sigma_c / alpha_u);
  if (sigma_eff > 0.0) {
    ledger_.record_round({sigma_eff}, s);
  } else {
    ledger_.mark_degenerate();
  }
  sigma_history_.push_back(sigma_eff);
  alpha_u_history_.push_back(alpha_u);
  jammer_history_.emplace_back(draw.jammer_gain, alpha_cj);

  RoundMetrics row;
  row.iteration = iteration;
  row.transmitted = true;
  row.jammer_var = jammer_var;
  row.avg_tx_power = power_sum / static_cast<double>(k);
  fill_eval_fields(row);
  row.wall_ms = elapsed_ms(start);
  return row;
}

RoundMetrics Trainer::extrapolate_round(int iteration, int m) {
  const auto start = std::chrono::steady_clock::now();
  const double lambda_m = schedule_.lambda.at(m);
  ModelParams next = even_global_update(global_, prev_even_, hyper_.mu, lambda_m);
  prev_even_ = next;
  global_ = std::move(next);
  require_finite(global_, "extrapolation");

  RoundMetrics row;
  row.iteration = iteration;
  row.transmitted = false;
  fill_eval_fields(row);
  row.wall_ms = elapsed_ms(start);
  return row;
}

void Trainer::fill_eval_fields(RoundMetrics& row) const {
  double loss = 0.0;
  for (const auto& c : clients_)
    loss += c.weight * forward_loss(global_, c.train);
  row.train_loss = loss;
  row.test_acc = test_set_ ? accuracy(global_, *test_set_)
                           : std::numeric_limits<double>::quiet_NaN();
  row.eps_bound = ledger_.epsilon_upper_bound();
  double worst = 0.0;
  for (std::size_t i = 0; i < clients_.size(); ++i)
    worst = std::max(worst, ledger_.epsilon_for_client(i));
  row.eps_max_client = worst;
}

}  // namespace otafl
