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

#include "otafl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "otafl/errors.hpp"
#include "otafl/power_control.hpp"
#include "otafl/rng.hpp"
#include "otafl/svg.hpp"

namespace otafl {
namespace {

namespace fs = std::filesystem;

constexpr char kMetricsHeader[] =
    "iter,transmitted,train_loss,test_acc,eps_bound,eps_max_client,"
    "jammer_var,avg_tx_power,wall_ms";

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "experiment.algorithm", "experiment.rounds", "experiment.seeds",
      "experiment.output_dir", "experiment.threads", "experiment.emit_plots",
      "data.preset", "data.num_clients", "data.n_min", "data.n_max",
      "data.feat_dim", "data.classes", "data.partition",
      "data.shards_per_client", "data.test_frac", "data.import_path",
      "model.hidden", "model.bias",
      "local.lr", "local.momentum", "local.epochs", "local.batch_size",
      "local.mu", "local.tau",
      "lambda.schedule",
      "channel.snr_db", "channel.sigma_c",
      "power.alpha_u_mode", "power.alpha_u", "power.alpha_u_ref",
      "power.server_rescale",
      "privacy.delta", "privacy.eps_target", "privacy.jammer_mode",
      "privacy.jammer_margin", "privacy.h_cj",
      "bound.enabled", "bound.smoothness", "bound.dissimilarity",
      "bound.growth", "bound.iterate_gap", "bound.grad_bound", "bound.kappa",
      "bound.f0_minus_fstar", "bound.estimate",
  };
  return keys;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError(what + " is not a number: " + s);
  return v;
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "fedavg") return Algorithm::kFedAvg;
  if (s == "fedprox") return Algorithm::kFedProx;
  if (s == "upcycled") return Algorithm::kUpcycled;
  throw ConfigError("unknown algorithm: " + s +
                    " (expected fedavg, fedprox, or upcycled)");
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kFedAvg: return "fedavg";
    case Algorithm::kFedProx: return "fedprox";
    case Algorithm::kUpcycled: return "upcycled";
  }
  return "?";
}

PartitionMode parse_partition(const std::string& s) {
  if (s == "iid") return PartitionMode::kIid;
  if (s == "label_shard") return PartitionMode::kLabelShard;
  throw ConfigError("unknown partition mode: " + s +
                    " (expected iid or label_shard)");
}

AlphaUMode parse_alpha_mode(const std::string& s) {
  if (s == "dynamic") return AlphaUMode::kDynamic;
  if (s == "fixed") return AlphaUMode::kFixed;
  throw ConfigError("unknown alpha_u mode: " + s +
                    " (expected dynamic or fixed)");
}

ServerRescale parse_rescale(const std::string& s) {
  if (s == "none") return ServerRescale::kNone;
  if (s == "tau_only") return ServerRescale::kTauOnly;
  throw ConfigError("unknown server rescale: " + s +
                    " (expected none or tau_only)");
}

JammerMode parse_jammer_mode(const std::string& s) {
  if (s == "auto") return JammerMode::kAuto;
  if (s == "off") return JammerMode::kOff;
  if (s == "forced") return JammerMode::kForced;
  throw ConfigError("unknown jammer mode: " + s +
                    " (expected auto, off, or forced)");
}

LambdaSchedule parse_lambda(const std::string& s) {
  LambdaSchedule sched;
  for (const std::string& part : split(s, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos)
      throw ConfigError("lambda.schedule entries must be m:value, got " + part);
    const double m = parse_number(part.substr(0, colon), "lambda breakpoint");
    const double v = parse_number(part.substr(colon + 1), "lambda value");
    sched.breakpoints.emplace_back(static_cast<int>(m), v);
  }
  try {
    validate(sched);
  } catch (const InvalidInputError& e) {
    throw ConfigError(std::string("lambda.schedule: ") + e.what());
  }
  return sched;
}

std::string format_lambda(const LambdaSchedule& sched) {
  std::string out;
  char buf[64];
  for (const auto& [m, v] : sched.breakpoints) {
    std::snprintf(buf, sizeof(buf), "%s%d:%.17g", out.empty() ? "" : ",", m, v);
    out += buf;
  }
  return out;
}

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool close_or_both_inf(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Per-seed training artifacts prior to file emission.
struct SeedRun {
  SeedResult result;
  NoiseTrace trace;
  std::vector<std::vector<double>> s_history;  // [round][client]
  std::vector<double> alpha_u_history;
  std::vector<std::pair<double, double>> jammer_history;
};

SeedRun execute_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  // Build per-client datasets and a pooled test set.
  std::vector<Dataset> per_client;
  if (!cfg.data.import_path.empty()) {
    const Dataset pool =
        load_table(cfg.data.import_path, cfg.data.feat_dim, cfg.data.classes);
    per_client = partition_pool(pool, cfg.data.num_clients, cfg.data.mode,
                                cfg.data.shards_per_client, seed);
  } else {
    SyntheticSpec spec;
    spec.num_clients = cfg.data.num_clients;
    spec.n_min = cfg.data.n_min;
    spec.n_max = cfg.data.n_max;
    spec.feat_dim = cfg.data.feat_dim;
    spec.classes = cfg.data.classes;
    spec.mode = cfg.data.mode;
    spec.shards_per_client = cfg.data.shards_per_client;
    per_client = gen_synthetic(spec, seed);
  }

  std::vector<Dataset> trains;
  Dataset test;
  test.feat_dim = cfg.data.feat_dim;
  test.classes = cfg.data.classes;
  trains.reserve(per_client.size());
  for (std::size_t i = 0; i < per_client.size(); ++i) {
    auto [tr, te] = train_test_split(per_client[i], cfg.data.test_frac,
                                     stream_key(seed, "client_split", i));
    trains.push_back(std::move(tr));
    for (std::size_t r = 0; r < te.size(); ++r)
      test.push_row(te.row(r), te.labels[r]);
  }
  std::vector<ClientRecord> records = make_client_records(std::move(trains));

  // Model and power budgets.  SNR is defined against the transmitted
  // update dimension; when sigma_c = 0 the reference noise power is 1.
  std::vector<LayerShape> shapes;
  std::size_t prev = cfg.data.feat_dim;
  for (std::size_t h : cfg.model.hidden) {
    shapes.push_back({prev, h});
    prev = h;
  }
  shapes.push_back({prev, cfg.data.classes});
  ModelParams init = init_model(shapes, cfg.model.with_bias, seed);
  const double snr_linear = std::pow(10.0, cfg.channel.snr_db / 10.0);
  const double noise_ref =
      cfg.channel.sigma_c > 0.0 ? cfg.channel.sigma_c * cfg.channel.sigma_c
                                : 1.0;
  const double power_cap =
      snr_linear * static_cast<double>(init.dim()) * noise_ref;
  std::int64_t data_total = 0;
  for (auto& r : records) {
    r.power_cap = power_cap;
    data_total += static_cast<std::int64_t>(r.train.size());
  }

  // Bound inputs that must be measured at the initial model.
  BoundProblem problem;
  if (cfg.bound.enabled) {
    problem.smoothness = cfg.bound.estimate
                             ? estimate_smoothness(records, init, 8, seed)
                             : cfg.bound.smoothness;
    problem.dissimilarity = cfg.bound.dissimilarity;
    problem.growth = cfg.bound.growth;
    problem.iterate_gap = cfg.bound.iterate_gap;
    problem.grad_bound = cfg.bound.grad_bound;
    problem.mu = cfg.hyper.mu;
    problem.tau = cfg.hyper.tau;
    problem.sigma_c = cfg.channel.sigma_c;
    problem.dim = init.dim();
    std::vector<double> kappa(records.size(), cfg.bound.kappa);
    if (cfg.bound.estimate) kappa = estimate_kappa(records, init);
    problem.kappa = kappa;
    for (const auto& r : records) problem.weights.push_back(r.weight);
    for (std::size_t i = 0; i < records.size(); ++i)
      records[i].kappa = kappa[i];
  }

  // Jammer activation is decided once per run against a fixed reference
  // scale; the per-round amplitude formula then tops the noise up to the
  // floor (and stays at zero whenever the channel alone suffices).
  JammerPlan plan;
  plan.margin = cfg.privacy.jammer_margin;
  if (cfg.privacy.eps_target) {
    const double eps = *cfg.privacy.eps_target;
    plan.noise_floor =
        required_noise_floor(eps, cfg.privacy.delta, cfg.rounds, data_total);
    switch (cfg.privacy.jammer_mode) {
      case JammerMode::kForced:
        plan.enabled = true;
        break;
      case JammerMode::kOff:
        plan.enabled = false;
        break;
      case JammerMode::kAuto: {
        const double alpha_ref =
            cfg.power.mode == AlphaUMode::kFixed
                ? cfg.power.alpha_u
                : (cfg.power.alpha_u_ref > 0.0
                       ? cfg.power.alpha_u_ref
                       : std::numeric_limits<double>::infinity());
        const double a = compute_a(eps, cfg.privacy.delta);
        plan.enabled = jammer_needed(cfg.rounds, data_total, a,
                                     cfg.privacy.delta, cfg.channel.sigma_c,
                                     alpha_ref);
        break;
      }
    }
  }

  TrainerOptions opts;
  opts.power.mode = cfg.power.mode;
  opts.power.alpha_u_fixed = cfg.power.alpha_u;
  opts.power.rescale = cfg.power.rescale;
  opts.jammer = plan;
  opts.sigma_c = cfg.channel.sigma_c;
  opts.h_cj_override = cfg.privacy.h_cj_override;
  opts.threads = cfg.threads;

  GlobalSchedule schedule{cfg.algorithm, cfg.rounds, cfg.lambda};
  Trainer trainer(schedule, cfg.hyper, std::move(records), std::move(init),
                  opts, cfg.privacy.delta, seed, &test);

  SeedRun run;
  run.result.seed = seed;
  const int total = schedule.total_iterations();
  run.result.metrics.reserve(static_cast<std::size_t>(total));
  for (int t = 1; t <= total; ++t)
    run.result.metrics.push_back(trainer.run_round(t));

  // Accounting trace: one row per iteration, s columns ordered by client.
  const auto& clients = trainer.clients();
  run.trace.delta = cfg.privacy.delta;
  run.trace.data_total = data_total;
  run.trace.num_clients = clients.size();
  std::size_t tx = 0;
  for (const auto& row : run.result.metrics) {
    NoiseTrace::Row out;
    out.iteration = row.iteration;
    out.transmitted = row.transmitted;
    out.eps_bound = row.eps_bound;
    out.eps_max_client = row.eps_max_client;
    out.s_by_client.assign(clients.size(), 0.0);
    if (row.transmitted) {
      out.sigma_eff_sq = trainer.sigma_history().at(tx);
      for (std::size_t i = 0; i < clients.size(); ++i)
        out.s_by_client[i] = clients[i].s_history.at(tx);
      ++tx;
    }
    run.trace.rows.push_back(std::move(out));
  }

  run.s_history.resize(trainer.sigma_history().size());
  for (std::size_t m = 0; m < run.s_history.size(); ++m) {
    run.s_history[m].resize(clients.size());
    for (std::size_t i = 0; i < clients.size(); ++i)
      run.s_history[m][i] = clients[i].s_history[m];
  }
  run.alpha_u_history = trainer.alpha_u_history();
  run.jammer_history = trainer.jammer_history();

  const RoundMetrics& last = run.result.metrics.back();
  run.result.final_train_loss = last.train_loss;
  run.result.final_test_acc = last.test_acc;
  run.result.eps_bound_final = last.eps_bound;
  run.result.eps_max_client_final = last.eps_max_client;
  run.result.max_power_ratio = trainer.max_power_ratio();
  run.result.min_s = trainer.min_s();
  run.result.data_total = data_total;

  if (cfg.bound.enabled) {
    run.result.bound =
        eval_bound(problem, cfg.lambda, cfg.bound.f0_minus_fstar,
                   run.s_history, run.alpha_u_history, run.jammer_history);
  }
  return run;
}

std::map<std::string, std::string> canonical_entries(
    const ExperimentConfig& cfg) {
  std::map<std::string, std::string> e;
  e["experiment.algorithm"] = algorithm_name(cfg.algorithm);
  e["experiment.rounds"] = std::to_string(cfg.rounds);
  {
    std::string s;
    for (auto v : cfg.seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
    e["experiment.seeds"] = s;
  }
  e["experiment.output_dir"] = cfg.output_dir;
  e["experiment.threads"] = std::to_string(cfg.threads);
  e["experiment.emit_plots"] = cfg.emit_plots ? "true" : "false";
  e["data.preset"] = cfg.data.preset;
  e["data.num_clients"] = std::to_string(cfg.data.num_clients);
  e["data.n_min"] = std::to_string(cfg.data.n_min);
  e["data.n_max"] = std::to_string(cfg.data.n_max);
  e["data.feat_dim"] = std::to_string(cfg.data.feat_dim);
  e["data.classes"] = std::to_string(cfg.data.classes);
  e["data.partition"] =
      cfg.data.mode == PartitionMode::kIid ? "iid" : "label_shard";
  e["data.shards_per_client"] = std::to_string(cfg.data.shards_per_client);
  e["data.test_frac"] = fmt17(cfg.data.test_frac);
  e["data.import_path"] = cfg.data.import_path;
  {
    std::string s;
    for (auto h : cfg.model.hidden) s += (s.empty() ? "" : ",") + std::to_string(h);
    e["model.hidden"] = s;
  }
  e["model.bias"] = cfg.model.with_bias ? "true" : "false";
  e["local.lr"] = fmt17(cfg.hyper.lr);
  e["local.momentum"] = fmt17(cfg.hyper.momentum);
  e["local.epochs"] = std::to_string(cfg.hyper.local_epochs);
  e["local.batch_size"] = std::to_string(cfg.hyper.batch_size);
  e["local.mu"] = fmt17(cfg.hyper.mu);
  e["local.tau"] = fmt17(cfg.hyper.tau);
  e["lambda.schedule"] = format_lambda(cfg.lambda);
  e["channel.snr_db"] = fmt17(cfg.channel.snr_db);
  e["channel.sigma_c"] = fmt17(cfg.channel.sigma_c);
  e["power.alpha_u_mode"] =
      cfg.power.mode == AlphaUMode::kDynamic ? "dynamic" : "fixed";
  e["power.alpha_u"] = fmt17(cfg.power.alpha_u);
  e["power.alpha_u_ref"] = fmt17(cfg.power.alpha_u_ref);
  e["power.server_rescale"] =
      cfg.power.rescale == ServerRescale::kNone ? "none" : "tau_only";
  e["privacy.delta"] = fmt17(cfg.privacy.delta);
  e["privacy.eps_target"] =
      cfg.privacy.eps_target ? fmt17(*cfg.privacy.eps_target) : "none";
  e["privacy.jammer_mode"] =
      cfg.privacy.jammer_mode == JammerMode::kAuto
          ? "auto"
          : (cfg.privacy.jammer_mode == JammerMode::kOff ? "off" : "forced");
  e["privacy.jammer_margin"] = fmt17(cfg.privacy.jammer_margin);
  e["privacy.h_cj"] = fmt17(cfg.privacy.h_cj_override);
  e["bound.enabled"] = cfg.bound.enabled ? "true" : "false";
  e["bound.smoothness"] = fmt17(cfg.bound.smoothness);
  e["bound.dissimilarity"] = fmt17(cfg.bound.dissimilarity);
  e["bound.growth"] = fmt17(cfg.bound.growth);
  e["bound.iterate_gap"] = fmt17(cfg.bound.iterate_gap);
  e["bound.grad_bound"] = fmt17(cfg.bound.grad_bound);
  e["bound.kappa"] = fmt17(cfg.bound.kappa);
  e["bound.f0_minus_fstar"] = fmt17(cfg.bound.f0_minus_fstar);
  e["bound.estimate"] = cfg.bound.estimate ? "true" : "false";
  return e;
}

nlohmann::json bound_json(const BoundReport& b) {
  nlohmann::json j;
  j["applicable"] = b.applicable;
  if (b.applicable)
    j["value"] = b.value;
  else
    j["value"] = nullptr;
  j["c1"] = b.c1;
  j["c6"] = b.c6;
  return j;
}

}  // namespace

ExperimentConfig build_config(const KeyValueConfig& kv) {
  for (const std::string& key : kv.keys())
    if (!known_keys().count(key))
      throw ConfigError("unknown config key: " + key);

  ExperimentConfig cfg;
  cfg.data.preset = kv.get_string_or("data.preset", "desk");
  if (cfg.data.preset == "desk") {
    // struct defaults already describe the desk preset
  } else if (cfg.data.preset == "mnist_mlp") {
    cfg.data.num_clients = 50;
    cfg.data.n_min = 100;
    cfg.data.n_max = 200;
    cfg.data.feat_dim = 784;
    cfg.data.classes = 10;
    cfg.model.hidden = {196};
  } else {
    throw ConfigError("unknown data preset: " + cfg.data.preset +
                      " (expected desk or mnist_mlp)");
  }

  cfg.algorithm =
      parse_algorithm(kv.get_string_or("experiment.algorithm", "upcycled"));
  cfg.rounds = static_cast<int>(kv.get_int_or("experiment.rounds", cfg.rounds));
  if (kv.has("experiment.seeds")) {
    cfg.seeds.clear();
    for (const std::string& s : split(*kv.raw("experiment.seeds"), ',')) {
      const double v = parse_number(s, "experiment.seeds entry");
      if (v < 0 || v != std::floor(v))
        throw ConfigError("seeds must be non-negative integers: " + s);
      cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (cfg.seeds.empty()) throw ConfigError("experiment.seeds is empty");
  }
  cfg.output_dir = kv.get_string_or("experiment.output_dir", cfg.output_dir);
  cfg.threads = static_cast<int>(kv.get_int_or("experiment.threads", 1));
  cfg.emit_plots = kv.get_bool_or("experiment.emit_plots", true);

  cfg.data.num_clients = static_cast<std::size_t>(
      kv.get_int_or("data.num_clients", static_cast<long long>(cfg.data.num_clients)));
  cfg.data.n_min = static_cast<std::size_t>(
      kv.get_int_or("data.n_min", static_cast<long long>(cfg.data.n_min)));
  cfg.data.n_max = static_cast<std::size_t>(
      kv.get_int_or("data.n_max", static_cast<long long>(cfg.data.n_max)));
  cfg.data.feat_dim = static_cast<std::size_t>(
      kv.get_int_or("data.feat_dim", static_cast<long long>(cfg.data.feat_dim)));
  cfg.data.classes = static_cast<std::size_t>(
      kv.get_int_or("data.classes", static_cast<long long>(cfg.data.classes)));
  cfg.data.mode = parse_partition(kv.get_string_or("data.partition", "iid"));
  cfg.data.shards_per_client = static_cast<std::size_t>(
      kv.get_int_or("data.shards_per_client",
                    static_cast<long long>(cfg.data.shards_per_client)));
  cfg.data.test_frac = kv.get_double_or("data.test_frac", cfg.data.test_frac);
  cfg.data.import_path = kv.get_string_or("data.import_path", "");

  if (kv.has("model.hidden")) {
    cfg.model.hidden.clear();
    // "none" (or an empty list) drops the hidden layers entirely and
    // trains a linear softmax model.
    const std::string& raw = *kv.raw("model.hidden");
    if (!raw.empty() && raw != "none") {
      for (const std::string& s : split(raw, ',')) {
        const double v = parse_number(s, "model.hidden entry");
        if (v < 1 || v != std::floor(v))
          throw ConfigError("hidden sizes must be positive integers: " + s);
        cfg.model.hidden.push_back(static_cast<std::size_t>(v));
      }
    }
  }
  cfg.model.with_bias = kv.get_bool_or("model.bias", true);

  cfg.hyper.lr = kv.get_double_or("local.lr", cfg.hyper.lr);
  cfg.hyper.momentum = kv.get_double_or("local.momentum", cfg.hyper.momentum);
  cfg.hyper.local_epochs =
      static_cast<int>(kv.get_int_or("local.epochs", cfg.hyper.local_epochs));
  cfg.hyper.batch_size = static_cast<std::size_t>(
      kv.get_int_or("local.batch_size",
                    static_cast<long long>(cfg.hyper.batch_size)));
  const double default_mu = cfg.algorithm == Algorithm::kFedAvg ? 0.0 : 0.1;
  cfg.hyper.mu = kv.get_double_or("local.mu", default_mu);
  cfg.hyper.tau = kv.get_double_or("local.tau", cfg.hyper.tau);

  if (kv.has("lambda.schedule"))
    cfg.lambda = parse_lambda(*kv.raw("lambda.schedule"));

  cfg.channel.snr_db = kv.get_double_or("channel.snr_db", cfg.channel.snr_db);
  cfg.channel.sigma_c =
      kv.get_double_or("channel.sigma_c", cfg.channel.sigma_c);

  cfg.power.mode =
      parse_alpha_mode(kv.get_string_or("power.alpha_u_mode", "dynamic"));
  cfg.power.alpha_u = kv.get_double_or("power.alpha_u", cfg.power.alpha_u);
  cfg.power.alpha_u_ref =
      kv.get_double_or("power.alpha_u_ref", cfg.power.alpha_u_ref);
  cfg.power.rescale =
      parse_rescale(kv.get_string_or("power.server_rescale", "none"));

  cfg.privacy.delta = kv.get_double_or("privacy.delta", cfg.privacy.delta);
  const std::string eps = kv.get_string_or("privacy.eps_target", "none");
  if (eps != "none" && eps != "inf" && !eps.empty())
    cfg.privacy.eps_target = parse_number(eps, "privacy.eps_target");
  cfg.privacy.jammer_mode =
      parse_jammer_mode(kv.get_string_or("privacy.jammer_mode", "auto"));
  cfg.privacy.jammer_margin =
      kv.get_double_or("privacy.jammer_margin", cfg.privacy.jammer_margin);
  cfg.privacy.h_cj_override = kv.get_double_or("privacy.h_cj", 0.0);

  cfg.bound.enabled = kv.get_bool_or("bound.enabled", false);
  cfg.bound.smoothness =
      kv.get_double_or("bound.smoothness", cfg.bound.smoothness);
  cfg.bound.dissimilarity =
      kv.get_double_or("bound.dissimilarity", cfg.bound.dissimilarity);
  cfg.bound.growth = kv.get_double_or("bound.growth", cfg.bound.growth);
  cfg.bound.iterate_gap =
      kv.get_double_or("bound.iterate_gap", cfg.bound.iterate_gap);
  cfg.bound.grad_bound =
      kv.get_double_or("bound.grad_bound", cfg.bound.grad_bound);
  cfg.bound.kappa = kv.get_double_or("bound.kappa", cfg.bound.kappa);
  cfg.bound.f0_minus_fstar =
      kv.get_double_or("bound.f0_minus_fstar", cfg.bound.f0_minus_fstar);
  cfg.bound.estimate = kv.get_bool_or("bound.estimate", false);

  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<std::string>& overrides) {
  KeyValueConfig kv = KeyValueConfig::parse_file(path);
  for (const std::string& o : overrides) kv.set_override(o);
  return build_config(kv);
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.rounds < 1) fail("experiment.rounds must be at least 1");
  if (cfg.seeds.empty()) fail("experiment.seeds must be nonempty");
  if (cfg.threads < 1) fail("experiment.threads must be at least 1");
  if (cfg.data.num_clients == 0) fail("data.num_clients must be positive");
  if (cfg.data.import_path.empty()) {
    if (cfg.data.n_min == 0 || cfg.data.n_min > cfg.data.n_max)
      fail("data.n_min/n_max must satisfy 1 <= n_min <= n_max");
  }
  if (cfg.data.feat_dim == 0) fail("data.feat_dim must be positive");
  if (cfg.data.classes < 2) fail("data.classes must be at least 2");
  if (!(cfg.data.test_frac >= 0.0 && cfg.data.test_frac < 1.0))
    fail("data.test_frac must lie in [0, 1)");
  if (cfg.data.mode == PartitionMode::kLabelShard &&
      cfg.data.shards_per_client == 0)
    fail("data.shards_per_client must be positive");
  // An empty hidden list is allowed: the model degenerates to linear
  // softmax regression.
  try {
    validate(cfg.hyper, cfg.algorithm);
    if (cfg.algorithm == Algorithm::kUpcycled) validate(cfg.lambda);
  } catch (const InvalidInputError& e) {
    fail(e.what());
  }
  if (cfg.hyper.local_epochs < 1) fail("local.epochs must be at least 1");
  if (!(cfg.channel.sigma_c >= 0.0)) fail("channel.sigma_c must be non-negative");
  if (cfg.power.mode == AlphaUMode::kFixed && !(cfg.power.alpha_u > 0.0))
    fail("power.alpha_u must be positive in fixed mode");
  if (cfg.power.alpha_u_ref < 0.0) fail("power.alpha_u_ref must be non-negative");
  if (!(cfg.privacy.delta > 0.0 && cfg.privacy.delta < 1.0))
    fail("privacy.delta must lie in (0, 1)");
  if (cfg.privacy.eps_target && !(*cfg.privacy.eps_target > 0.0))
    fail("privacy.eps_target must be positive");
  if (!(cfg.privacy.jammer_margin >= 1.0))
    fail("privacy.jammer_margin must be at least 1");
  if (cfg.privacy.h_cj_override < 0.0) fail("privacy.h_cj must be non-negative");
  if (cfg.privacy.eps_target && cfg.channel.sigma_c == 0.0 &&
      cfg.privacy.jammer_mode == JammerMode::kOff)
    fail("privacy.eps_target cannot be met with sigma_c = 0 and the jammer off");
  if (cfg.bound.enabled && cfg.algorithm != Algorithm::kUpcycled)
    fail("bound evaluation requires the upcycled algorithm");
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  fs::create_directories(cfg.output_dir);

  RunResult result;
  result.output_dir = cfg.output_dir;
  std::vector<SeedRun> runs;
  runs.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) runs.push_back(execute_seed(cfg, seed));

  for (auto& run : runs) {
    const std::string tag = std::to_string(run.result.seed);
    run.result.metrics_path =
        (fs::path(cfg.output_dir) / ("metrics_" + tag + ".csv")).string();
    run.result.noise_path =
        (fs::path(cfg.output_dir) / ("noise_" + tag + ".csv")).string();
    emit_csv(run.result.metrics, run.result.metrics_path);
    emit_noise_csv(run.trace, run.result.noise_path);

    // Every epsilon this run emitted must replay from its own artifacts.
    const NoiseTrace replayed = read_noise_csv(run.result.noise_path);
    const auto [eps_bound, eps_max] = replay_accounting(replayed);
    if (!close_or_both_inf(eps_bound, run.result.eps_bound_final, 1e-12) ||
        !close_or_both_inf(eps_max, run.result.eps_max_client_final, 1e-12))
      throw InvariantViolationError(
          "accounting replay mismatch for seed " + tag);
  }

  // Aggregate final test accuracy across seeds.
  double mean = 0.0;
  for (const auto& run : runs) mean += run.result.final_test_acc;
  mean /= static_cast<double>(runs.size());
  double var = 0.0;
  for (const auto& run : runs) {
    const double dev = run.result.final_test_acc - mean;
    var += dev * dev;
  }
  var /= static_cast<double>(runs.size());
  result.mean_final_test_acc = mean;
  result.std_final_test_acc = std::sqrt(var);

  // summary.json
  nlohmann::json summary;
  summary["schema"] = "otafl-run-1";
  {
    nlohmann::json jcfg;
    for (const auto& [k, v] : canonical_entries(cfg)) jcfg[k] = v;
    summary["config"] = jcfg;
  }
  summary["seeds"] = nlohmann::json::array();
  for (const auto& run : runs) {
    nlohmann::json js;
    js["seed"] = run.result.seed;
    js["data_total"] = run.result.data_total;
    js["final_train_loss"] = run.result.final_train_loss;
    js["final_test_acc"] = run.result.final_test_acc;
    js["eps_bound"] = std::isinf(run.result.eps_bound_final)
                          ? nlohmann::json("inf")
                          : nlohmann::json(run.result.eps_bound_final);
    js["eps_max_client"] = std::isinf(run.result.eps_max_client_final)
                               ? nlohmann::json("inf")
                               : nlohmann::json(run.result.eps_max_client_final);
    js["max_power_ratio"] = run.result.max_power_ratio;
    js["min_s"] = run.result.min_s;
    int active = 0;
    for (const auto& [h, a] : run.jammer_history)
      if (a > 0.0) ++active;
    js["jammer_active_rounds"] = active;
    if (cfg.bound.enabled) js["bound"] = bound_json(run.result.bound);
    js["files"] = {{"metrics", run.result.metrics_path},
                   {"noise", run.result.noise_path}};
    summary["seeds"].push_back(js);
  }
  summary["aggregate"] = {{"num_seeds", runs.size()},
                          {"mean_final_test_acc", result.mean_final_test_acc},
                          {"std_final_test_acc", result.std_final_test_acc}};

  result.summary_path =
      (fs::path(cfg.output_dir) / "summary.json").string();
  {
    std::ofstream out(result.summary_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + result.summary_path);
    out << summary.dump(2) << "\n";
  }

  // curves.svg
  if (cfg.emit_plots) {
    const auto series_of = [&](auto field) {
      std::vector<Series> out;
      for (const auto& run : runs) {
        Series s;
        s.label = "seed " + std::to_string(run.result.seed);
        for (const auto& row : run.result.metrics) {
          s.xs.push_back(row.iteration);
          s.ys.push_back(field(row));
        }
        out.push_back(std::move(s));
      }
      return out;
    };
    std::vector<Chart> charts(3);
    charts[0] = {"Test accuracy", "iteration", "accuracy",
                 series_of([](const RoundMetrics& r) { return r.test_acc; })};
    charts[1] = {"Train loss", "iteration", "loss",
                 series_of([](const RoundMetrics& r) { return r.train_loss; })};
    charts[2] = {"Privacy spend (upper bound)", "iteration", "epsilon",
                 series_of([](const RoundMetrics& r) { return r.eps_bound; })};
    result.svg_path = (fs::path(cfg.output_dir) / "curves.svg").string();
    emit_svg(charts, result.svg_path);
  }

  for (auto& run : runs) result.seeds.push_back(std::move(run.result));
  return result;
}

void emit_csv(std::span<const RoundMetrics> rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write metrics file: " + path);
  out << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << (r.transmitted ? 1 : 0) << ','
        << fmt9(r.train_loss) << ',' << fmt9(r.test_acc) << ','
        << fmt9(r.eps_bound) << ',' << fmt9(r.eps_max_client) << ','
        << fmt9(r.jammer_var) << ',' << fmt9(r.avg_tx_power) << ','
        << r.wall_ms << "\n";
  }
  if (!out) throw ConfigError("failed writing metrics file: " + path);
}

std::vector<RoundMetrics> parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      (line != kMetricsHeader && line != std::string(kMetricsHeader) + "\r"))
    throw ConfigError("bad metrics header in " + path);
  std::vector<RoundMetrics> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 9)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 9 columns");
    RoundMetrics r;
    r.iteration = static_cast<int>(parse_number(cols[0], "iter"));
    r.transmitted = parse_number(cols[1], "transmitted") != 0.0;
    r.train_loss = parse_number(cols[2], "train_loss");
    r.test_acc = parse_number(cols[3], "test_acc");
    r.eps_bound = parse_number(cols[4], "eps_bound");
    r.eps_max_client = parse_number(cols[5], "eps_max_client");
    r.jammer_var = parse_number(cols[6], "jammer_var");
    r.avg_tx_power = parse_number(cols[7], "avg_tx_power");
    r.wall_ms = static_cast<std::int64_t>(parse_number(cols[8], "wall_ms"));
    rows.push_back(r);
  }
  return rows;
}

void emit_noise_csv(const NoiseTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write accounting file: " + path);
  out << "# delta=" << fmt17(trace.delta)
      << " data_size=" << trace.data_total << "\n";
  out << "iter,transmitted,sigma_eff_sq,eps_bound,eps_max_client";
  for (std::size_t i = 1; i <= trace.num_clients; ++i) out << ",s_" << i;
  out << "\n";
  for (const auto& r : trace.rows) {
    if (r.s_by_client.size() != trace.num_clients)
      throw InvalidInputError("accounting row has wrong client count");
    out << r.iteration << ',' << (r.transmitted ? 1 : 0) << ','
        << fmt17(r.sigma_eff_sq) << ',' << fmt17(r.eps_bound) << ','
        << fmt17(r.eps_max_client);
    for (double s : r.s_by_client) out << ',' << fmt17(s);
    out << "\n";
  }
  if (!out) throw ConfigError("failed writing accounting file: " + path);
}

NoiseTrace read_noise_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open accounting file: " + path);
  NoiseTrace trace;
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("empty accounting file: " + path);
  {
    long long data_total = 0;
    double delta = 0.0;
    if (std::sscanf(line.c_str(), "# delta=%lf data_size=%lld", &delta,
                    &data_total) != 2)
      throw ConfigError(path + ": first line must carry delta and data_size");
    trace.delta = delta;
    trace.data_total = data_total;
  }
  if (!std::getline(in, line))
    throw ConfigError(path + ": missing column header");
  {
    const auto cols = split(line, ',');
    if (cols.size() < 6 || cols[0] != "iter" || cols[1] != "transmitted" ||
        cols[2] != "sigma_eff_sq" || cols[3] != "eps_bound" ||
        cols[4] != "eps_max_client")
      throw ConfigError(path + ": unexpected column header");
    trace.num_clients = cols.size() - 5;
  }
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != trace.num_clients + 5)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": wrong column count");
    NoiseTrace::Row r;
    r.iteration = static_cast<int>(parse_number(cols[0], "iter"));
    r.transmitted = parse_number(cols[1], "transmitted") != 0.0;
    r.sigma_eff_sq = parse_number(cols[2], "sigma_eff_sq");
    r.eps_bound = parse_number(cols[3], "eps_bound");
    r.eps_max_client = parse_number(cols[4], "eps_max_client");
    for (std::size_t i = 0; i < trace.num_clients; ++i)
      r.s_by_client.push_back(parse_number(cols[5 + i], "s"));
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

std::pair<double, double> replay_accounting(const NoiseTrace& trace,
                                            double tol) {
  if (trace.num_clients == 0) throw InvalidInputError("trace has no clients");
  PrivacyLedger ledger(trace.delta, trace.data_total, trace.num_clients);
  double eps_bound = 0.0;
  double eps_max = 0.0;
  for (const auto& r : trace.rows) {
    if (r.transmitted) {
      if (r.sigma_eff_sq > 0.0) {
        ledger.record_round({r.sigma_eff_sq}, r.s_by_client);
      } else {
        ledger.mark_degenerate();
      }
    }
    eps_bound = ledger.epsilon_upper_bound();
    eps_max = 0.0;
    for (std::size_t i = 0; i < trace.num_clients; ++i)
      eps_max = std::max(eps_max, ledger.epsilon_for_client(i));
    if (!close_or_both_inf(eps_bound, r.eps_bound, tol) ||
        !close_or_both_inf(eps_max, r.eps_max_client, tol))
      throw InvariantViolationError(
          "accounting replay diverged at iteration " +
          std::to_string(r.iteration));
  }
  return {eps_bound, eps_max};
}

}  // namespace otafl
