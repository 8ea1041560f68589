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
// Command-line front end for the over-the-air federated learning
// simulator.  Subcommands:
//
//   run            train under a config file and emit metrics/accounting
//   design-jammer  size the cooperative jammer for an (eps, delta) target
//   accountant     replay a noise trace and re-derive its privacy spend
//
// Exit codes: 0 on success, 1 for configuration problems, 2 when a
// runtime invariant is violated.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otafl/errors.hpp"
#include "otafl/power_control.hpp"
#include "otafl/runner.hpp"

namespace {

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& overrides) {
  otafl::ExperimentConfig cfg =
      otafl::parse_config_file(config_path, overrides);
  if (const char* dir = std::getenv("OTAFL_OUTPUT_DIR"); dir && *dir)
    cfg.output_dir = dir;
  const otafl::RunResult res = otafl::run_experiment(cfg);
  for (const auto& s : res.seeds) {
    std::printf("seed %llu: train_loss=%.9g test_acc=%.9g eps=%.9g "
                "eps_max_client=%.9g\n",
                static_cast<unsigned long long>(s.seed), s.final_train_loss,
                s.final_test_acc, s.eps_bound_final, s.eps_max_client_final);
    if (s.bound.applicable)
      std::printf("seed %llu: convergence_bound=%.9g\n",
                  static_cast<unsigned long long>(s.seed), s.bound.value);
  }
  std::printf("final_test_acc: mean=%.9g std=%.9g over %zu seed(s)\n",
              res.mean_final_test_acc, res.std_final_test_acc,
              res.seeds.size());
  std::printf("wrote %s\n", res.summary_path.c_str());
  if (!res.svg_path.empty()) std::printf("wrote %s\n", res.svg_path.c_str());
  return 0;
}

int cmd_design_jammer(double eps, double delta, long long rounds,
                      long long data_size, double alpha_u, double h_cj,
                      double sigma_c) {
  if (rounds < 1 || rounds > std::numeric_limits<int>::max())
    throw otafl::InvalidInputError("rounds out of range");
  const int m = static_cast<int>(rounds);
  const double a = otafl::compute_a(eps, delta);
  const double floor = otafl::required_noise_floor(eps, delta, m, data_size);
  const double channel_var = sigma_c * sigma_c / (alpha_u * alpha_u);
  const double alpha_cj =
      otafl::jammer_amplitude_for_floor(floor, alpha_u, h_cj, sigma_c);
  const double jammer_var =
      alpha_cj * alpha_cj * h_cj * h_cj / (alpha_u * alpha_u);
  std::printf("a = %.9g\n", a);
  std::printf("noise_floor = %.9g\n", floor);
  std::printf("channel_var = %.9g\n", channel_var);
  std::printf("jammer_var = %.9g\n", jammer_var);
  std::printf("alpha_cj = %.9g\n", alpha_cj);
  std::printf("jammer_needed = %s\n", alpha_cj > 0.0 ? "yes" : "no");
  return 0;
}

int cmd_accountant(const std::string& path) {
  const otafl::NoiseTrace trace = otafl::read_noise_csv(path);
  const auto [eps_bound, eps_max] = otafl::replay_accounting(trace);
  std::size_t transmitted = 0;
  for (const auto& r : trace.rows)
    if (r.transmitted) ++transmitted;
  std::printf("rows = %zu (transmitted %zu)\n", trace.rows.size(),
              transmitted);
  std::printf("delta = %.9g data_size = %lld clients = %zu\n", trace.delta,
              static_cast<long long>(trace.data_total), trace.num_clients);
  std::printf("eps_bound = %.9g\n", eps_bound);
  std::printf("eps_max_client = %.9g\n", eps_max);
  std::printf("replay = consistent\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private over-the-air federated learning "
               "simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", config_path, "Path to an INI config file")
      ->required();
  run->add_option("--override", overrides,
                  "Override a config key, e.g. experiment.rounds=10");

  double eps = 1.0, delta = 1e-5, alpha_u = 1.0, h_cj = 1.0, sigma_c = 1.0;
  long long rounds = 100, data_size = 1000;
  CLI::App* dj = app.add_subcommand(
      "design-jammer", "Size the cooperative jammer for a privacy target");
  dj->add_option("--eps", eps, "Privacy budget epsilon")->required();
  dj->add_option("--delta", delta, "Privacy parameter delta")->required();
  dj->add_option("--rounds", rounds, "Number of transmission rounds")
      ->required();
  dj->add_option("--data-size", data_size, "Total training examples |D|")
      ->required();
  dj->add_option("--alpha-u", alpha_u, "Server scaling factor alpha_u")
      ->required();
  dj->add_option("--h-cj", h_cj, "Jammer channel magnitude")->required();
  dj->add_option("--sigma-c", sigma_c, "Channel noise std dev")->required();

  std::string replay_path;
  CLI::App* acct = app.add_subcommand(
      "accountant", "Replay a noise trace and re-derive the privacy spend");
  acct->add_option("--replay", replay_path, "Path to a noise_<seed>.csv")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, overrides);
    if (dj->parsed())
      return cmd_design_jammer(eps, delta, rounds, data_size, alpha_u, h_cj,
                               sigma_c);
    if (acct->parsed()) return cmd_accountant(replay_path);
  } catch (const otafl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const otafl::InvalidInputError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 1;
  } catch (const otafl::InvariantViolationError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return 2;
  } catch (const otafl::DegeneratePrivacyError& e) {
    std::fprintf(stderr, "degenerate privacy state: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
