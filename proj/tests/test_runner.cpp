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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "otafl/config.hpp"
#include "otafl/errors.hpp"
#include "otafl/rng.hpp"
#include "otafl/runner.hpp"
#include "otafl/svg.hpp"
#include "support/oracles.hpp"

using namespace otafl;
namespace fs = std::filesystem;

namespace {

KeyValueConfig kv_of(const std::string& text) {
  return KeyValueConfig::parse_string(text, "inline");
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg = build_config(kv_of(
      "[experiment]\nrounds = 4\nseeds = 1\n"
      "[data]\nnum_clients = 3\nn_min = 20\nn_max = 30\n"
      "feat_dim = 6\nclasses = 3\n"
      "[model]\nhidden = 8\n"
      "[local]\nepochs = 1\n"));
  cfg.output_dir = out_dir;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Strips the wall_ms column (the one legitimately nondeterministic
// field) from a metrics CSV.
std::string strip_wall(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("the key-value parser handles sections, comments, and overrides") {
  KeyValueConfig kv = kv_of(
      "# leading comment\n"
      "[Experiment]\n"
      "Rounds = 12   # trailing comment\n"
      "seeds=1,2,3\n"
      "\n"
      "[data]\n"
      "preset = desk\n");
  CHECK(kv.has("experiment.rounds"));  // sections and keys are lowercased
  CHECK(kv.get_int_or("experiment.rounds", 0) == 12);
  CHECK(*kv.raw("experiment.seeds") == "1,2,3");
  kv.set_override("experiment.rounds=99");
  CHECK(kv.get_int_or("experiment.rounds", 0) == 99);
  CHECK_THROWS_AS(kv.set_override("no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(kv.set_override("nodot=1"), ConfigError);
  CHECK_THROWS_AS(kv_of("rounds = 5\n"), ConfigError);  // key before section
  CHECK_THROWS_AS(kv_of("[unterminated\n"), ConfigError);
  CHECK_THROWS_AS(kv_of("[a]\njust_a_key\n"), ConfigError);
}

TEST_CASE("build_config applies defaults and rejects unknown keys") {
  const ExperimentConfig cfg = build_config(kv_of(""));
  CHECK(cfg.algorithm == Algorithm::kUpcycled);
  CHECK(cfg.rounds == 40);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.data.preset == "desk");
  CHECK(cfg.data.num_clients == 10);
  CHECK(cfg.model.hidden == std::vector<std::size_t>{32});
  CHECK(cfg.hyper.mu > 0.0);  // upcycled default needs a proximal term
  CHECK(!cfg.privacy.eps_target.has_value());
  CHECK(cfg.privacy.jammer_mode == JammerMode::kAuto);

  CHECK_THROWS_AS(build_config(kv_of("[experiment]\nroundz = 4\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[experiment]\nalgorithm = sgd\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[privacy]\njammer_mode = maybe\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[experiment]\nseeds = -3\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[lambda]\nschedule = 2:0.5\n")),
                  ConfigError);
}

TEST_CASE("the mnist preset swaps the data and model defaults") {
  const ExperimentConfig cfg =
      build_config(kv_of("[data]\npreset = mnist_mlp\n"));
  CHECK(cfg.data.feat_dim == 784);
  CHECK(cfg.data.classes == 10);
  CHECK(cfg.data.num_clients == 50);
  CHECK(cfg.model.hidden == std::vector<std::size_t>{196});
  // Explicit keys still win over the preset.
  const ExperimentConfig tweaked = build_config(
      kv_of("[data]\npreset = mnist_mlp\nnum_clients = 8\n"));
  CHECK(tweaked.data.num_clients == 8);
  CHECK(tweaked.data.feat_dim == 784);
  CHECK_THROWS_AS(build_config(kv_of("[data]\npreset = cifar\n")),
                  ConfigError);
}

TEST_CASE("config validation catches impossible privacy setups") {
  CHECK_THROWS_AS(
      build_config(kv_of("[privacy]\neps_target = 1.0\njammer_mode = off\n"
                         "[channel]\nsigma_c = 0\n")),
      ConfigError);
  // The same target is fine with the jammer available.
  CHECK_NOTHROW(
      build_config(kv_of("[privacy]\neps_target = 1.0\n"
                         "[channel]\nsigma_c = 0\n")));
  CHECK_THROWS_AS(
      build_config(kv_of("[experiment]\nalgorithm = fedavg\n"
                         "[bound]\nenabled = true\n")),
      ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[privacy]\ndelta = 1.5\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[privacy]\njammer_margin = 0.5\n")),
                  ConfigError);
  CHECK_THROWS_AS(build_config(kv_of("[data]\nn_min = 50\nn_max = 20\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      build_config(kv_of("[experiment]\nalgorithm = fedavg\n[local]\nmu = 1\n")),
      ConfigError);
}

TEST_CASE("metrics CSVs round-trip through their parser") {
  std::vector<RoundMetrics> rows(3);
  rows[0] = {1, true, 1.25, 0.5, 0.75, 0.7, 0.01, 2.5, 12};
  rows[1] = {2, false, 1.125, 0.5625, 0.75, 0.7, 0.0, 0.0, 0};
  rows[2] = {3, true, std::numeric_limits<double>::infinity(),
             std::nan(""), 0.8, 0.75, 0.0, 1.0, 3};
  const std::string path = "roundtrip_metrics.csv";
  emit_csv(rows, path);
  const std::string text = slurp(path);
  CHECK(text.rfind("iter,transmitted,train_loss,test_acc,eps_bound,"
                   "eps_max_client,jammer_var,avg_tx_power,wall_ms\n",
                   0) == 0);
  CHECK(text.find("\r") == std::string::npos);  // LF endings only
  const auto parsed = parse_metrics_csv(path);
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0].iteration == 1);
  CHECK(parsed[0].transmitted);
  CHECK(parsed[0].train_loss == 1.25);
  CHECK(!parsed[1].transmitted);
  CHECK(std::isinf(parsed[2].train_loss));
  CHECK(std::isnan(parsed[2].test_acc));
  fs::remove(path);
  CHECK_THROWS_AS(parse_metrics_csv("missing.csv"), ConfigError);
}

TEST_CASE("noise traces round-trip at full precision") {
  NoiseTrace trace;
  trace.delta = 1e-5;
  trace.data_total = 437;
  trace.num_clients = 2;
  NoiseTrace::Row r1{1, true, 0.12345678901234567, 0.25, 0.2, {1.0, 1.5}};
  NoiseTrace::Row r2{2, false, 0.0, 0.25, 0.2, {0.0, 0.0}};
  trace.rows = {r1, r2};
  const std::string path = "roundtrip_noise.csv";
  emit_noise_csv(trace, path);
  const NoiseTrace back = read_noise_csv(path);
  CHECK(back.delta == trace.delta);
  CHECK(back.data_total == 437);
  CHECK(back.num_clients == 2);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].sigma_eff_sq == r1.sigma_eff_sq);  // %.17g is exact
  CHECK(back.rows[0].s_by_client == r1.s_by_client);
  CHECK(!back.rows[1].transmitted);
  fs::remove(path);
}

TEST_CASE("replay_accounting recomputes and cross-checks every row") {
  NoiseTrace trace;
  trace.delta = 1e-5;
  trace.data_total = 300;
  trace.num_clients = 2;
  PrivacyLedger ledger(trace.delta, trace.data_total, 2);
  for (int m = 1; m <= 6; ++m) {
    NoiseTrace::Row row;
    row.iteration = m;
    row.transmitted = (m % 2) == 1;
    row.s_by_client = {0.0, 0.0};
    if (row.transmitted) {
      row.sigma_eff_sq = 0.01 * m;
      row.s_by_client = {1.0, 1.0 + 0.25 * m};
      ledger.record_round({row.sigma_eff_sq}, row.s_by_client);
    }
    row.eps_bound = ledger.epsilon_upper_bound();
    row.eps_max_client = std::max(ledger.epsilon_for_client(0),
                                  ledger.epsilon_for_client(1));
    trace.rows.push_back(row);
  }
  const auto [eps_bound, eps_max] = replay_accounting(trace);
  CHECK(eps_bound == doctest::Approx(ledger.epsilon_upper_bound()).epsilon(1e-15));
  CHECK(eps_max ==
        doctest::Approx(ledger.epsilon_for_client(0)).epsilon(1e-15));

  // Tamper with a recorded epsilon: the replay must refuse it.
  NoiseTrace bad = trace;
  bad.rows[2].eps_bound *= 1.001;
  CHECK_THROWS_AS(replay_accounting(bad), InvariantViolationError);
}

TEST_CASE("run_experiment writes a complete, self-consistent artifact set") {
  const std::string out = "runner_out_main";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_config(out);
  cfg.seeds = {1, 2};
  cfg.privacy.eps_target = 8.0;
  cfg.bound.enabled = true;
  const RunResult res = run_experiment(cfg);
  REQUIRE(res.seeds.size() == 2);
  CHECK(fs::exists(res.summary_path));
  CHECK(fs::exists(res.svg_path));
  for (const auto& s : res.seeds) {
    CHECK(fs::exists(s.metrics_path));
    CHECK(fs::exists(s.noise_path));
    const auto rows = parse_metrics_csv(s.metrics_path);
    CHECK(rows.size() == 8);  // upcycled: 2 iterations per transmission
    // Final row agrees with the reported summary numbers up to the %.9g
    // precision of the CSV encoding.
    CHECK(rows.back().test_acc ==
          doctest::Approx(s.final_test_acc).epsilon(1e-8));
    CHECK(rows.back().eps_bound ==
          doctest::Approx(s.eps_bound_final).epsilon(1e-8));
    // The published trace replays to the published numbers.
    const auto [eb, em] = replay_accounting(read_noise_csv(s.noise_path));
    CHECK(eb == doctest::Approx(s.eps_bound_final).epsilon(1e-12));
    CHECK(em == doctest::Approx(s.eps_max_client_final).epsilon(1e-12));
    CHECK(s.bound.c1 != 0.0);
  }

  const nlohmann::json summary = nlohmann::json::parse(slurp(res.summary_path));
  CHECK(summary["schema"] == "otafl-run-1");
  CHECK(summary["seeds"].size() == 2);
  CHECK(summary["aggregate"]["num_seeds"] == 2);
  CHECK(summary["config"]["experiment.rounds"] == "4");
  CHECK(summary.dump().find("wall") == std::string::npos);

  const std::string svg = slurp(res.svg_path);
  CHECK(test::well_formed_xml(svg));
  CHECK(svg.find("Test accuracy") != std::string::npos);
  CHECK(svg.find("seed 1") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("reruns and thread counts produce byte-identical artifacts") {
  const std::string out_a = "runner_out_a";
  const std::string out_b = "runner_out_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  ExperimentConfig cfg = tiny_config(out_a);
  cfg.emit_plots = false;
  const RunResult a = run_experiment(cfg);
  cfg.output_dir = out_b;
  cfg.threads = 4;
  const RunResult b = run_experiment(cfg);
  CHECK(strip_wall(slurp(a.seeds[0].metrics_path)) ==
        strip_wall(slurp(b.seeds[0].metrics_path)));
  CHECK(slurp(a.seeds[0].noise_path) == slurp(b.seeds[0].noise_path));
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("imported tables flow through partitioning into training") {
  const std::string table = "runner_import.txt";
  {
    std::ofstream outf(table);
    StreamRng rng(3, "import");
    for (int i = 0; i < 120; ++i) {
      for (int f = 0; f < 4; ++f) outf << rng.normal() << ' ';
      outf << rng.uniform_int(3) << '\n';
    }
  }
  const std::string out = "runner_out_import";
  fs::remove_all(out);
  ExperimentConfig cfg = build_config(kv_of(
      "[experiment]\nrounds = 2\n"
      "[data]\nimport_path = runner_import.txt\nnum_clients = 4\n"
      "feat_dim = 4\nclasses = 3\n"
      "[model]\nhidden = 6\n[local]\nepochs = 1\n"));
  cfg.output_dir = out;
  cfg.emit_plots = false;
  const RunResult res = run_experiment(cfg);
  CHECK(res.seeds[0].data_total > 0);
  CHECK(res.seeds[0].data_total < 120);  // the test split held rows out
  fs::remove_all(out);
  fs::remove(table);
}

TEST_CASE("the svg renderer survives NaN gaps and escapes labels") {
  Chart chart;
  chart.title = "a < b & c";
  chart.x_label = "x";
  chart.y_label = "y";
  Series s;
  s.label = "serie <1>";
  s.xs = {1.0, 2.0, 3.0, 4.0};
  s.ys = {0.5, std::nan(""), 1.5, 1.0};
  chart.series.push_back(s);
  const std::vector<Chart> charts = {chart};
  const std::string doc = render_svg(charts);
  CHECK(test::well_formed_xml(doc));
  CHECK(doc.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(doc.find("serie &lt;1&gt;") != std::string::npos);
  CHECK(doc.find("nan") == std::string::npos);
}

#ifdef OTAFL_TOOL_PATH
namespace {
int run_tool(const std::string& args) {
  const int rc = std::system((std::string(OTAFL_TOOL_PATH) + " " + args +
                              " >tool_stdout.txt 2>tool_stderr.txt")
                                 .c_str());
  return WEXITSTATUS(rc);
}
}  // namespace

TEST_CASE("the command-line tool maps failures to documented exit codes") {
  CHECK(run_tool("design-jammer --eps 1 --delta 1e-5 --rounds 10 "
                 "--data-size 100 --alpha-u 1 --h-cj 1 --sigma-c 0.1") == 0);
  const std::string out = slurp("tool_stdout.txt");
  CHECK(out.find("alpha_cj = 0.118386828") != std::string::npos);
  CHECK(out.find("jammer_needed = yes") != std::string::npos);

  // Config problems exit 1.
  CHECK(run_tool("run --config does_not_exist.ini") == 1);
  CHECK(run_tool("design-jammer --eps -1 --delta 1e-5 --rounds 10 "
                 "--data-size 100 --alpha-u 1 --h-cj 1 --sigma-c 0.1") == 1);
  // Bad usage exits 1 too.
  CHECK(run_tool("no-such-subcommand") == 1);

  // A tampered accounting trace is an invariant violation: exit 2.
  {
    std::ofstream cfg("cli_tiny.ini");
    cfg << "[experiment]\nrounds = 2\nseeds = 5\noutput_dir = cli_out\n"
        << "[data]\nnum_clients = 3\nn_min = 15\nn_max = 20\nfeat_dim = 5\n"
        << "classes = 3\n[model]\nhidden = 6\n[local]\nepochs = 1\n";
  }
  CHECK(run_tool("run --config cli_tiny.ini") == 0);
  CHECK(run_tool("accountant --replay cli_out/noise_5.csv") == 0);
  {
    std::string trace = slurp("cli_out/noise_5.csv");
    const auto pos = trace.find("0.");  // first recorded float
    REQUIRE(pos != std::string::npos);
    trace[pos + 2] = trace[pos + 2] == '9' ? '8' : '9';
    std::ofstream outf("cli_out/noise_5.csv", std::ios::binary);
    outf << trace;
  }
  CHECK(run_tool("accountant --replay cli_out/noise_5.csv") == 2);

  // The output-dir environment override redirects artifacts.
  fs::remove_all("cli_env_out");
  CHECK(std::system(("OTAFL_OUTPUT_DIR=cli_env_out " +
                     std::string(OTAFL_TOOL_PATH) +
                     " run --config cli_tiny.ini >tool_stdout.txt 2>&1")
                        .c_str()) == 0);
  CHECK(fs::exists("cli_env_out/metrics_5.csv"));

  // Overrides reach the experiment.
  CHECK(run_tool("run --config cli_tiny.ini --override experiment.rounds=1 "
                 "--override experiment.output_dir=cli_out2") == 0);
  CHECK(parse_metrics_csv("cli_out2/metrics_5.csv").size() == 2);

  fs::remove_all("cli_out");
  fs::remove_all("cli_out2");
  fs::remove_all("cli_env_out");
  fs::remove("cli_tiny.ini");
  fs::remove("tool_stdout.txt");
  fs::remove("tool_stderr.txt");
}
#endif  // OTAFL_TOOL_PATH
