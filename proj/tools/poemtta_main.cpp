// Copyright 2026 The poemtta Authors.
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

// poemtta command-line interface: run, sweep, report, gradcheck.

#include <chrono>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poemtta/error.hpp"
#include "poemtta/harness/metrics.hpp"
#include "poemtta/harness/report.hpp"
#include "poemtta/harness/run_config.hpp"
#include "poemtta/harness/runner.hpp"
#include "poemtta/nn/gradcheck.hpp"

namespace {

using poem::harness::RunConfig;

// Flag name -> config key. Flags are only applied when given, after the
// config file, so the command line always wins.
const std::vector<std::pair<std::string, std::string>> kRunFlags = {
    {"--task", "task"},
    {"--arch", "arch"},
    {"--method", "method"},
    {"--scenario", "scenario"},
    {"--shift", "shift"},
    {"--severity", "severity"},
    {"--magnitude", "magnitude"},
    {"--batch-size", "batch_size"},
    {"--entropy-factor", "entropy_factor"},
    {"--max-iters", "max_iters"},
    {"--alpha", "alpha"},
    {"--lr-shallow", "lr_shallow"},
    {"--lr-adapt", "lr_adapt"},
    {"--momentum", "momentum"},
    {"--seed", "seed"},
    {"--epochs", "epochs"},
    {"--train-lr", "train_lr"},
    {"--bands", "bands"},
    {"--out", "out"},
};

struct RunFlags {
  std::string config_path;
  std::vector<std::string> values = std::vector<std::string>(kRunFlags.size());
  std::vector<CLI::Option*> options;
};

void add_run_flags(CLI::App& app, RunFlags& flags) {
  app.add_option("--config", flags.config_path, "flat key=value config file");
  for (std::size_t i = 0; i < kRunFlags.size(); ++i) {
    flags.options.push_back(app.add_option(kRunFlags[i].first, flags.values[i]));
  }
}

RunConfig resolve_config(const RunFlags& flags) {
  RunConfig cfg = RunConfig::defaults();
  if (!flags.config_path.empty()) poem::harness::apply_config_file(cfg, flags.config_path);
  for (std::size_t i = 0; i < kRunFlags.size(); ++i) {
    if (flags.options[i]->count() > 0) {
      poem::harness::apply_setting(cfg, kRunFlags[i].second, flags.values[i]);
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<double> parse_factors(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw poem::ConfigError("invalid factor '" + item + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POEM test-time adaptation engine"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run a (method x shift x seed) grid");
  add_run_flags(*run, run_flags);
  std::string run_report = "summary";
  run->add_option("--report", run_report, "report printed to stdout")->capture_default_str();

  RunFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep the entropy threshold factor");
  add_run_flags(*sweep, sweep_flags);
  std::string factors_text = "0.2,0.4,0.6,0.8,1.0";
  sweep->add_option("--factors", factors_text, "comma-separated entropy factors")->capture_default_str();

  CLI::App* report = app.add_subcommand("report", "aggregate a metrics file");
  std::string report_in;
  std::string report_kind = "summary";
  report->add_option("--in", report_in, "metrics file")->required();
  report->add_option("--kind", report_kind, "summary | prs | accounting | sweep | bands")
      ->capture_default_str();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "gradient oracle suite");
  poem::nn::GradcheckOptions gc;
  gradcheck->add_option("--trials", gc.trials)->capture_default_str();
  gradcheck->add_option("--seed", gc.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (run->parsed()) {
      const RunConfig cfg = resolve_config(run_flags);
      const auto result = poem::harness::run_and_save(cfg);
      std::cout << poem::harness::make_report(run_report, result).to_csv();
    } else if (sweep->parsed()) {
      const RunConfig cfg = resolve_config(sweep_flags);
      const auto result = poem::harness::run_and_save(cfg, parse_factors(factors_text));
      std::cout << poem::harness::make_report("sweep", result).to_csv();
    } else if (report->parsed()) {
      const auto result = poem::harness::load_metrics(report_in);
      std::cout << poem::harness::make_report(report_kind, result).to_csv();
    } else if (gradcheck->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto rep = poem::nn::run_gradcheck(gc);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << nlohmann::json{{"trials", rep.trials.size()},
                                  {"entries", rep.entries},
                                  {"failures", rep.failures},
                                  {"max_rel_err", rep.max_rel_err},
                                  {"seconds", secs},
                                  {"passed", rep.passed()}}
                       .dump()
                << std::endl;
      return rep.passed() ? 0 : 1;
    }
  } catch (const poem::Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
