// Copyright 2026 The kvbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: validate a scenario config, run it, and tabulate or
// plot a finished run. Talks to the library only through its C interface.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "kvbeam/kvbeam.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int report_failure(kvb_status status) {
  std::fprintf(stderr, "error (%s): %s\n", kvb_status_name(status),
               kvb_last_error_message());
  return status == KVB_ERR_CONFIGURATION ? kExitValidation : kExitRuntime;
}

void print_and_free(char* text, std::FILE* stream) {
  if (text) {
    std::fputs(text, stream);
    kvb_string_free(text);
  }
}

int validate(const std::string& config) {
  size_t count = 0;
  char* warnings = nullptr;
  const kvb_status st = kvb_config_validate(config.c_str(), &count, &warnings);
  if (st != KVB_OK) return report_failure(st);
  print_and_free(warnings, stderr);
  std::printf("%s: %zu scenario(s) valid\n", config.c_str(), count);
  return kExitOk;
}

int run(const std::string& config, const std::string& out_dir, int jobs) {
  char* warnings = nullptr;
  kvb_status st = kvb_config_validate(config.c_str(), nullptr, &warnings);
  if (st != KVB_OK) return report_failure(st);
  print_and_free(warnings, stderr);
  char* report = nullptr;
  st = kvb_run_config(config.c_str(), out_dir.c_str(), jobs, &report);
  if (st != KVB_OK) return report_failure(st);
  print_and_free(report, stdout);
  return kExitOk;
}

int report(const std::string& dir) {
  char* text = nullptr;
  const kvb_status st = kvb_report(dir.c_str(), &text);
  if (st != KVB_OK) return report_failure(st);
  print_and_free(text, stdout);
  return kExitOk;
}

int plots(const std::string& dir) {
  size_t written = 0;
  const kvb_status st = kvb_plots(dir.c_str(), &written);
  if (st != KVB_OK) return report_failure(st);
  std::printf("wrote %zu gnuplot script(s) under %s\n", written, dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decay experiments for a Timoshenko beam with local "
               "degenerate Kelvin-Voigt damping"};
  app.set_version_flag("--version", kvb_version());
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "runs";
  std::string dir;
  int jobs = 1;

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario config");
  validate_cmd->add_option("config", config, "Scenario file")->required();

  auto* run_cmd = app.add_subcommand("run", "Run every scenario of a config");
  run_cmd->add_option("config", config, "Scenario file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--jobs", jobs, "Scenarios run concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* report_cmd = app.add_subcommand("report", "Tabulate a finished run");
  report_cmd->add_option("dir", dir, "Run directory")->required();

  auto* plots_cmd = app.add_subcommand("plots", "Write gnuplot scripts for a run");
  plots_cmd->add_option("dir", dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*validate_cmd) return validate(config);
  if (*run_cmd) return run(config, out_dir, jobs);
  if (*report_cmd) return report(dir);
  if (*plots_cmd) return plots(dir);
  return kExitValidation;
}
