// Copyright 2026 The Blindspot Authors
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

// blindspot <curate|train|eval|plot|report> --config FILE [--set a.b=v ...]
// Artifacts go to $BLINDSPOT_ROOT/<run_id>/ (default ./artifacts).

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blindspot/config.hpp"
#include "blindspot/error.hpp"
#include "blindspot/harness.hpp"

namespace {

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int report_error(std::string_view code, const std::string& msg) {
  std::cerr << "error: code=" << code << " msg=" << one_line(msg) << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate mentors that predict a classifier's mistakes"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::string> reports;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("-s,--set", overrides, "override a config field, dot.path=value")->take_all();
  };
  auto* curate = app.add_subcommand("curate", "train mentees and build error datasets");
  auto* train = app.add_subcommand("train", "train mentors on curated data");
  auto* eval = app.add_subcommand("eval", "evaluate mentors and baselines, write tables");
  auto* plot = app.add_subcommand("plot", "render SVG figures from tables and reports");
  auto* report = app.add_subcommand("report", "print the run summary");
  auto* defaults = app.add_subcommand("defaults", "print the default config");
  for (auto* sub : {curate, train, eval, plot, report}) add_common(sub);
  plot->add_option("reports", reports, "extra report files to plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: code=E_USAGE msg=" << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (defaults->parsed()) {
      std::cout << blindspot::default_config_json() << "\n";
      return 0;
    }
    const auto cfg = blindspot::load_config(config_path, overrides);
    const auto root = blindspot::artifact_root();
    if (curate->parsed()) blindspot::cmd_curate(cfg, root, std::cout);
    if (train->parsed()) blindspot::cmd_train(cfg, root, std::cout);
    if (eval->parsed()) blindspot::cmd_eval(cfg, root, std::cout);
    if (plot->parsed()) {
      std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
      blindspot::cmd_plot(cfg, root, paths, std::cout);
    }
    if (report->parsed()) std::cout << blindspot::cmd_report(cfg, root, std::cout);
  } catch (const blindspot::Error& e) {
    return report_error(blindspot::error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return report_error("E_INTERNAL", e.what());
  }
  return 0;
}
