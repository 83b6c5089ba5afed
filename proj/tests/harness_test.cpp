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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blindspot/config.hpp"
#include "blindspot/digest.hpp"
#include "blindspot/harness.hpp"
#include "blindspot/persistence.hpp"
#include "blindspot/plots.hpp"
#include "test_util.hpp"

namespace blindspot {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

// Small enough to run the whole pipeline in a few seconds.
constexpr const char* kSmoke = R"({
  "run_id": "unit",
  "seed": 3,
  "dataset": {"count": 300},
  "mentees": [
    {"id": "toy-cnn", "arch": "toy-cnn", "train_count": 600, "epochs": 4},
    {"id": "toy-attention", "arch": "toy-attention", "train_count": 600, "epochs": 4}
  ],
  "mentor": {"epochs": 2},
  "eval": {"embeddings_per_class": 10}
})";

void expect_config_error(const std::string& doc, const std::string& needle,
                         const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(doc, overrides);
    ADD_FAILURE() << "accepted " << doc;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

// ------------------------------------------------------------------ config

TEST(Config, DefaultsParse) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.run_id, "toy");
  EXPECT_EQ(c.curation.sources.size(), 9u);
  EXPECT_EQ(c.mentees.size(), 2u);
  EXPECT_EQ(c.primary_mentee().id, "toy-cnn");
  EXPECT_EQ(c.mentor.loss_mode, LossMode::kStandard);
  EXPECT_EQ(c.digest, sha256_hex(c.json));
  EXPECT_EQ(parse_config(default_config_json()).digest, c.digest);
  const std::vector<std::string> want = {"ID-s0", "OOD-SpN-1-s0", "AA-PGD-eps1-s0"};
  EXPECT_EQ(c.mentor_ids(), want);
}

TEST(Config, DocumentAndOverridesApply) {
  const auto c = parse_config(R"({"seed": 11, "mentor": {"epochs": 5}})",
                              {"mentor.lr=0.01", "run_id=other", "mentor.seeds=[1,2]"});
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.mentor.epochs, 5);
  EXPECT_DOUBLE_EQ(c.mentor.lr, 0.01);
  EXPECT_EQ(c.run_id, "other");
  EXPECT_EQ(c.mentor_ids().size(), 6u);
  EXPECT_EQ(c.mentor_seed("AA-PGD-eps1-s2"), 2u);
  EXPECT_NE(c.digest, parse_config("{}").digest);
}

TEST(Config, Presets) {
  const auto names = preset_names();
  EXPECT_EQ(names.size(), 3u);

  const auto sm = parse_config(R"({"preset": "supermentor-toy"})");
  EXPECT_EQ(sm.mentor.backbone, "toy-attention");
  ASSERT_EQ(sm.mentor.train_sources.size(), 1u);
  EXPECT_EQ(sm.mentor.train_sources[0].id(), "AA-PIFGSM-eps1");

  const auto ab = parse_config("{}", {"preset=ablate-no-Ld"});
  EXPECT_EQ(ab.mentor.loss_mode, LossMode::kNoDistillation);

  const auto joint = parse_config(R"({"preset": "joint-all-sources"})");
  EXPECT_TRUE(joint.mentor.joint);
  EXPECT_EQ(joint.mentor.train_sources.size(), 9u);
  EXPECT_EQ(joint.mentor_ids(), std::vector<std::string>{"joint-s0"});
  EXPECT_EQ(joint.mentor_train_sources("joint-s0").size(), 9u);

  // The document wins over the preset.
  const auto mixed = parse_config(R"({"preset": "supermentor-toy", "mentor": {"backbone": "toy-cnn"}})");
  EXPECT_EQ(mixed.mentor.backbone, "toy-cnn");
  EXPECT_EQ(mixed.mentor.train_sources[0].id(), "AA-PIFGSM-eps1");
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(fs::path(BLINDSPOT_SOURCE_DIR) / "configs")) {
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(load_config(e.path()));
  }
  EXPECT_EQ(load_config(fs::path(BLINDSPOT_SOURCE_DIR) / "configs" / "supermentor-toy.json").preset, "supermentor-toy");
}

TEST(Config, ErrorsNameFieldAndDomain) {
  expect_config_error(R"({"bogus": 1})", "unknown config field bogus");
  expect_config_error(R"({"mentor": {"lrr": 1}})", "unknown config field mentor.lrr");
  expect_config_error("{}", "unknown config field mentor.nope", {"mentor.nope=1"});
  expect_config_error("{}", "not of the form", {"mentor.lr"});
  expect_config_error("[1]", "not a JSON object");
  expect_config_error("{oops", "not a JSON object");
  expect_config_error(R"({"preset": "fast"})", "config field preset: expected one of");
  expect_config_error(R"({"seed": -1})", "config field seed: expected an integer");
  expect_config_error(R"({"dataset": {"image_size": 18}})", "dataset.image_size: expected a multiple of 4");
  expect_config_error(R"({"dataset": {"kind": "png"}})", "dataset.kind: expected synthetic or ppm");
  expect_config_error(R"({"mentor": {"lr": 0}})", "mentor.lr: expected a number > 0");
  expect_config_error(R"({"mentor": {"batch_size": 3}})", "mentor.batch_size: expected an even integer");
  expect_config_error(R"({"mentor": {"threshold": 1.0}})", "mentor.threshold: expected a number in (0, 1)");
  expect_config_error(R"({"mentor": {"loss_mode": "fancy"}})", "mentor.loss_mode: expected standard, no-Ld");
  expect_config_error(R"({"mentor": {"seeds": [1, 1]}})", "mentor.seeds: expected distinct seeds");
  expect_config_error(R"({"mentor": {"train_sources": ["AA-PGD-eps9"]}})", "sources listed in curation.sources");
  expect_config_error(R"({"curation": {"sources": ["OOD-SpN-9"]}})", "curation.sources: expected severities 1..5");
  expect_config_error(R"({"curation": {"sources": ["XYZ"]}})", "curation.sources: expected error source ids");
  expect_config_error(R"({"curation": {"sources": ["ID", "ID"]}})", "distinct sources");
  expect_config_error(R"({"curation": {"severity_table": "huge"}})", "small or large");
  expect_config_error(R"({"eval": {"landscape_magnitudes": [0.5]}})", "containing 0");
  expect_config_error(R"({"run_id": "../x"})", "config field run_id");
  expect_config_error(R"({"mentees": []})", "config field mentees");
  expect_config_error(R"({"mentees": [{"id": "a"}, {"id": "a"}]})", "mentees.1.id: expected a unique mentee id");
  expect_config_error(R"({"mentees": [{"id": "a", "arch": "vgg"}]})", "mentees.0.arch");
  expect_config_error(R"({"mentor": {"init_from_mentee": true, "backbone": "toy-attention"}})",
                      "mentor.init_from_mentee");
}

TEST(Config, MissingFileIsNotFound) {
  TempDir dir;
  EXPECT_BS_ERROR(load_config(dir / "absent.json"), ErrorCode::kNotFound);
}

// ---------------------------------------------------------------- manifest

TEST(RunManifest, RoundTrip) {
  RunManifest m;
  m.config_digest = std::string(64, 'a');
  m.seed = 42;
  m.record({"split", "ok", 0.25, "", {"splits/x.manifest"}});
  m.record({"train:ID-s0", "failed", 1.5, "line one\nline two", {}});
  m.record({"eval:ID-s0", std::string(kSkipped), 0.0, "", {"reports/a.report", "tables/b.tsv"}});
  const RunManifest back = RunManifest::from_text(m.to_text());
  EXPECT_EQ(back.config_digest, m.config_digest);
  EXPECT_EQ(back.seed, 42u);
  ASSERT_EQ(back.stages.size(), 3u);
  EXPECT_EQ(back.stages[1].status, "failed");
  EXPECT_EQ(back.stages[1].message, "line one line two");
  EXPECT_EQ(back.stages[2].artifacts, m.stages[2].artifacts);
  EXPECT_EQ(back.to_text(), m.to_text());
  EXPECT_TRUE(back.lists("tables/b.tsv"));
  EXPECT_FALSE(back.lists("tables/c.tsv"));

  // record replaces a stage of the same name.
  m.record({"split", std::string(kSkipped), 0.0, "", {"splits/x.manifest"}});
  EXPECT_EQ(m.stages.size(), 3u);
  EXPECT_EQ(m.find("split")->status, kSkipped);
  EXPECT_EQ(m.find("nothing"), nullptr);
}

TEST(RunManifest, SchemaErrors) {
  EXPECT_BS_ERROR(RunManifest::from_text(""), ErrorCode::kSchema);
  EXPECT_BS_ERROR(RunManifest::from_text("blindspot-run v9\n"), ErrorCode::kSchema);
  EXPECT_BS_ERROR(RunManifest::from_text("blindspot-run v1\nwhat\n"), ErrorCode::kSchema);
}

TEST(RunManifest, MissingArtifactsSkipFailedStages) {
  TempDir dir;
  write_text_file(dir / "here.txt", "x");
  RunManifest m;
  m.record({"a", "ok", 0, "", {"here.txt", "gone.txt"}});
  m.record({"b", "failed", 0, "", {"also-gone.txt"}});
  EXPECT_EQ(m.missing_artifacts(dir.path()), std::vector<std::string>{"gone.txt"});
}

TEST(RunManifest, LoadForDropsOtherConfigs) {
  TempDir dir;
  const auto a = parse_config("{}");
  const auto b = parse_config("{}", {"seed=99"});
  RunManifest m = RunManifest::load_for(dir / "m.txt", a);
  m.record({"split", "ok", 0, "", {}});
  m.write(dir / "m.txt");
  EXPECT_EQ(RunManifest::load_for(dir / "m.txt", a).stages.size(), 1u);
  const RunManifest other = RunManifest::load_for(dir / "m.txt", b);
  EXPECT_TRUE(other.stages.empty());
  EXPECT_EQ(other.config_digest, b.digest);
  EXPECT_EQ(other.seed, 99u);
}

// ------------------------------------------------------------------- paths

TEST(Paths, ArtifactRootFollowsEnvironment) {
  const char* old = std::getenv(kRootEnv);
  const std::string saved = old ? old : "";
  ::setenv(kRootEnv, "/tmp/somewhere", 1);
  EXPECT_EQ(artifact_root(), fs::path("/tmp/somewhere"));
  ::setenv(kRootEnv, "", 1);
  EXPECT_EQ(artifact_root(), fs::path("artifacts"));
  ::unsetenv(kRootEnv);
  EXPECT_EQ(artifact_root(), fs::path("artifacts"));
  if (old) ::setenv(kRootEnv, saved.c_str(), 1);
}

TEST(Paths, RunLayout) {
  const auto c = parse_config("{}", {"run_id=abc"});
  const RunPaths p = run_paths(c, "/r");
  EXPECT_EQ(p.run, fs::path("/r/abc"));
  EXPECT_EQ(p.manifest(), fs::path("/r/abc/run_manifest.txt"));
  EXPECT_EQ(p.split("gratings"), fs::path("/r/abc/splits/gratings.manifest"));
  EXPECT_EQ(p.mentor("ID-s0"), fs::path("/r/abc/mentors/ID-s0.weights"));
}

// ------------------------------------------------------------------- plots

TEST(Plots, ParseTsv) {
  const Table t = parse_tsv("a\tb\n1\t2\n3\t4\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "3");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_BS_ERROR(t.column("c"), ErrorCode::kSchema);
  EXPECT_BS_ERROR(parse_tsv(""), ErrorCode::kSchema);
  EXPECT_BS_ERROR(parse_tsv("a\tb\n1\n"), ErrorCode::kSchema);
  TempDir dir;
  EXPECT_BS_ERROR(read_tsv(dir / "none.tsv"), ErrorCode::kNotFound);
}

TEST(Plots, ScatterHasDiagonalAndOnePointPerRow) {
  const Table t = parse_tsv("mentor\tsame_mentee\tcross_mentee\nA\t0.7\t0.6\nB\t0.5\t0.55\nC\tNA\t0.5\n");
  const std::string svg = svg_scatter(t);
  EXPECT_TRUE(svg.starts_with("<svg"));
  EXPECT_TRUE(svg.ends_with("</svg>\n"));
  EXPECT_NE(svg.find("stroke-dasharray=\"4 3\""), std::string::npos);
  std::size_t circles = 0;
  for (auto p = svg.find("r=\"5\""); p != std::string::npos; p = svg.find("r=\"5\"", p + 1)) ++circles;
  EXPECT_EQ(circles, 2u);  // the NA row is skipped
  EXPECT_BS_ERROR(svg_scatter(parse_tsv("mentor\tx\n")), ErrorCode::kSchema);
}

// ---------------------------------------------------------------- pipeline

std::map<std::string, double> report_values(const fs::path& run) {
  std::map<std::string, double> out;
  for (const auto& e : fs::directory_iterator(run / "reports")) {
    const EvaluationReport r = read_report(e.path());
    const std::string name = e.path().filename().string();
    for (const auto& s : r.per_source) out[name + "/" + s.source.id()] = s.balanced_accuracy;
    out[name + "/average"] = r.average;
  }
  return out;
}

void run_all(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log) {
  cmd_curate(cfg, root, log);
  cmd_train(cfg, root, log);
  cmd_eval(cfg, root, log);
  cmd_plot(cfg, root, {}, log);
  cmd_report(cfg, root, log);
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = std::make_unique<TempDir>();
    cfg_ = std::make_unique<ExperimentConfig>(parse_config(kSmoke));
    std::ostringstream log;
    run_all(*cfg_, root_->path(), log);
  }
  static void TearDownTestSuite() {
    root_.reset();
    cfg_.reset();
  }
  static fs::path run() { return root_->path() / cfg_->run_id; }

  // Copies the finished run under a fresh root.
  static void copy_run(const TempDir& to) {
    fs::copy(run(), to / cfg_->run_id, fs::copy_options::recursive);
  }

  static std::unique_ptr<TempDir> root_;
  static std::unique_ptr<ExperimentConfig> cfg_;
};

std::unique_ptr<TempDir> Pipeline::root_;
std::unique_ptr<ExperimentConfig> Pipeline::cfg_;

TEST_F(Pipeline, LayoutAndManifestCompleteness) {
  for (const char* f : {"config.json", "mentee_registry.json", "run_manifest.txt", "summary.txt",
                        "splits/gratings.manifest", "mentees/toy-cnn.weights", "mentees/toy-attention.weights",
                        "mentors/ID-s0.weights", "mentors/ID-s0.weights.history.tsv", "tables/bars.tsv",
                        "tables/baselines.tsv", "tables/grid-s0.tsv", "tables/severity.tsv", "tables/scatter.tsv",
                        "tables/partition.tsv", "tables/landscape.tsv", "plots/bars.svg", "plots/scatter.svg",
                        "plots/severity.svg", "plots/landscape.svg", "plots/grid-s0.svg"}) {
    EXPECT_TRUE(fs::exists(run() / f)) << f;
  }
  const RunManifest m = RunManifest::from_text(read_text_file(run() / "run_manifest.txt"));
  EXPECT_EQ(m.config_digest, cfg_->digest);
  EXPECT_EQ(m.seed, cfg_->seed);
  EXPECT_TRUE(m.missing_artifacts(run()).empty());
  EXPECT_EQ(read_text_file(run() / "config.json"), cfg_->json + "\n");

  // Every report written is listed by some stage.
  for (const auto& e : fs::directory_iterator(run() / "reports")) {
    EXPECT_TRUE(m.lists("reports/" + e.path().filename().string())) << e.path();
  }
  for (const auto& s : m.stages) EXPECT_NE(s.status, "failed") << s.name;
}

TEST_F(Pipeline, NineSourcesGiveEighteenCuratedSets) {
  const RunManifest m = RunManifest::from_text(read_text_file(run() / "run_manifest.txt"));
  int curated = 0, sweep = 0;
  for (const auto& s : m.stages) {
    if (!s.name.starts_with("curate:")) continue;
    (s.name.find("sweep") == std::string::npos ? curated : sweep)++;
  }
  EXPECT_EQ(curated, 18);
  EXPECT_EQ(sweep, 4);
}

TEST_F(Pipeline, TablesHaveFigureShapes) {
  const Table sev = read_tsv(run() / "tables" / "severity.tsv");
  std::map<std::string, std::set<std::string>> sigmas;
  for (const auto& r : sev.rows) sigmas[r[sev.column("mentor")]].insert(r[sev.column("sigma")]);
  ASSERT_FALSE(sigmas.empty());
  for (const auto& [mentor, s] : sigmas) EXPECT_EQ(s.size(), 4u) << mentor;

  const Table scatter = read_tsv(run() / "tables" / "scatter.tsv");
  EXPECT_EQ(scatter.rows.size(), cfg_->mentor_ids().size());

  const Table base = read_tsv(run() / "tables" / "baselines.tsv");
  std::vector<std::string> want = {"predictor"};
  for (const char* c : kTableColumns) want.push_back(c);
  want.push_back("Average");
  EXPECT_EQ(base.header, want);

  const Table grid = read_tsv(run() / "tables" / "grid-s0.tsv");
  EXPECT_EQ(grid.rows.size(), cfg_->mentor.train_sources.size());
}

TEST_F(Pipeline, RerunSkipsOnDigestMatch) {
  std::ostringstream log;
  cmd_curate(*cfg_, root_->path(), log);
  cmd_train(*cfg_, root_->path(), log);
  const RunManifest m = RunManifest::from_text(read_text_file(run() / "run_manifest.txt"));
  int checked = 0;
  for (const auto& s : m.stages) {
    if (s.name.starts_with("mentee:") || s.name == "split" || s.name.starts_with("curate:") ||
        s.name.starts_with("relabel:") || s.name.starts_with("train:")) {
      EXPECT_EQ(s.status, kSkipped) << s.name;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
  EXPECT_NE(log.str().find("skipped (digest match)"), std::string::npos);
}

TEST_F(Pipeline, ReportSummarisesRun) {
  std::ostringstream log;
  const std::string text = cmd_report(*cfg_, root_->path(), log);
  EXPECT_EQ(read_text_file(run() / "summary.txt"), text);
  EXPECT_NE(text.find("SER-"), std::string::npos);
  EXPECT_NE(text.find("PIFGSM"), std::string::npos);
  EXPECT_NE(text.find("partition.tsv:"), std::string::npos);
}

TEST_F(Pipeline, DeterministicAcrossRoots) {
  TempDir other;
  std::ostringstream log;
  cmd_curate(*cfg_, other.path(), log);
  cmd_train(*cfg_, other.path(), log);
  cmd_eval(*cfg_, other.path(), log);
  const auto a = report_values(run());
  const auto b = report_values(other / cfg_->run_id);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [k, v] : a) {
    ASSERT_TRUE(b.count(k)) << k;
    if (std::isnan(v)) {
      EXPECT_TRUE(std::isnan(b.at(k))) << k;
    } else {
      EXPECT_NEAR(v, b.at(k), 1e-6) << k;
    }
  }
  EXPECT_EQ(read_text_file(run() / "splits" / "gratings.manifest"),
            read_text_file(other / cfg_->run_id / "splits" / "gratings.manifest"));
}

TEST_F(Pipeline, MissingMenteeWeightsFailsAndIsRecorded) {
  TempDir other;
  copy_run(other);
  const fs::path r = other / cfg_->run_id;
  fs::remove(r / "mentees" / "toy-cnn.weights");
  std::ostringstream log;
  EXPECT_BS_ERROR(cmd_curate(*cfg_, other.path(), log), ErrorCode::kNotFound);
  const RunManifest m = RunManifest::from_text(read_text_file(r / "run_manifest.txt"));
  ASSERT_NE(m.find("mentee:toy-cnn"), nullptr);
  EXPECT_EQ(m.find("mentee:toy-cnn")->status, "failed");
  EXPECT_NE(m.find("mentee:toy-cnn")->message.find("toy-cnn"), std::string::npos);
  EXPECT_NE(log.str().find("mentee:toy-cnn: failed"), std::string::npos);
}

TEST_F(Pipeline, ReportRejectsMissingArtifact) {
  TempDir other;
  copy_run(other);
  fs::remove(other / cfg_->run_id / "tables" / "scatter.tsv");
  std::ostringstream log;
  EXPECT_BS_ERROR(cmd_report(*cfg_, other.path(), log), ErrorCode::kIntegrity);
}

TEST_F(Pipeline, PlotRendersExtraReports) {
  TempDir other;
  copy_run(other);
  std::ostringstream log;
  const fs::path report = other / cfg_->run_id / "reports" / "ID-s0.report";
  ASSERT_TRUE(fs::exists(report));
  cmd_plot(*cfg_, other.path(), {report}, log);
  EXPECT_TRUE(fs::exists(other / cfg_->run_id / "plots" / "report-ID-s0.svg"));
}

TEST(PipelineErrors, TrainWithoutCurateDirectsToCurate) {
  TempDir root;
  const auto cfg = parse_config(kSmoke);
  std::ostringstream log;
  try {
    cmd_train(cfg, root.path(), log);
    ADD_FAILURE() << "train ran without curated data";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("curate"), std::string::npos) << e.what();
  }
  EXPECT_BS_ERROR(cmd_eval(cfg, root.path(), log), ErrorCode::kNotFound);
}

// --------------------------------------------------------------------- cli

struct CliResult {
  int status;
  std::string out;
};

CliResult cli(const std::string& args, const fs::path& root) {
  const std::string cmd = "BLINDSPOT_ROOT='" + root.string() + "' '" + BLINDSPOT_CLI + "' " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int st = ::pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

TEST(Cli, FailuresAreOneLineWithCode) {
  TempDir dir;
  write_text_file(dir / "bad.json", R"({"mentor": {"lr": -1}})");
  const auto bad = cli("curate -c '" + (dir / "bad.json").string() + "'", dir.path());
  EXPECT_NE(bad.status, 0);
  EXPECT_TRUE(bad.out.starts_with("error: code=E_CONFIG msg=config field mentor.lr")) << bad.out;
  EXPECT_EQ(std::count(bad.out.begin(), bad.out.end(), '\n'), 1);

  const auto missing = cli("train -c '" + (dir / "none.json").string() + "'", dir.path());
  EXPECT_NE(missing.status, 0);
  EXPECT_TRUE(missing.out.starts_with("error: code=E_NOT_FOUND")) << missing.out;

  const auto usage = cli("frobnicate", dir.path());
  EXPECT_NE(usage.status, 0);
  EXPECT_TRUE(usage.out.starts_with("error: code=E_USAGE")) << usage.out;

  write_text_file(dir / "ok.json", "{}");
  const auto no_data = cli("eval -c '" + (dir / "ok.json").string() + "' -s run_id=empty", dir.path());
  EXPECT_NE(no_data.status, 0);
  EXPECT_TRUE(no_data.out.starts_with("error: code=E_NOT_FOUND")) << no_data.out;
}

TEST(Cli, DefaultsPrintsSchema) {
  TempDir dir;
  const auto r = cli("defaults", dir.path());
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(parse_config(r.out).digest, parse_config("{}").digest);
}

}  // namespace
}  // namespace blindspot
