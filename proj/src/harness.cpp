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

#include "blindspot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "blindspot/baselines.hpp"
#include "blindspot/curation.hpp"
#include "blindspot/digest.hpp"
#include "blindspot/error.hpp"
#include "blindspot/eval.hpp"
#include "blindspot/mentee.hpp"
#include "blindspot/mentor.hpp"
#include "blindspot/persistence.hpp"
#include "blindspot/plots.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {

namespace fs = std::filesystem;

fs::path artifact_root() {
  const char* env = std::getenv(kRootEnv);
  if (env == nullptr || *env == '\0') return fs::path("artifacts");
  return fs::path(env);
}

RunPaths run_paths(const ExperimentConfig& config, const fs::path& root) { return RunPaths{root / config.run_id}; }

// ---------------------------------------------------------------- manifest

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t a = 0;
  while (true) {
    const auto b = line.find('\t', a);
    out.emplace_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
    if (b == std::string_view::npos) return out;
    a = b + 1;
  }
}

}  // namespace

void RunManifest::record(StageRecord stage) {
  for (auto& s : stages) {
    if (s.name == stage.name) {
      s = std::move(stage);
      return;
    }
  }
  stages.push_back(std::move(stage));
}

const StageRecord* RunManifest::find(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> RunManifest::missing_artifacts(const fs::path& run_dir) const {
  std::vector<std::string> out;
  for (const auto& s : stages) {
    if (s.status == "failed") continue;
    for (const auto& a : s.artifacts) {
      if (!fs::exists(run_dir / a)) out.push_back(a);
    }
  }
  return out;
}

bool RunManifest::lists(std::string_view artifact) const {
  for (const auto& s : stages) {
    if (std::find(s.artifacts.begin(), s.artifacts.end(), artifact) != s.artifacts.end()) return true;
  }
  return false;
}

std::string RunManifest::to_text() const {
  std::string out = fmt::format("blindspot-run v{}\nconfig_digest={}\nseed={}\n", kSchemaVersion, config_digest, seed);
  for (const auto& s : stages) {
    out += fmt::format("stage\t{}\t{}\t{:.3f}\t{}\n", s.name, s.status, s.seconds, one_line(s.message));
    for (const auto& a : s.artifacts) out += fmt::format("artifact\t{}\t{}\n", s.name, a);
  }
  return out;
}

RunManifest RunManifest::from_text(std::string_view text) {
  RunManifest m;
  std::size_t start = 0;
  int n = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    if (n++ == 0) {
      if (line != fmt::format("blindspot-run v{}", kSchemaVersion)) {
        fail(ErrorCode::kSchema, fmt::format("run manifest header '{}' (supported: blindspot-run v{})", line,
                                             kSchemaVersion));
      }
      continue;
    }
    if (line.starts_with("config_digest=")) {
      m.config_digest = line.substr(14);
    } else if (line.starts_with("seed=")) {
      m.seed = std::stoull(std::string(line.substr(5)));
    } else if (line.starts_with("stage\t")) {
      const auto f = split_tabs(line);
      if (f.size() != 5) fail(ErrorCode::kSchema, fmt::format("bad manifest line '{}'", line));
      m.stages.push_back({f[1], f[2], std::stod(f[3]), f[4], {}});
    } else if (line.starts_with("artifact\t")) {
      const auto f = split_tabs(line);
      if (f.size() != 3 || m.stages.empty() || m.stages.back().name != f[1]) {
        fail(ErrorCode::kSchema, fmt::format("bad manifest line '{}'", line));
      }
      m.stages.back().artifacts.push_back(f[2]);
    } else {
      fail(ErrorCode::kSchema, fmt::format("bad manifest line '{}'", line));
    }
  }
  if (n == 0) fail(ErrorCode::kSchema, "run manifest is empty");
  return m;
}

RunManifest RunManifest::load_for(const fs::path& path, const ExperimentConfig& config) {
  RunManifest m;
  if (fs::exists(path)) {
    RunManifest old = from_text(read_text_file(path));
    if (old.config_digest == config.digest) m = std::move(old);
  }
  m.config_digest = config.digest;
  m.seed = config.seed;
  return m;
}

void RunManifest::write(const fs::path& path) const { write_text_file(path, to_text()); }

std::vector<std::optional<double>> table_row(const EvaluationReport& report) {
  std::vector<std::optional<double>> row;
  for (const char* col : kTableColumns) {
    std::optional<double> v;
    for (const auto& e : report.per_source) {
      const bool match = e.source.family() == ErrorFamily::kId ? std::string_view(col) == "ID"
                                                                : kind_name(e.source.kind()) == col;
      if (match) {
        v = e.balanced_accuracy;
        break;
      }
    }
    row.push_back(v);
  }
  row.push_back(report.average);
  return row;
}

// ------------------------------------------------------------------ stages

namespace {

using Clock = std::chrono::steady_clock;

struct Job {
  std::string name;
  std::function<StageRecord()> fn;  // fills status, message and artifacts
};

class Session {
 public:
  Session(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log)
      : cfg(cfg), paths(run_paths(cfg, root)), log(log) {
    fs::create_directories(paths.run);
    manifest = RunManifest::load_for(paths.manifest(), cfg);
    write_text_file(paths.config(), cfg.json + "\n");
  }

  std::string rel(const fs::path& p) const { return fs::relative(p, paths.run).generic_string(); }

  /// Runs jobs on a small worker pool; records every stage, then rethrows
  /// the first failure in job order.
  void run(std::vector<Job> jobs) {
    std::vector<StageRecord> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const auto t0 = Clock::now();
        try {
          out[i] = jobs[i].fn();
        } catch (const std::exception& e) {
          errors[i] = std::current_exception();
          out[i].status = "failed";
          out[i].message = e.what();
          out[i].artifacts.clear();
        }
        out[i].name = jobs[i].name;
        out[i].seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      }
    };
    const std::size_t n = std::min<std::size_t>(jobs.size(), std::max(2u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto& r : out) {
      log << r.name << ": " << r.status;
      if (!r.message.empty()) log << " (" << one_line(r.message) << ")";
      log << "\n";
      manifest.record(r);
    }
    manifest.write(paths.manifest());
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  void run_one(std::string name, std::function<StageRecord()> fn) {
    std::vector<Job> jobs;
    jobs.push_back({std::move(name), std::move(fn)});
    run(std::move(jobs));
  }

  const ExperimentConfig& cfg;
  RunPaths paths;
  RunManifest manifest;
  std::ostream& log;
};

StageRecord done(std::string_view status, std::vector<std::string> artifacts, std::string message = "") {
  StageRecord r;
  r.status = status;
  r.artifacts = std::move(artifacts);
  r.message = std::move(message);
  return r;
}

GratingOptions grating_options(const DatasetConfig& d, int count) {
  GratingOptions o;
  o.count = count;
  o.num_classes = d.num_classes;
  o.image_size = d.image_size;
  o.angle_jitter = d.angle_jitter;
  o.pixel_noise = d.pixel_noise;
  return o;
}

ImagePool eval_pool(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == "ppm") {
    ImagePool pool = load_ppm_folder(cfg.dataset.path);
    if (pool.num_classes() != cfg.dataset.num_classes) {
      fail(ErrorCode::kConfig, fmt::format("config field dataset.num_classes: folder has {} classes, config says {}",
                                           pool.num_classes(), cfg.dataset.num_classes));
    }
    return pool;
  }
  return synthetic_gratings(cfg.dataset.name, grating_options(cfg.dataset, cfg.dataset.count),
                            mix_seed(cfg.seed, "pool"));
}

std::string dataset_fingerprint(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  return fmt::format("{}|{}|{}|{}|{}|{}|{}|{}", d.name, d.kind, d.path, d.count, d.num_classes, d.image_size,
                     d.angle_jitter, d.pixel_noise);
}

const SeverityTable& severity_table(const ExperimentConfig& cfg) {
  return cfg.curation.severity_table == "large" ? SeverityTable::large_images() : SeverityTable::small_images();
}

std::vector<ErrorSource> sweep_sources() {
  std::vector<ErrorSource> out;
  for (int level = 1; level <= static_cast<int>(std::size(kSpeckleSweep)); ++level) {
    out.push_back(ErrorSource::corruption(ErrorKind::kSpN, level, SeverityScale::kSpnSweep));
  }
  return out;
}

/// Registered mentee, or kNotFound pointing at curate.
std::unique_ptr<ToyMentee> open_mentee(const RunPaths& paths, const std::string& id) {
  if (!fs::exists(paths.registry())) {
    fail(ErrorCode::kNotFound, fmt::format("no mentee registry at '{}'; run curate first", paths.registry().string()));
  }
  return load_mentee(paths.registry(), id);
}

fs::path test_dir(const Session& s, const std::string& mentee, const ErrorSource& src, Split split = Split::kTest) {
  return dataset_dir(s.paths.data(), s.cfg.dataset.name, mentee, src, split);
}

std::vector<CuratedDataset> read_tests(const Session& s, const std::string& mentee,
                                       const std::vector<ErrorSource>& sources) {
  std::vector<CuratedDataset> out;
  for (const auto& src : sources) out.push_back(read_dataset(test_dir(s, mentee, src)));
  return out;
}

std::string now_utc() { return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr))); }

std::string cell(std::optional<double> v) { return v && std::isfinite(*v) ? fmt::format("{:.4f}", *v) : "NA"; }

}  // namespace

// ----------------------------------------------------------------- curate

void cmd_curate(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log) {
  Session s(cfg, root, log);
  const ImagePool pool = eval_pool(cfg);

  // Mentees are registered one at a time; the registry is a shared file.
  std::vector<std::unique_ptr<ToyMentee>> mentees;
  for (const auto& mc : cfg.mentees) {
    s.run_one("mentee:" + mc.id, [&]() {
      const auto registry = MenteeRegistry::read(s.paths.registry());
      if (const auto entry = registry.find(mc.id)) {
        mentees.push_back(load_mentee(s.paths.registry(), mc.id));
        return done(kSkipped, {s.rel(s.paths.registry()), entry->weights});
      }
      const ImagePool train = cfg.dataset.kind == "ppm"
                                  ? load_ppm_folder(mc.train_path)
                                  : synthetic_gratings(cfg.dataset.name + "-mentee",
                                                       grating_options(cfg.dataset, mc.train_count),
                                                       mix_seed(cfg.seed, "mentee-pool"));
      nn::BackboneSpec spec;
      spec.kind = nn::parse_backbone(mc.arch);
      spec.image_size = cfg.dataset.image_size;
      MenteeTrainOptions opts;
      opts.epochs = mc.epochs;
      opts.batch_size = mc.batch_size;
      opts.lr = mc.lr;
      const std::uint64_t seed = mix_seed(cfg.seed, "mentee:" + mc.id);
      TrainedMentee tm = train_reference_mentee(mc.id, train, pool, spec, opts, seed);
      const MenteeEntry e = register_mentee(*tm.model, s.paths.registry(), cfg.dataset.name, seed, tm.clean_accuracy);
      mentees.push_back(std::move(tm.model));
      return done("ok", {s.rel(s.paths.registry()), e.weights}, fmt::format("clean accuracy {:.4f}", tm.clean_accuracy));
    });
  }
  const ToyMentee& primary = *mentees.front();

  SplitManifest manifest;
  s.run_one("split", [&]() {
    manifest = split_dataset(pool.ids(), mix_seed(cfg.seed, "split"), cfg.dataset.name);
    const auto path = s.paths.split(cfg.dataset.name);
    const std::string text = manifest_to_text(manifest);
    if (fs::exists(path) && read_text_file(path) == text) return done(kSkipped, {s.rel(path)});
    write_manifest(manifest, path);
    return done("ok", {s.rel(path)});
  });
  const std::string manifest_digest = sha256_hex(manifest_to_text(manifest));

  CurationOptions opts;
  opts.attack_batch = cfg.curation.attack_batch;
  opts.severities = &severity_table(cfg);

  std::vector<std::pair<ErrorSource, Split>> plan;
  for (const auto& src : cfg.curation.sources) {
    plan.push_back({src, Split::kTrain});
    plan.push_back({src, Split::kTest});
  }
  if (cfg.curation.severity_sweep) {
    for (const auto& src : sweep_sources()) {
      if (std::find(cfg.curation.sources.begin(), cfg.curation.sources.end(), src) == cfg.curation.sources.end()) {
        plan.push_back({src, Split::kTest});
      }
    }
  }

  const std::string mentee_digest = primary.weight_digest();
  std::vector<Job> jobs;
  for (const auto& [src, split] : plan) {
    jobs.push_back({fmt::format("curate:{}/{}/{}", primary.id(), src.id(), split_name(split)), [&, src, split]() {
                      const auto dir = test_dir(s, primary.id(), src, split);
                      const std::string input = sha256_hex(fmt::format(
                          "curate v1|{}|{}|{}|{}|{}|{}|{}", mentee_digest, manifest_digest, dataset_fingerprint(cfg),
                          src.id(), split_name(split), cfg.seed, cfg.curation.severity_table));
                      if (stored_input_digest(dir) == input) return done(kSkipped, {s.rel(dir)});
                      const CuratedDataset ds = build_error_dataset(manifest, split, src, pool, primary,
                                                                    mix_seed(cfg.seed, "curate"), opts);
                      write_dataset(ds, dir, input);
                      std::string msg = fmt::format("{} correct, {} wrong", ds.n_correct(), ds.n_wrong());
                      for (const auto& w : ds.warnings) msg += "; " + w;
                      return done("ok", {s.rel(dir)}, msg);
                    }});
  }
  s.run(std::move(jobs));

  if (!cfg.curation.relabel) return;
  jobs.clear();
  for (std::size_t k = 1; k < mentees.size(); ++k) {
    const ToyMentee& other = *mentees[k];
    for (const auto& [src, split] : plan) {
      if (split != Split::kTest) continue;
      jobs.push_back({fmt::format("relabel:{}/{}/test", other.id(), src.id()), [&, src]() {
                        const auto from = test_dir(s, primary.id(), src);
                        const auto dir = test_dir(s, other.id(), src);
                        const std::string input = sha256_hex(fmt::format(
                            "relabel v1|{}|{}", read_text_file(from / "digest.txt"), other.weight_digest()));
                        if (stored_input_digest(dir) == input) return done(kSkipped, {s.rel(dir)});
                        const CuratedDataset ds = relabel_dataset(read_dataset(from), other);
                        write_dataset(ds, dir, input);
                        return done("ok", {s.rel(dir)},
                                    fmt::format("{} correct, {} wrong", ds.n_correct(), ds.n_wrong()));
                      }});
    }
  }
  s.run(std::move(jobs));
}

// ------------------------------------------------------------------ train

void cmd_train(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log) {
  Session s(cfg, root, log);
  const auto mentee = open_mentee(s.paths, cfg.primary_mentee().id);
  const auto& mc = cfg.mentor;
  const std::string recipe =
      fmt::format("{}|{}|{}|{}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{}|{}", mc.backbone, mc.init_from_mentee, mc.epochs,
                  mc.batch_size, mc.lr, mc.weight_decay, mc.q, mc.temperature, loss_mode_name(mc.loss_mode),
                  cfg.dataset.num_classes);

  std::vector<Job> jobs;
  for (const auto& id : cfg.mentor_ids()) {
    jobs.push_back({"train:" + id, [&, id]() {
                      const auto sources = cfg.mentor_train_sources(id);
                      const std::uint64_t seed = cfg.mentor_seed(id);
                      std::vector<CuratedDataset> parts;
                      std::string digests;
                      for (const auto& src : sources) {
                        parts.push_back(read_dataset(test_dir(s, mentee->id(), src, Split::kTrain)));
                        digests += parts.back().content_digest() + ",";
                      }
                      const CuratedDataset train = parts.size() == 1 ? std::move(parts.front()) : concat_datasets(parts);
                      const std::string input = sha256_hex(
                          fmt::format("train v1|{}|{}|{}|{}", mentee->weight_digest(), digests, recipe, seed));
                      const auto path = s.paths.mentor(id);
                      const std::vector<std::string> artifacts = {s.rel(path), s.rel(history_sidecar(path))};
                      if (fs::exists(path) && fs::exists(history_sidecar(path))) {
                        std::map<std::string, std::string> meta;
                        load_mentor(path, &meta);
                        if (meta["input_digest"] == input) return done(kSkipped, artifacts);
                      }
                      MentorSpec spec;
                      spec.backbone.kind = nn::parse_backbone(mc.backbone);
                      spec.backbone.image_size = cfg.dataset.image_size;
                      spec.num_classes = cfg.dataset.num_classes;
                      MentorModel mentor(id, spec, mix_seed(seed, "mentor-init"));
                      if (mc.init_from_mentee) mentor.init_backbone(s.paths.run / "mentees" / (mentee->id() + ".weights"));
                      MentorTrainOptions opts;
                      opts.epochs = mc.epochs;
                      opts.batch_size = mc.batch_size;
                      opts.lr = mc.lr;
                      opts.weight_decay = mc.weight_decay;
                      opts.q = mc.q;
                      opts.temperature = mc.temperature;
                      opts.loss_mode = mc.loss_mode;
                      opts.seed = seed;
                      const TrainHistory h = train_mentor(mentor, train, opts, mentee.get());
                      std::string joined;
                      for (const auto& src : sources) joined += (joined.empty() ? "" : ",") + src.id();
                      save_mentor(mentor, path,
                                  {{"input_digest", input},
                                   {"config_digest", cfg.digest},
                                   {"train_sources", joined},
                                   {"seed", std::to_string(seed)}},
                                  &h);
                      return done("ok", artifacts,
                                  fmt::format("final loss {:.4f}", h.epochs.empty() ? 0.0 : h.epochs.back().loss));
                    }});
  }
  s.run(std::move(jobs));
}

// ------------------------------------------------------------------- eval

void cmd_eval(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log) {
  Session s(cfg, root, log);
  const auto mentee = open_mentee(s.paths, cfg.primary_mentee().id);
  const auto entry = MenteeRegistry::read(s.paths.registry()).find(mentee->id());
  const auto tests = read_tests(s, mentee->id(), cfg.curation.sources);

  const auto ids = cfg.mentor_ids();
  std::vector<MentorModel> mentors;
  for (const auto& id : ids) {
    const auto path = s.paths.mentor(id);
    if (!fs::exists(path)) {
      fail(ErrorCode::kNotFound, fmt::format("mentor checkpoint '{}' not found; run train first", path.string()));
    }
    mentors.push_back(load_mentor(path));
  }
  const std::uint64_t first_seed = cfg.mentor.seeds.front();
  const std::string stamp = now_utc();
  auto stamp_report = [&](EvaluationReport& r, std::uint64_t seed) {
    r.seed = seed;
    r.timestamp = stamp;
    r.config_digest = cfg.digest;
  };
  auto write_table = [&](const std::string& name, const std::string& text, std::vector<std::string>& artifacts) {
    const auto path = s.paths.tables() / name;
    write_text_file(path, text);
    artifacts.push_back(s.rel(path));
  };

  // mentor and baseline reports
  std::vector<EvaluationReport> reports(mentors.size());
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < mentors.size(); ++i) {
    jobs.push_back({"eval:" + ids[i], [&, i]() {
                      reports[i] = evaluate(MentorPredictor(mentors[i], cfg.mentor.threshold), tests);
                      stamp_report(reports[i], cfg.mentor_seed(ids[i]));
                      const auto path = s.paths.reports() / (ids[i] + ".report");
                      write_report(reports[i], path);
                      return done("ok", {s.rel(path)}, fmt::format("average {:.4f}", reports[i].average));
                    }});
  }
  std::vector<std::unique_ptr<Predictor>> baselines;
  if (cfg.eval.baselines) {
    baselines.push_back(std::make_unique<SerPredictor>(entry ? entry->clean_accuracy : 0.5, mix_seed(cfg.seed, "ser")));
    for (double g : kMcpGammas) baselines.push_back(std::make_unique<McpPredictor>(g));
    for (double a : kCpeAlphas) baselines.push_back(std::make_unique<CpePredictor>(a));
    for (double d : kDtcDistances) baselines.push_back(std::make_unique<DtcPredictor>(*mentee, d));
  }
  std::vector<EvaluationReport> base_reports(baselines.size());
  for (std::size_t i = 0; i < baselines.size(); ++i) {
    jobs.push_back({"eval:baseline-" + baselines[i]->id(), [&, i]() {
                      base_reports[i] = evaluate(*baselines[i], tests);
                      stamp_report(base_reports[i], cfg.seed);
                      // DTC centroids come from each test source separately
                      if (dynamic_cast<const DtcPredictor*>(baselines[i].get())) base_reports[i].tag = "per-source-centroids";
                      const auto path = s.paths.reports() / ("baseline-" + baselines[i]->id() + ".report");
                      write_report(base_reports[i], path);
                      return done("ok", {s.rel(path)}, fmt::format("average {:.4f}", base_reports[i].average));
                    }});
  }
  s.run(std::move(jobs));

  // tables
  s.run_one("eval:tables", [&]() {
    std::vector<std::string> artifacts;
    {
      std::string t = "predictor";
      for (const char* c : kTableColumns) t += fmt::format("\t{}", c);
      t += "\tAverage\n";
      auto add = [&](const std::string& name, const EvaluationReport& r) {
        t += name;
        for (const auto& v : table_row(r)) t += "\t" + cell(v);
        t += "\n";
      };
      for (std::size_t i = 0; i < baselines.size(); ++i) add(baselines[i]->id(), base_reports[i]);
      for (std::size_t i = 0; i < mentors.size(); ++i) add(ids[i], reports[i]);
      write_table("baselines.tsv", t, artifacts);
    }
    {
      std::string t = "mentor\ttrain_source\tseed\tID\tOOD\tAA\taverage\n";
      for (std::size_t i = 0; i < mentors.size(); ++i) {
        std::map<ErrorFamily, std::pair<double, int>> fam;
        for (const auto& e : reports[i].per_source) {
          fam[e.source.family()].first += e.balanced_accuracy;
          fam[e.source.family()].second += 1;
        }
        auto mean = [&](ErrorFamily f) -> std::optional<double> {
          auto it = fam.find(f);
          if (it == fam.end()) return std::nullopt;
          return it->second.first / it->second.second;
        };
        t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", ids[i],
                         cfg.mentor.joint ? std::string("joint") : cfg.mentor_train_sources(ids[i]).front().id(),
                         cfg.mentor_seed(ids[i]), cell(mean(ErrorFamily::kId)), cell(mean(ErrorFamily::kOod)),
                         cell(mean(ErrorFamily::kAa)), cell(reports[i].average));
      }
      write_table("bars.tsv", t, artifacts);
    }
    if (!cfg.mentor.joint) {
      for (auto seed : cfg.mentor.seeds) {
        std::vector<MentorPredictor> preds;
        std::vector<ErrorSource> rows;
        for (std::size_t i = 0; i < mentors.size(); ++i) {
          if (cfg.mentor_seed(ids[i]) != seed) continue;
          preds.emplace_back(mentors[i], cfg.mentor.threshold);
          rows.push_back(cfg.mentor_train_sources(ids[i]).front());
        }
        std::vector<std::pair<ErrorSource, const Predictor*>> grid_rows;
        for (std::size_t k = 0; k < preds.size(); ++k) grid_rows.push_back({rows[k], &preds[k]});
        write_table(fmt::format("grid-s{}.tsv", seed), grid_to_tsv(confusion_grid(grid_rows, tests)), artifacts);
      }
    }
    return done("ok", artifacts);
  });

  jobs.clear();
  if (cfg.curation.severity_sweep) {
    jobs.push_back({"eval:severity", [&]() {
                      const auto sweep = read_tests(s, mentee->id(), sweep_sources());
                      std::string t = "dataset\tmentor\tsigma\tmentor_accuracy\tmentee_accuracy\n";
                      for (std::size_t i = 0; i < mentors.size(); ++i) {
                        const MentorPredictor p(mentors[i], cfg.mentor.threshold);
                        for (const auto& ds : sweep) {
                          std::optional<double> acc;
                          if (ds.n_correct() > 0 && ds.n_wrong() > 0) {
                            acc = balanced_accuracy(p.predict(ds), ds.correctness_bits());
                          }
                          t += fmt::format("{}\t{}\t{}\t{}\t{}\n", cfg.dataset.name, ids[i],
                                           kSpeckleSweep[ds.source.severity() - 1], cell(acc),
                                           cell(static_cast<double>(ds.n_correct()) / ds.records.size()));
                        }
                      }
                      std::vector<std::string> artifacts;
                      write_table("severity.tsv", t, artifacts);
                      return done("ok", artifacts);
                    }});
  }
  if (cfg.curation.relabel && cfg.mentees.size() >= 2) {
    jobs.push_back({"eval:cross-mentee", [&]() {
                      const std::string other = cfg.mentees[1].id;
                      const auto relabeled = read_tests(s, other, cfg.curation.sources);
                      std::vector<std::string> artifacts;
                      std::vector<ScatterPoint> points;
                      for (std::size_t i = 0; i < mentors.size(); ++i) {
                        EvaluationReport r = cross_mentee_eval(mentors[i], relabeled, other);
                        stamp_report(r, cfg.mentor_seed(ids[i]));
                        const auto path = s.paths.reports() / fmt::format("{}.cross-{}.report", ids[i], other);
                        write_report(r, path);
                        artifacts.push_back(s.rel(path));
                        points.push_back({ids[i], reports[i].average, r.average});
                      }
                      write_table("scatter.tsv", scatter_to_tsv(points), artifacts);

                      std::string t = "mentor\tsource\tN1\tN2\tN3\tboth_correct\n";
                      for (std::size_t k = 0; k < tests.size(); ++k) {
                        const Partition part = natural_adversarial_partition(tests[k], relabeled[k]);
                        for (std::size_t i = 0; i < mentors.size(); ++i) {
                          if (cfg.mentor_seed(ids[i]) != first_seed) continue;
                          const auto acc = per_set_accuracy(mentors[i], part, tests[k]);
                          t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", ids[i], tests[k].source.id(),
                                           acc.at("N1").format(), acc.at("N2").format(), acc.at("N3").format(),
                                           part.both_correct);
                        }
                      }
                      write_table("partition.tsv", t, artifacts);
                      return done("ok", artifacts);
                    }});
  }
  if (!cfg.eval.landscape_magnitudes.empty()) {
    jobs.push_back({"eval:landscape", [&]() {
                      std::vector<std::pair<std::string, LandscapeProfile>> profiles;
                      for (std::size_t i = 0; i < mentors.size(); ++i) {
                        if (cfg.mentor_seed(ids[i]) != first_seed) continue;
                        profiles.push_back({ids[i], loss_landscape_probe(mentors[i], tests, cfg.eval.landscape_magnitudes,
                                                                         cfg.eval.landscape_seed)});
                      }
                      std::vector<std::string> artifacts;
                      write_table("landscape.tsv", landscape_to_tsv(profiles), artifacts);
                      return done("ok", artifacts);
                    }});
  }
  jobs.push_back({"eval:embeddings", [&]() {
                    std::vector<std::string> artifacts;
                    std::vector<std::string> warnings;
                    for (std::size_t i = 0; i < mentors.size(); ++i) {
                      if (cfg.mentor_seed(ids[i]) != first_seed) continue;
                      const auto src = cfg.mentor_train_sources(ids[i]).front();
                      const auto it = std::find_if(tests.begin(), tests.end(),
                                                   [&](const CuratedDataset& d) { return d.source == src; });
                      const auto rows = export_embeddings(mentors[i], *it, cfg.eval.embeddings_per_class,
                                                          mix_seed(cfg.seed, "embeddings"), &warnings);
                      write_table(fmt::format("embeddings-{}.tsv", ids[i]), embeddings_to_tsv(rows), artifacts);
                    }
                    std::string msg;
                    for (const auto& w : warnings) msg += (msg.empty() ? "" : "; ") + w;
                    return done("ok", artifacts, msg);
                  }});
  s.run(std::move(jobs));
}

// ------------------------------------------------------------------- plot

void cmd_plot(const ExperimentConfig& cfg, const fs::path& root, const std::vector<fs::path>& report_paths,
              std::ostream& log) {
  Session s(cfg, root, log);
  s.run_one("plot", [&]() {
    std::vector<std::string> artifacts;
    auto emit = [&](const std::string& name, const std::string& svg) {
      const auto path = s.paths.plots() / name;
      write_text_file(path, svg);
      artifacts.push_back(s.rel(path));
    };
    const auto tables = s.paths.tables();
    emit("bars.svg", svg_bars(read_tsv(tables / "bars.tsv")));
    if (fs::exists(tables / "severity.tsv")) emit("severity.svg", svg_severity(read_tsv(tables / "severity.tsv")));
    if (fs::exists(tables / "scatter.tsv")) emit("scatter.svg", svg_scatter(read_tsv(tables / "scatter.tsv")));
    if (fs::exists(tables / "landscape.tsv")) emit("landscape.svg", svg_landscape(read_tsv(tables / "landscape.tsv")));
    std::vector<fs::path> grids;
    for (const auto& e : fs::directory_iterator(tables)) {
      const auto name = e.path().filename().string();
      if (name.starts_with("grid-") && name.ends_with(".tsv")) grids.push_back(e.path());
    }
    std::sort(grids.begin(), grids.end());
    for (const auto& g : grids) emit(g.stem().string() + ".svg", svg_grid(read_tsv(g)));
    for (const auto& r : report_paths) emit("report-" + r.stem().string() + ".svg", svg_report(read_report(r)));
    return done("ok", artifacts);
  });
}

// ----------------------------------------------------------------- report

std::string cmd_report(const ExperimentConfig& cfg, const fs::path& root, std::ostream& log) {
  Session s(cfg, root, log);
  std::string text;
  s.run_one("report", [&]() {
    const auto missing = s.manifest.missing_artifacts(s.paths.run);
    if (!missing.empty()) {
      fail(ErrorCode::kIntegrity, fmt::format("{} manifest artifacts are missing, first '{}'", missing.size(),
                                              missing.front()));
    }
    text = fmt::format("run {} (config {}, seed {})\n\n", cfg.run_id, cfg.digest.substr(0, 12), cfg.seed);
    const Table table = read_tsv(s.paths.tables() / "baselines.tsv");
    std::vector<std::size_t> width(table.header.size(), 0);
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      width[j] = table.header[j].size();
      for (const auto& r : table.rows) width[j] = std::max(width[j], r[j].size());
    }
    auto row = [&](const std::vector<std::string>& cells) {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        text += j == 0 ? fmt::format("{:<{}}", cells[j], width[j]) : fmt::format("  {:>{}}", cells[j], width[j]);
      }
      text += "\n";
    };
    row(table.header);
    for (const auto& r : table.rows) row(r);

    for (const auto& name : {"partition.tsv", "scatter.tsv"}) {
      const auto path = s.paths.tables() / name;
      if (fs::exists(path)) text += fmt::format("\n{}:\n{}", name, read_text_file(path));
    }
    const auto path = s.paths.run / "summary.txt";
    write_text_file(path, text);
    return done("ok", {s.rel(path)});
  });
  return text;
}

}  // namespace blindspot
