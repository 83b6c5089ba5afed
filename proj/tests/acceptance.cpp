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

// Acceptance runner. Each criterion prints one PASS or FAIL line; the exit
// status is nonzero if any selected criterion fails.
//
//   acceptance              run all twelve
//   acceptance --only 7     run one (repeatable)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "blindspot/attacks.hpp"
#include "blindspot/baselines.hpp"
#include "blindspot/config.hpp"
#include "blindspot/corruptions.hpp"
#include "blindspot/curation.hpp"
#include "blindspot/error.hpp"
#include "blindspot/eval.hpp"
#include "blindspot/harness.hpp"
#include "blindspot/image_source.hpp"
#include "blindspot/mentee.hpp"
#include "blindspot/mentor.hpp"
#include "blindspot/nn/autograd.hpp"
#include "blindspot/nn/layers.hpp"
#include "blindspot/persistence.hpp"
#include "blindspot/plots.hpp"
#include "blindspot/rng.hpp"

namespace fs = std::filesystem;
using namespace blindspot;

namespace {

// Collects failed expectations; the first few end up in the FAIL line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(std::string s) { notes_.push_back(std::move(s)); }
  bool ok() const { return failures_.empty(); }

  std::string summary() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    if (!failures_.empty()) {
      out += fmt::format("{}{} failed check(s), first: {}", out.empty() ? "" : "; ", failures_.size(),
                         failures_.front());
    }
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

class ScratchDir {
 public:
  explicit ScratchDir(const fs::path& parent) {
    std::random_device rd;
    path_ = parent / fmt::format("blindspot-acceptance-{:08x}{:08x}", rd(), rd());
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path g_workdir = fs::temp_directory_path();

double linf(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) m = std::max(m, std::abs(double(a.pixels[i]) - b.pixels[i]));
  return m;
}

bool in_unit_box(const Image& img) {
  return std::all_of(img.pixels.begin(), img.pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

// ------------------------------------------------------------- toy world

// Toy mentee plus curated sets, built on first use and shared by criteria
// run in the same process.
struct ToyWorld {
  static constexpr std::uint64_t kSeed = 7;

  ImagePool pool;  // 2,000 images the error sets are drawn from
  std::unique_ptr<ToyMentee> mentee;
  double clean = 0.0;
  SplitManifest manifest;
  std::map<std::pair<std::string, Split>, CuratedDataset> sets;

  ToyWorld() {
    pool = synthetic_gratings("gratings", {.count = 2000}, mix_seed(kSeed, "pool"));
    const ImagePool train = synthetic_gratings("gratings-mentee", {.count = 3000}, mix_seed(kSeed, "mentee-pool"));
    TrainedMentee t = train_reference_mentee("toy-cnn", train, pool, nn::BackboneSpec{}, MenteeTrainOptions{},
                                             mix_seed(kSeed, "mentee"));
    mentee = std::move(t.model);
    clean = t.clean_accuracy;
    manifest = split_dataset(pool.ids(), mix_seed(kSeed, "split"), pool.name());
  }

  const CuratedDataset& set(const ErrorSource& src, Split split) {
    const auto key = std::make_pair(src.id(), split);
    auto it = sets.find(key);
    if (it == sets.end()) {
      it = sets.emplace(key, build_error_dataset(manifest, split, src, pool, *mentee, mix_seed(kSeed, "curate")))
               .first;
    }
    return it->second;
  }

  std::vector<CuratedDataset> tests() {
    std::vector<CuratedDataset> out;
    for (const auto& s : default_sources()) out.push_back(set(s, Split::kTest));
    return out;
  }
};

ToyWorld& world() {
  static ToyWorld w;
  return w;
}

// Synthetic records with chosen correctness bits and no real images.
CuratedDataset bits_dataset(const ErrorSource& src, const std::vector<int>& bits, const std::string& mentee = "m") {
  CuratedDataset ds;
  ds.dataset_name = "synthetic";
  ds.mentee_id = mentee;
  ds.source = src;
  ds.split = Split::kTest;
  ds.num_classes = 2;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    SampleRecord r;
    r.original_id = fmt::format("s{:05d}", i);
    r.image = Image(2, 2);
    r.correctness = bits[i];
    r.mentee_logits = bits[i] ? std::vector<double>{1, 0} : std::vector<double>{0, 1};
    r.source = src;
    r.split = Split::kTest;
    ds.records.push_back(r);
  }
  return ds;
}

// Right on the first k records of each class, so balanced accuracy is k / n.
class FixedPredictor : public Predictor {
 public:
  explicit FixedPredictor(std::map<std::string, int> k) : k_(std::move(k)) {}
  std::string id() const override { return "fixed"; }
  std::vector<int> predict(const CuratedDataset& ds) const override {
    const int k = k_.at(ds.source.id());
    std::map<int, int> seen;
    std::vector<int> out;
    for (const auto& r : ds.records) {
      const int pos = seen[r.correctness]++;
      out.push_back(pos < k ? r.correctness : 1 - r.correctness);
    }
    return out;
  }

 private:
  std::map<std::string, int> k_;
};

std::map<std::string, double> report_values(const fs::path& run) {
  std::map<std::string, double> out;
  for (const auto& e : fs::directory_iterator(run / "reports")) {
    const EvaluationReport r = read_report(e.path());
    for (const auto& s : r.per_source) out[e.path().filename().string() + "/" + s.source.id()] = s.balanced_accuracy;
    out[e.path().filename().string() + "/average"] = r.average;
  }
  return out;
}

// ------------------------------------------------------------- criteria

Checks metric_oracle() {
  Checks c;
  Rng rng(1);
  int undefined = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.below(50));
    std::vector<int> labels(n), preds(n);
    for (auto& v : labels) v = rng.bernoulli(0.5);
    for (auto& v : preds) v = rng.bernoulli(0.5);
    // Split into the two subsets and score each on its own.
    std::vector<int> right, wrong;
    for (int i = 0; i < n; ++i) (labels[i] ? right : wrong).push_back(i);
    if (right.empty() || wrong.empty()) {
      ++undefined;
      try {
        balanced_accuracy(preds, labels);
        c.expect(false, fmt::format("instance {} has one class but was scored", t));
      } catch (const Error& e) {
        c.expect(e.code() == ErrorCode::kUndefined, fmt::format("instance {}: {}", t, e.what()));
      }
      continue;
    }
    double hit_r = 0, hit_w = 0;
    for (int i : right) hit_r += preds[i] == 1;
    for (int i : wrong) hit_w += preds[i] == 0;
    const double want = 0.5 * (hit_r / right.size() + hit_w / wrong.size());
    const double got = balanced_accuracy(preds, labels);
    worst = std::max(worst, std::abs(got - want));
  }
  c.expect(worst <= 1e-12, fmt::format("worst deviation {:.3g}", worst));

  // Nine sources scored 10%, 20%, ..., 90%.
  std::map<std::string, int> k;
  std::vector<CuratedDataset> sets;
  int level = 1;
  for (const auto& s : default_sources()) {
    std::vector<int> bits(20);
    for (int i = 0; i < 10; ++i) bits[i] = 1;
    sets.push_back(bits_dataset(s, bits));
    k[s.id()] = level++;
  }
  const EvaluationReport r = evaluate(FixedPredictor(k), sets);
  c.expect(r.per_source.size() == 9, "worked example lost a source");
  for (std::size_t i = 0; i < r.per_source.size(); ++i) {
    const double want = (static_cast<double>(k[r.per_source[i].source.id()])) / 10.0;
    c.expect(r.per_source[i].balanced_accuracy == want,
             fmt::format("{} scored {}", r.per_source[i].source.id(), r.per_source[i].balanced_accuracy));
  }
  c.expect(r.average == 0.5, fmt::format("worked example average {:.17g}", r.average));
  c.note(fmt::format("1000 instances ({} one-class, all kUndefined), worst |diff| {:.1g}; 10..90% averages {:.17g}",
                     undefined, worst, r.average));
  return c;
}

Checks loss_identities() {
  Checks c;
  Rng rng(2);
  double worst_self = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + static_cast<int>(rng.below(9));
    std::vector<double> z(k);
    for (auto& v : z) v = rng.normal() * 5.0;
    for (double temp : {0.5, 1.0, 2.0, 4.0}) worst_self = std::max(worst_self, std::abs(distillation_loss(z, z, temp)));
  }
  c.expect(worst_self <= 1e-9, fmt::format("L_d(z,z,T) reached {:.3g}", worst_self));

  const double kl = distillation_loss(std::vector<double>{0.0, 0.0}, std::vector<double>{std::log(2.0), 0.0}, 1.0);
  const double hand = (2.0 / 3.0) * std::log(4.0 / 3.0) + (1.0 / 3.0) * std::log(2.0 / 3.0);
  c.expect(std::abs(kl - 0.0566) <= 1e-4, fmt::format("2-class KL {:.6f}", kl));
  c.expect(std::abs(kl - hand) <= 1e-12, fmt::format("2-class KL {:.17g} vs hand {:.17g}", kl, hand));

  for (int bit : {0, 1}) {
    const double l = correctness_loss(0.5, bit);
    c.expect(std::abs(l - std::log(2.0)) <= 1e-9, fmt::format("L_r(0.5,{}) = {:.17g}", bit, l));
  }

  for (int t = 0; t < 100; ++t) {
    const double lr = rng.uniform(0.0, 5.0), ld = rng.uniform(0.0, 5.0);
    c.expect(total_loss(lr, ld, 0.0) == ld, fmt::format("alpha 0 gave {} for L_d {}", total_loss(lr, ld, 0.0), ld));
    c.expect(total_loss(lr, ld, 1.0) == lr, fmt::format("alpha 1 gave {} for L_r {}", total_loss(lr, ld, 1.0), lr));
  }
  c.note(fmt::format("max L_d(z,z) {:.1g}, KL example {:.6f}, L_r(0.5) = ln 2", worst_self, kl));
  return c;
}

Checks gradient_check() {
  Checks c;
  const double h = 1e-5;
  double worst = 0.0;
  long checked = 0;
  for (int point = 0; point < 100; ++point) {
    Rng rng(1000 + point);
    nn::MlpHead head_r(4, 4, 3, rng), head_p(4, 4, 1, rng);
    nn::ParamRefs params;
    head_r.collect("r", params);
    head_p.collect("p", params);
    nn::set_trainable(params, true);
    const int n = 4;
    nn::Tensor x({n, 4}), ze({n, 3});
    for (auto& v : x.values()) v = rng.normal();
    for (auto& v : ze.values()) v = 2.0 * rng.normal();
    std::vector<int> bits(n);
    for (auto& b : bits) b = rng.bernoulli(0.5);
    const double alpha = rng.uniform(), temp = rng.uniform(0.5, 3.0);
    auto loss = [&] {
      nn::Var in(x);
      const nn::Var zr = head_r.forward(in);
      const nn::Var zp = nn::sigmoid(nn::reshape(head_p.forward(in), {n}));
      return total_loss(correctness_loss(zp, bits), distillation_loss(zr, ze, temp), alpha);
    };
    nn::zero_grads(params);
    loss().backward();
    for (const auto& p : params) {
      const auto analytic = p.var->grad();
      for (std::size_t i = 0; i < p.var->value().size(); ++i) {
        const double orig = p.var->value()[i];
        p.var->mutable_value()[i] = orig + h;
        const double up = loss().value()[0];
        p.var->mutable_value()[i] = orig - h;
        const double down = loss().value()[0];
        p.var->mutable_value()[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(numeric - analytic[i]) / std::max(std::abs(numeric) + std::abs(analytic[i]), 1e-6);
        if (rel > 1e-4) c.expect(false, fmt::format("point {} {}[{}]: rel err {:.3g}", point, p.name, i, rel));
        worst = std::max(worst, rel);
        ++checked;
      }
    }
  }
  c.note(fmt::format("{} partials over 100 points, worst rel err {:.2g}", checked, worst));
  return c;
}

Checks attack_containment() {
  Checks c;
  ToyWorld& w = world();
  std::vector<Image> imgs;
  std::vector<int> labels;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& it = w.pool.items()[i * 7 % w.pool.size()];
    imgs.push_back(it.image);
    labels.push_back(it.label);
    seeds.push_back(500 + i);
  }
  const std::string digest = w.mentee->weight_digest();
  double worst_excess = -1.0;
  for (auto kind : {ErrorKind::kPgd, ErrorKind::kCw, ErrorKind::kJitter, ErrorKind::kPifgsm}) {
    for (int e : {1, 4, 8}) {
      if (kind == ErrorKind::kCw && e != 1) continue;  // no epsilon
      AttackParams p;
      p.kind = kind;
      p.epsilon = e / 255.0;
      const auto out = attack_batch(*w.mentee, imgs, labels, p, seeds);
      for (std::size_t i = 0; i < out.size(); ++i) {
        c.expect(out[i].same_shape(imgs[i]), fmt::format("{} changed shape", kind_name(kind)));
        c.expect(in_unit_box(out[i]), fmt::format("{} eps {} left [0,1] on image {}", kind_name(kind), e, i));
        if (kind == ErrorKind::kPgd || kind == ErrorKind::kJitter) {
          const double d = linf(out[i], imgs[i]);
          worst_excess = std::max(worst_excess, d - p.epsilon);
          c.expect(d <= p.epsilon + 1e-7, fmt::format("{} eps {}/255 moved {:.9f}", kind_name(kind), e, d));
        }
      }
      c.expect(w.mentee->weight_digest() == digest, fmt::format("{} changed the mentee", kind_name(kind)));
    }
  }

  int identities = 0;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    AttackParams zero;
    zero.epsilon = 0.0;
    AttackParams still;
    still.epsilon = 8.0 / 255.0;
    still.steps = 0;
    still.cw_iters = 0;
    const std::vector<std::pair<std::string, Image>> outs = {
        {"PGD eps 0", pgd(*w.mentee, imgs[i], labels[i], zero)},
        {"Jitter eps 0", jitter(*w.mentee, imgs[i], labels[i], zero, seeds[i])},
        {"PIFGSM eps 0", pifgsm(*w.mentee, imgs[i], labels[i], zero)},
        {"PGD steps 0", pgd(*w.mentee, imgs[i], labels[i], still)},
        {"Jitter steps 0", jitter(*w.mentee, imgs[i], labels[i], still, seeds[i])},
        {"PIFGSM steps 0", pifgsm(*w.mentee, imgs[i], labels[i], still)},
        {"CW iters 0", cw_l2(*w.mentee, imgs[i], labels[i], still)},
    };
    for (const auto& [name, out] : outs) {
      c.expect(out == imgs[i], fmt::format("{} is not an identity on image {}", name, i));
      ++identities;
    }
  }
  c.expect(w.mentee->weight_digest() == digest, "identity runs changed the mentee");
  c.note(fmt::format("100 images x 10 attack settings in the box, PGD/Jitter max excess over eps {:.2g}, "
                     "{} identity checks, mentee digest unchanged",
                     worst_excess, identities));
  return c;
}

Checks attack_effectiveness() {
  Checks c;
  ToyWorld& w = world();
  const auto& clean = w.set(ErrorSource::in_domain(), Split::kTest);
  const auto& adv = w.set(ErrorSource::attack(ErrorKind::kPgd, 8), Split::kTest);
  const double a_clean = static_cast<double>(clean.n_correct()) / clean.records.size();
  const double a_adv = static_cast<double>(adv.n_correct()) / adv.records.size();
  c.expect(a_clean - a_adv >= 0.05, fmt::format("drop only {:.1f} pp", 100 * (a_clean - a_adv)));
  c.note(fmt::format("clean {:.1f}% vs PGD 8/255 {:.1f}% on {} test images (drop {:.1f} pp)", 100 * a_clean,
                     100 * a_adv, clean.records.size(), 100 * (a_clean - a_adv)));
  return c;
}

Checks corruption_properties() {
  Checks c;
  std::vector<Image> imgs;
  const ImagePool pool = synthetic_gratings("c6", {.count = 40}, 6);
  for (const auto& it : pool.items()) imgs.push_back(it.image);
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    Image img(16, 16);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    imgs.push_back(img);
  }
  imgs.push_back(Image(16, 16, 0.0f));
  imgs.push_back(Image(16, 16, 1.0f));
  imgs.push_back(Image(12, 20, 0.5f));

  int cases = 0;
  for (auto kind : {ErrorKind::kSpN, ErrorKind::kGaB, ErrorKind::kSpat, ErrorKind::kSat}) {
    for (int sev = 1; sev <= SeverityTable::kLevels; ++sev) {
      for (std::size_t i = 0; i < imgs.size(); ++i) {
        const Image out = corrupt(imgs[i], kind, sev, 100 + i);
        c.expect(out.same_shape(imgs[i]) && out.size() == imgs[i].size(),
                 fmt::format("{}-{} changed shape", kind_name(kind), sev));
        c.expect(in_unit_box(out), fmt::format("{}-{} left [0,1] on image {}", kind_name(kind), sev, i));
        ++cases;
      }
    }
  }

  // Same seed at every sigma; images with no signal cannot get noisier.
  int curves = 0;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    if (std::all_of(imgs[i].pixels.begin(), imgs[i].pixels.end(), [](float v) { return v == 0.0f; })) continue;
    double prev = -1.0;
    for (double sigma : kSpeckleSweep) {
      const double mse = mean_squared_error(speckle_noise(imgs[i], sigma, 77 + i), imgs[i]);
      c.expect(mse > prev, fmt::format("SpN MSE not increasing at sigma {} on image {}", sigma, i));
      prev = mse;
    }
    ++curves;
  }

  double worst_sat = 0.0;
  for (const auto& img : imgs) worst_sat = std::max(worst_sat, linf(scale_saturation(img, 1.0), img));
  c.expect(worst_sat <= 1e-6, fmt::format("saturation at unit scale moved {:.3g}", worst_sat));
  c.note(fmt::format("{} corruption outputs in range, {} strictly increasing SpN curves over {{0.01,0.06,0.15,0.6}}, "
                     "unit saturate max diff {:.1g}",
                     cases, curves, worst_sat));
  return c;
}

Checks curation_integrity() {
  Checks c;
  ToyWorld& w = world();
  const std::string a = manifest_to_text(split_dataset(w.pool.ids(), mix_seed(ToyWorld::kSeed, "split"), w.pool.name()));
  const std::string b = manifest_to_text(split_dataset(w.pool.ids(), mix_seed(ToyWorld::kSeed, "split"), w.pool.name()));
  c.expect(a == b, "split manifests differ between runs");
  c.expect(a == manifest_to_text(w.manifest), "split manifest differs from the first one");

  const auto sources = default_sources();
  std::vector<const CuratedDataset*> train, test;
  for (const auto& s : sources) {
    train.push_back(&w.set(s, Split::kTrain));
    test.push_back(&w.set(s, Split::kTest));
  }

  std::size_t pairs = 0;
  for (const auto* tr : train) {
    std::set<std::string> ids;
    for (const auto& r : tr->records) ids.insert(r.original_id);
    for (const auto* te : test) {
      for (const auto& r : te->records) {
        c.expect(!ids.contains(r.original_id),
                 fmt::format("{} in {} train and {} test", r.original_id, tr->source.id(), te->source.id()));
      }
      ++pairs;
    }
  }

  std::size_t records = 0;
  for (const auto& list : {train, test}) {
    for (const auto* ds : list) {
      const auto images = ds->images();
      const auto z = w.mentee->predict_logits(images);
      for (std::size_t i = 0; i < ds->records.size(); ++i) {
        const auto& r = ds->records[i];
        c.expect(correctness(z.row(i), r.label) == r.correctness,
                 fmt::format("c_E mismatch for {} in {}", r.original_id, ds->source.id()));
        ++records;
      }
    }
  }

  std::size_t batches = 0;
  for (const auto* ds : train) {
    try {
      for (const auto& batch : balanced_batches(*ds, 32, 11)) {
        int right = 0;
        for (int i : batch) right += ds->records[i].correctness;
        c.expect(2 * right == static_cast<int>(batch.size()),
                 fmt::format("{} batch of {} has {} correct", ds->source.id(), batch.size(), right));
        ++batches;
      }
    } catch (const Error& e) {
      c.expect(false, fmt::format("{}: {}", ds->source.id(), e.what()));
    }
  }
  c.note(fmt::format("byte-identical manifests, {} source pairs disjoint, c_E recomputed on {} records, "
                     "{} balanced batches",
                     pairs, records, batches));
  return c;
}

struct McpCase {
  std::vector<double> z;
  double gamma;
  int want;
};
struct CpeCase {
  std::vector<double> z;
  double alpha;
  int want;
};
struct DtcCase {
  std::vector<double> f;
  int predicted;
  double d;
  int want;
};

Checks baseline_formulas() {
  Checks c;
  const double ln3 = std::log(3.0), ln9 = std::log(9.0), ln2 = std::log(2.0);
  const std::vector<double> u10(10, 0.0);
  // Probabilities worked out by hand; the boundary cases are ties and strict
  // inequalities make them 0.
  const std::vector<McpCase> mcp = {
      {{0, 0}, 0.5, 0},          {{0, 0}, 0.49, 1},          {{0, 0, 0, 0}, 0.25, 0},   {{0, 0, 0, 0}, 0.2, 1},
      {u10, 0.5, 0},             {u10, 0.09, 1},             {{10, 0, 0}, 0.9, 1},      {{10, 0, 0}, 0.99999, 0},
      {{ln3, 0}, 0.7, 1},        {{ln3, 0}, 0.8, 0},         {{0, ln3}, 0.7, 1},        {{5, 5}, 0.5, 0},
      {{-3, -3, -3}, 1.0 / 3, 0}, {{2, 2, -1000}, 0.5, 0},   {{2, 2, -1000}, 0.4, 1},   {{ln9, 0}, 0.5, 1},
      {{1, 0}, 0.73, 1},         {{1, 0}, 0.74, 0},          {{0, 0, ln2}, 0.5, 0},     {{0, 0, ln2}, 0.45, 1},
  };
  const std::vector<CpeCase> cpe = {
      {{0, 0}, 0.5, 0},          {{0, 0}, 1.0, 0},          {{0, 0, 0, 0}, 1.0, 0},    {u10, 0.99, 0},
      {u10, 0.3, 0},             {{10, 0, 0}, 0.01, 1},     {{10, 0, 0}, 0.0001, 0},   {{ln3, 0}, 0.8, 0},
      {{ln3, 0}, 0.82, 1},       {{0, ln3}, 0.82, 1},       {{100 + ln3, 100}, 0.82, 1}, {{0, 0, ln2}, 0.95, 1},
      {{0, 0, ln2}, 0.94, 0},    {{1000, 0}, 0.01, 1},      {{0, ln9}, 0.45, 0},
  };
  CentroidTable table;
  table.dim = 2;
  table.centroids = {{0, {0, 0}}, {1, {1, 1}}, {2, {-2, 0}}};
  table.counts = {{0, 1}, {1, 1}, {2, 1}};
  const std::vector<DtcCase> dtc = {
      {{3, 4}, 0, 5.0, 0},   {{3, 4}, 0, 5.0001, 1}, {{3, 4}, 0, 4.9, 0},    {{1, 1}, 1, 0.1, 1},
      {{1, 1}, 1, 1e-12, 1}, {{4, 5}, 1, 5.0, 0},    {{4, 5}, 1, 6.0, 1},    {{0, 0}, 2, 2.0, 0},
      {{0, 0}, 2, 2.5, 1},   {{0, 0}, 3, 100.0, 0},  {{-2, 0}, 2, 1e-9, 1},  {{3, 4}, 1, 3.6, 0},
      {{3, 4}, 1, 3.61, 1},  {{0, -5}, 0, 5.0, 0},   {{0.5, 0.5}, 0, 1.0, 1},
  };
  for (const auto& k : mcp) {
    const int got = mcp_predict(k.z, k.gamma);
    c.expect(got == k.want, fmt::format("MCP {} gamma {} gave {}", fmt::join(k.z, ","), k.gamma, got));
  }
  for (const auto& k : cpe) {
    const int got = cpe_predict(k.z, k.alpha);
    c.expect(got == k.want, fmt::format("CPE {} alpha {} gave {}", fmt::join(k.z, ","), k.alpha, got));
  }
  int missing = 0;
  for (const auto& k : dtc) {
    const DtcResult got = dtc_predict(k.f, k.predicted, table, k.d);
    c.expect(got.bit == k.want, fmt::format("DTC {} class {} d {} gave {}", fmt::join(k.f, ","), k.predicted, k.d,
                                            got.bit));
    missing += got.missing_centroid;
  }
  c.expect(missing == 1, fmt::format("{} missing-centroid flags", missing));
  // Spot values behind the cases.
  c.expect(std::abs(max_class_probability(std::vector<double>{ln3, 0}) - 0.75) < 1e-12, "MCP of [ln3,0]");
  c.expect(std::abs(class_probability_entropy(u10) - std::log(10.0)) < 1e-12, "entropy of uniform 10");
  c.expect(std::abs(dtc_predict(std::vector<double>{3, 4}, 0, table, 1.0).distance - 5.0) < 1e-12, "distance 3-4-5");

  // SER draws.
  double worst_rate = 0.0;
  for (double target : {0.2, 0.5, 0.8, 0.9698}) {
    const auto bits = ser_predict(target, 9, 100000);
    double mean = 0.0;
    for (int b : bits) mean += b;
    mean /= bits.size();
    worst_rate = std::max(worst_rate, std::abs(mean - target));
    c.expect(std::abs(mean - target) <= 0.005, fmt::format("SER rate {:.4f} for target {}", mean, target));
  }
  std::vector<int> balanced(10000, 0);
  std::fill(balanced.begin(), balanced.begin() + 5000, 1);
  const auto ds = bits_dataset(ErrorSource::in_domain(), balanced);
  const SerPredictor ser(0.8, 3);
  const double ba = balanced_accuracy(ser.predict(ds), ds.correctness_bits());
  c.expect(std::abs(ba - 0.5) <= 0.02, fmt::format("SER balanced accuracy {:.4f}", ba));
  c.note(fmt::format("{} hand cases (MCP {}, CPE {}, DTC {}), SER max rate error {:.4f}, SER balanced accuracy {:.4f}",
                     mcp.size() + cpe.size() + dtc.size(), mcp.size(), cpe.size(), dtc.size(), worst_rate, ba));
  return c;
}

Checks error_type_trend() {
  Checks c;
  ScratchDir root(g_workdir);
  const ExperimentConfig cfg = parse_config(R"({
    "run_id": "trend",
    "mentees": [{"id": "toy-cnn", "arch": "toy-cnn"}],
    "curation": {"severity_sweep": false, "relabel": false},
    "mentor": {"train_sources": ["ID", "OOD-SpN-1", "AA-PGD-eps1"], "seeds": [0, 1, 2], "lr": 0.003},
    "eval": {"baselines": false, "landscape_magnitudes": []}
  })");
  std::ostringstream log;
  cmd_curate(cfg, root.path(), log);
  cmd_train(cfg, root.path(), log);
  cmd_eval(cfg, root.path(), log);

  int wins = 0;
  std::vector<std::string> rows;
  for (std::uint64_t seed : cfg.mentor.seeds) {
    const Table grid = read_tsv(root.path() / cfg.run_id / "tables" / fmt::format("grid-s{}.tsv", seed));
    std::map<std::string, double> mean;
    for (const auto& r : grid.rows) mean[r[grid.column("train_source")]] = std::stod(r[grid.column("row_mean")]);
    const double id = mean["ID"], spn = mean["OOD-SpN-1"], aa = mean["AA-PGD-eps1"];
    wins += aa > id;
    rows.push_back(fmt::format("s{} ID {:.3f} SpN {:.3f} PGD {:.3f}", seed, id, spn, aa));
  }
  c.expect(wins >= 2, fmt::format("AA-trained mean beat ID-trained in {} of 3 seeds", wins));
  c.note(fmt::format("{}; AA > ID in {}/3", fmt::join(rows, ", "), wins));
  return c;
}

Checks landscape_probe() {
  Checks c;
  ToyWorld& w = world();
  MentorSpec spec;
  spec.num_classes = w.pool.num_classes();
  MentorModel mentor("AA-PGD-eps1-s0", spec, 10);
  MentorTrainOptions opts;
  opts.epochs = 10;
  opts.lr = 3e-3;
  opts.seed = 10;
  train_mentor(mentor, w.set(ErrorSource::attack(ErrorKind::kPgd, 1), Split::kTrain), opts, w.mentee.get());
  mentor.set_mentee_id(w.mentee->id());

  const auto tests = w.tests();
  const double baseline = evaluate(MentorPredictor(mentor), tests).average;
  const std::string before = mentor.weight_digest();
  const std::vector<double> mags = {0.0, 0.1, 0.25, 0.5, 1.0};
  const LandscapeProfile prof = loss_landscape_probe(mentor, tests, mags, 1);
  c.expect(prof.accuracies.size() == mags.size(), "profile length");
  c.expect(prof.accuracies.front() == baseline,
           fmt::format("magnitude 0 gave {:.17g}, baseline {:.17g}", prof.accuracies.front(), baseline));
  c.expect(mentor.weight_digest() == before, "probe changed the mentor");
  c.expect(prof.digest_before == before && prof.digest_after == before, "probe digests differ");
  c.expect(prof.accuracies.back() <= baseline,
           fmt::format("largest magnitude {:.4f} above baseline {:.4f}", prof.accuracies.back(), baseline));
  std::vector<std::string> curve;
  for (std::size_t i = 0; i < prof.accuracies.size(); ++i) {
    curve.push_back(fmt::format("{}:{:.3f}", mags[i], prof.accuracies[i]));
  }
  c.note(fmt::format("curve {}, weight digest unchanged", fmt::join(curve, " ")));
  return c;
}

Checks partition_property() {
  Checks c;
  Rng rng(11);
  std::vector<std::string> ids;
  std::vector<int> a(1000), b(1000);
  for (int i = 0; i < 1000; ++i) {
    ids.push_back(fmt::format("r{:04d}", i));
    a[i] = rng.bernoulli(0.5);
    b[i] = rng.bernoulli(0.5);
  }
  const Partition p = natural_adversarial_partition(ids, a, b);
  std::map<std::string, int> where;  // -1 when listed twice
  auto place = [&](const std::vector<std::string>& set, int tag) {
    for (const auto& id : set) {
      const auto [it, fresh] = where.emplace(id, tag);
      if (!fresh) it->second = -1;
    }
  };
  place(p.n1, 1);
  place(p.n2, 2);
  place(p.n3, 3);
  int combos[2][2] = {};
  for (int i = 0; i < 1000; ++i) {
    const int want = a[i] == 0 && b[i] == 0 ? 1 : a[i] == 0 ? 2 : b[i] == 0 ? 3 : 0;
    const int got = where.contains(ids[i]) ? where[ids[i]] : 0;
    c.expect(got == want, fmt::format("{} (c_A={}, c_B={}) placed in {}", ids[i], a[i], b[i], got));
    ++combos[a[i]][b[i]];
  }
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) c.expect(combos[x][y] > 0, fmt::format("combination ({},{}) never drawn", x, y));
  }
  c.expect(p.n1.size() + p.n2.size() + p.n3.size() + p.both_correct == 1000, "counting identity");
  c.expect(p.both_correct == static_cast<std::size_t>(combos[1][1]), "both-correct count");

  // 1750 of 2225 right.
  std::vector<int> targets(2225), preds(2225);
  for (int i = 0; i < 2225; ++i) {
    targets[i] = i % 2;
    preds[i] = i < 1750 ? targets[i] : 1 - targets[i];
  }
  const std::string s = set_accuracy(preds, targets).format();
  c.expect(s == "1750/2225 (78.7%)", fmt::format("format gave '{}'", s));
  c.note(fmt::format("N1 {} N2 {} N3 {} both {} of 1000; format '{}'", p.n1.size(), p.n2.size(), p.n3.size(),
                     p.both_correct, s));
  return c;
}

Checks pipeline_determinism() {
  Checks c;
  const ExperimentConfig cfg = parse_config("{}", {"run_id=determinism", "mentor.epochs=1"});
  ScratchDir a(g_workdir), b(g_workdir);
  for (const auto* root : {&a, &b}) {
    std::ostringstream log;
    cmd_curate(cfg, root->path(), log);
    cmd_train(cfg, root->path(), log);
    cmd_eval(cfg, root->path(), log);
  }
  const auto va = report_values(a.path() / cfg.run_id);
  const auto vb = report_values(b.path() / cfg.run_id);
  c.expect(va.size() == vb.size(), fmt::format("{} vs {} report values", va.size(), vb.size()));
  double worst = 0.0;
  for (const auto& [k, v] : va) {
    const auto it = vb.find(k);
    if (it == vb.end()) {
      c.expect(false, "second run lacks " + k);
      continue;
    }
    if (std::isnan(v) || std::isnan(it->second)) {
      c.expect(std::isnan(v) && std::isnan(it->second), k + " is NaN in one run only");
      continue;
    }
    worst = std::max(worst, std::abs(v - it->second));
    c.expect(std::abs(v - it->second) <= 1e-6, fmt::format("{}: {} vs {}", k, v, it->second));
  }
  c.note(fmt::format("{} per-source values across {} reports, max |diff| {:.1g}", va.size(),
                     std::count_if(va.begin(), va.end(), [](const auto& kv) { return kv.first.ends_with("/average"); }),
                     worst));
  return c;
}

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;
  std::function<Checks()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "metric oracle", 5, metric_oracle},
      {2, "loss identities", 1, loss_identities},
      {3, "gradient check", 30, gradient_check},
      {4, "attack containment", 120, attack_containment},
      {5, "attack effectiveness", 300, attack_effectiveness},
      {6, "corruption properties", 60, corruption_properties},
      {7, "curation integrity", 120, curation_integrity},
      {8, "baseline formulas", 60, baseline_formulas},
      {9, "error-type trend", 2700, error_type_trend},
      {10, "landscape probe", 300, landscape_probe},
      {11, "partition property", 1, partition_property},
      {12, "pipeline determinism", 600, pipeline_determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string workdir;
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 12));
  app.add_option("--workdir", workdir, "scratch space for pipeline runs (default: system temp)");
  CLI11_PARSE(app, argc, argv);
  if (!workdir.empty()) {
    g_workdir = workdir;
    fs::create_directories(g_workdir);
  }

  int failed = 0;
  for (const auto& cr : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.number) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Checks result;
    bool threw = false;
    std::string error;
    try {
      result = cr.run();
    } catch (const std::exception& e) {
      threw = true;
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < cr.budget_seconds;
    const bool pass = !threw && result.ok() && in_time;
    std::string detail = threw ? "exception: " + error : result.summary();
    if (!in_time) detail += fmt::format("; over the {:.0f} s budget", cr.budget_seconds);
    std::cout << fmt::format("{} {:>2} {:<22} {:8.2f}s  {}", pass ? "PASS" : "FAIL", cr.number, cr.name, secs, detail)
              << std::endl;
    failed += !pass;
  }
  return failed == 0 ? 0 : 1;
}
