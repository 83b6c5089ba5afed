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

#include "blindspot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/rng.hpp"

namespace blindspot {

namespace {

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : "NA"; }

std::unordered_map<std::string, std::size_t> index_by_id(const CuratedDataset& ds) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) out.emplace(ds.records[i].original_id, i);
  return out;
}

}  // namespace

double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size(),
          fmt::format("{} predictions for {} labels", predictions.size(), labels.size()));
  long hit[2] = {0, 0};
  long total[2] = {0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, fmt::format("label {} is not a bit", labels[i]));
    require(predictions[i] == 0 || predictions[i] == 1, fmt::format("prediction {} is not a bit", predictions[i]));
    const int c = labels[i];
    ++total[c];
    if (predictions[i] == c) ++hit[c];
  }
  if (total[0] == 0 || total[1] == 0) {
    fail(ErrorCode::kUndefined, fmt::format("balanced accuracy undefined: {} mentee-correct, {} mentee-wrong",
                                            total[1], total[0]));
  }
  return 0.5 * static_cast<double>(hit[1]) / static_cast<double>(total[1]) +
         0.5 * static_cast<double>(hit[0]) / static_cast<double>(total[0]);
}

EvaluationReport evaluate(const Predictor& predictor, std::span<const CuratedDataset> datasets) {
  if (datasets.empty()) fail(ErrorCode::kValidation, "evaluate needs at least one test dataset");
  std::vector<const CuratedDataset*> order;
  for (const auto& d : datasets) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->source < b->source; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    require(order[i - 1]->source != order[i]->source,
            fmt::format("source {} appears twice in the test list", order[i]->source.id()));
  }

  EvaluationReport report;
  report.mentor_id = predictor.id();
  report.mentee_id = order.front()->mentee_id;
  for (const auto* ds : order) {
    const auto bits = ds->correctness_bits();
    const int n_correct = ds->n_correct();
    const int n_wrong = ds->n_wrong();
    if (n_correct == 0 || n_wrong == 0) {
      report.excluded.push_back(
          {ds->source, fmt::format("one-class test set ({} correct, {} wrong)", n_correct, n_wrong)});
      continue;
    }
    const auto pred = predictor.predict(*ds);
    report.per_source.push_back({ds->source, balanced_accuracy(pred, bits), n_correct, n_wrong});
  }
  if (report.per_source.empty()) {
    fail(ErrorCode::kUndefined, "every test source has a single class; no average");
  }
  report.average = report.recompute_average();
  return report;
}

ConfusionGrid confusion_grid(std::span<const std::pair<ErrorSource, const Predictor*>> rows,
                             std::span<const CuratedDataset> datasets) {
  require(!rows.empty() && !datasets.empty(), "confusion grid needs predictors and test datasets");
  const std::string& mentee = datasets.front().mentee_id;
  for (const auto& d : datasets) {
    require(d.mentee_id == mentee,
            fmt::format("test datasets mix mentees '{}' and '{}'", mentee, d.mentee_id));
  }
  for (const auto& [src, p] : rows) {
    const auto m = p->mentee_id();
    require(m.empty() || m == mentee,
            fmt::format("predictor {} targets mentee '{}' but the test data is labeled by '{}'", p->id(), m, mentee));
  }

  ConfusionGrid grid;
  for (const auto& d : datasets) grid.col_sources.push_back(d.source);
  std::vector<std::future<std::vector<double>>> jobs;
  for (const auto& [src, p] : rows) {
    grid.row_ids.push_back(p->id());
    grid.row_sources.push_back(src);
    jobs.push_back(std::async(std::launch::async, [&datasets, p = p] {
      std::vector<double> out;
      for (const auto& d : datasets) {
        if (d.n_correct() == 0 || d.n_wrong() == 0) {
          out.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          out.push_back(balanced_accuracy(p->predict(d), d.correctness_bits()));
        }
      }
      return out;
    }));
  }
  for (auto& j : jobs) {
    grid.values.push_back(j.get());
    double sum = 0.0;
    int n = 0;
    for (double v : grid.values.back()) {
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    grid.row_means.push_back(n ? sum / n : std::numeric_limits<double>::quiet_NaN());
  }
  return grid;
}

std::string grid_to_tsv(const ConfusionGrid& grid) {
  std::string out = "train_source\tpredictor";
  for (const auto& c : grid.col_sources) out += "\t" + c.id();
  out += "\trow_mean\n";
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    out += grid.row_sources[i].id() + "\t" + grid.row_ids[i];
    for (double v : grid.values[i]) out += "\t" + cell(v);
    out += "\t" + cell(grid.row_means[i]) + "\n";
  }
  return out;
}

EvaluationReport cross_mentee_eval(const MentorModel& mentor, std::span<const CuratedDataset> relabeled,
                                   const std::string& other_mentee_id) {
  for (const auto& d : relabeled) {
    if (d.mentee_id != other_mentee_id) {
      fail(ErrorCode::kNotFound,
           fmt::format("no {} labels from mentee '{}' for source {} (found '{}'); run curate with relabel enabled",
                       split_name(d.split), other_mentee_id, d.source.id(), d.mentee_id));
    }
  }
  EvaluationReport r = evaluate(MentorPredictor(mentor), relabeled);
  r.mentee_id = other_mentee_id;
  if (other_mentee_id != mentor.mentee_id()) r.tag = "cross-mentee";
  return r;
}

std::string scatter_to_tsv(std::span<const ScatterPoint> points) {
  std::string out = "mentor\tsame_mentee\tcross_mentee\n";
  for (const auto& p : points) out += p.mentor_id + "\t" + cell(p.same_mentee) + "\t" + cell(p.cross_mentee) + "\n";
  return out;
}

LandscapeProfile loss_landscape_probe(const MentorModel& mentor, std::span<const CuratedDataset> datasets,
                                      std::span<const double> magnitudes, std::uint64_t seed) {
  require(std::find(magnitudes.begin(), magnitudes.end(), 0.0) != magnitudes.end(),
          "probe magnitudes must include 0");
  LandscapeProfile prof;
  prof.direction_seed = seed;
  prof.magnitudes.assign(magnitudes.begin(), magnitudes.end());
  prof.digest_before = mentor.weight_digest();

  // direction, scaled per tensor so ||d_i|| = ||w_i||
  MentorModel shape_src = mentor.clone();
  std::vector<nn::Tensor> direction;
  Rng rng(mix_seed(seed, "landscape"));
  for (const auto& p : shape_src.params()) {
    const nn::Tensor& w = p.var->value();
    nn::Tensor d(w.shape());
    double dn = 0.0, wn = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = rng.normal();
      dn += d[i] * d[i];
      wn += w[i] * w[i];
    }
    const double s = dn > 0.0 ? std::sqrt(wn) / std::sqrt(dn) : 0.0;
    for (auto& v : d.values()) v *= s;
    direction.push_back(std::move(d));
  }

  for (double m : magnitudes) {
    MentorModel probe = mentor.clone();
    if (m != 0.0) {
      auto ps = probe.params();
      for (std::size_t k = 0; k < ps.size(); ++k) {
        auto& w = ps[k].var->mutable_value();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += m * direction[k][i];
      }
    }
    double acc = 0.0;
    try {
      acc = evaluate(MentorPredictor(probe), datasets).average;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite || m == 0.0) throw;
    }
    prof.accuracies.push_back(std::isfinite(acc) ? acc : 0.0);
  }

  prof.digest_after = mentor.weight_digest();
  if (prof.digest_after != prof.digest_before) {
    fail(ErrorCode::kIntegrity, "mentor weights changed during the landscape probe");
  }
  return prof;
}

std::string landscape_to_tsv(const std::vector<std::pair<std::string, LandscapeProfile>>& profiles) {
  std::string out = "mentor\tmagnitude\taccuracy\n";
  for (const auto& [id, p] : profiles) {
    for (std::size_t i = 0; i < p.magnitudes.size(); ++i) {
      out += fmt::format("{}\t{}\t{}\n", id, p.magnitudes[i], cell(p.accuracies[i]));
    }
  }
  return out;
}

Partition natural_adversarial_partition(std::span<const std::string> ids, std::span<const int> correct_a,
                                        std::span<const int> correct_b) {
  if (correct_a.size() != ids.size() || correct_b.size() != ids.size()) {
    fail(ErrorCode::kValidation, fmt::format("{} ids but {} / {} correctness bits", ids.size(), correct_a.size(),
                                             correct_b.size()));
  }
  Partition p;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int a = correct_a[i], b = correct_b[i];
    require((a == 0 || a == 1) && (b == 0 || b == 1), fmt::format("non-bit correctness for {}", ids[i]));
    if (a == 0 && b == 0) {
      p.n1.push_back(ids[i]);
    } else if (a == 0) {
      p.n2.push_back(ids[i]);
    } else if (b == 0) {
      p.n3.push_back(ids[i]);
    } else {
      ++p.both_correct;
    }
  }
  return p;
}

Partition natural_adversarial_partition(const CuratedDataset& labeled_by_a, const CuratedDataset& labeled_by_b) {
  require(labeled_by_a.records.size() == labeled_by_b.records.size(),
          fmt::format("datasets hold {} and {} records", labeled_by_a.records.size(), labeled_by_b.records.size()));
  const auto b_index = index_by_id(labeled_by_b);
  std::vector<std::string> ids;
  std::vector<int> a, b;
  for (const auto& r : labeled_by_a.records) {
    auto it = b_index.find(r.original_id);
    if (it == b_index.end()) {
      fail(ErrorCode::kValidation, fmt::format("no second-mentee correctness bit for {}", r.original_id));
    }
    ids.push_back(r.original_id);
    a.push_back(r.correctness);
    b.push_back(labeled_by_b.records[it->second].correctness);
  }
  return natural_adversarial_partition(ids, a, b);
}

std::optional<double> SetAccuracy::fraction() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / total;
}

std::string SetAccuracy::format() const {
  const auto f = fraction();
  if (!f) return fmt::format("{}/{} (–)", hits, total);
  return fmt::format("{}/{} ({:.1f}%)", hits, total, 100.0 * *f);
}

SetAccuracy set_accuracy(std::span<const int> predictions, std::span<const int> targets) {
  require(predictions.size() == targets.size(), "prediction and target counts differ");
  SetAccuracy s;
  s.total = static_cast<int>(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) s.hits += predictions[i] == targets[i];
  return s;
}

std::map<std::string, SetAccuracy> per_set_accuracy(const MentorModel& mentor, const Partition& sets,
                                                    const CuratedDataset& dataset) {
  const auto index = index_by_id(dataset);
  std::map<std::string, SetAccuracy> out;
  const std::pair<const char*, const std::vector<std::string>*> named[] = {
      {"N1", &sets.n1}, {"N2", &sets.n2}, {"N3", &sets.n3}};
  for (const auto& [name, ids] : named) {
    std::vector<Image> images;
    std::vector<int> targets;
    for (const auto& id : *ids) {
      auto it = index.find(id);
      if (it == index.end()) fail(ErrorCode::kNotFound, fmt::format("{} id {} is not in the dataset", name, id));
      images.push_back(dataset.records[it->second].image);
      targets.push_back(dataset.records[it->second].correctness);
    }
    const auto pred = images.empty() ? std::vector<int>{} : mentor_predict(mentor, images);
    out[name] = set_accuracy(pred, targets);
  }
  return out;
}

std::vector<EmbeddingRow> export_embeddings(const MentorModel& mentor, const CuratedDataset& dataset, int n_per_class,
                                            std::uint64_t seed, std::vector<std::string>* warnings) {
  require(n_per_class >= 1, fmt::format("n_per_class must be >= 1, got {}", n_per_class));
  std::vector<int> picks;
  for (int c : {0, 1}) {
    std::vector<int> pool;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
      if (dataset.records[i].correctness == c) pool.push_back(static_cast<int>(i));
    }
    Rng rng(mix_seed(seed, c));
    rng.shuffle(pool);
    if (static_cast<int>(pool.size()) < n_per_class) {
      if (warnings) {
        warnings->push_back(
            fmt::format("only {} records with c_E={} (asked for {}); using all", pool.size(), c, n_per_class));
      }
    } else {
      pool.resize(n_per_class);
    }
    picks.insert(picks.end(), pool.begin(), pool.end());
  }
  std::vector<EmbeddingRow> rows;
  if (picks.empty()) return rows;
  std::vector<Image> images;
  for (int i : picks) images.push_back(dataset.records[i].image);
  const nn::Tensor emb = mentor.embeddings(images);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const auto& r = dataset.records[picks[k]];
    const auto row = emb.row(k);
    rows.push_back({r.original_id, r.correctness, std::vector<double>(row.begin(), row.end())});
  }
  return rows;
}

std::string embeddings_to_tsv(std::span<const EmbeddingRow> rows) {
  std::string out = "original_id\tc_E";
  const std::size_t dim = rows.empty() ? 0 : rows.front().embedding.size();
  for (std::size_t j = 0; j < dim; ++j) out += fmt::format("\te{}", j);
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{}\t{}", r.original_id, r.correctness);
    for (double v : r.embedding) out += fmt::format("\t{:.9g}", v);
    out += "\n";
  }
  return out;
}

}  // namespace blindspot
