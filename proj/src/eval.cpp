//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rxncond/csv.hpp"
#include "rxncond/error.hpp"

namespace rxncond {
namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool is_permutation_of_range(const std::vector<std::size_t> &ranking, std::size_t n) {
  if (ranking.size() != n)
    return false;
  std::vector<bool> seen(n, false);
  for (std::size_t p: ranking) {
    if (p >= n || seen[p])
      return false;
    seen[p] = true;
  }
  return true;
}

}  // namespace

void RankingSet::add(std::vector<std::vector<std::size_t>> ranking,
                     std::vector<std::vector<std::size_t>> truth) {
  const std::size_t c = categories.size();
  if (ranking.size() != c || truth.size() != c)
    throw DimensionError("sample covers " + std::to_string(ranking.size()) + "/"
                         + std::to_string(truth.size()) + " categories, expected "
                         + std::to_string(c));
  for (std::size_t i = 0; i < c; ++i) {
    if (!is_permutation_of_range(ranking[i], category_sizes[i]))
      throw ValidationError("ranking for '" + categories[i]
                            + "' is not a permutation of its bins");
    if (truth[i].empty())
      throw ValidationError("empty ground truth for '" + categories[i] + "'");
    for (std::size_t p: truth[i]) {
      if (p >= category_sizes[i])
        throw ValidationError("ground truth outside category '" + categories[i] + "'");
    }
  }
  rankings.push_back(std::move(ranking));
  truths.push_back(std::move(truth));
}

RankingSet make_ranking_set(const ConditionDictionary &dict) {
  RankingSet set;
  for (const Category &c: dict.categories()) {
    set.categories.push_back(c.name);
    set.category_sizes.push_back(c.size());
  }
  return set;
}

std::vector<std::vector<std::size_t>> truth_positions(const TargetVector &targets,
                                                      const ConditionDictionary &dict) {
  if (targets.size() != dict.total_bins())
    throw DimensionError("target vector has " + std::to_string(targets.size())
                         + " bins, dictionary has " + std::to_string(dict.total_bins()));
  std::vector<std::vector<std::size_t>> out(dict.num_categories());
  for (std::size_t c = 0; c < dict.num_categories(); ++c) {
    const std::size_t offset = dict.category_offset(c);
    for (std::size_t bin = offset; bin <= dict.null_index(c); ++bin) {
      if (targets[bin] != 0)
        out[c].push_back(bin - offset);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> ranking_positions(const RankedPrediction &prediction,
                                                        const ConditionDictionary &dict) {
  if (prediction.size() != dict.num_categories())
    throw DimensionError("prediction covers " + std::to_string(prediction.size())
                         + " categories, dictionary has "
                         + std::to_string(dict.num_categories()));
  std::vector<std::vector<std::size_t>> out(prediction.size());
  for (std::size_t c = 0; c < prediction.size(); ++c) {
    const std::size_t offset = dict.category_offset(c);
    for (const RankedLabel &l: prediction[c].labels) {
      if (l.bin < offset || l.bin > dict.null_index(c))
        throw ValidationError("bin " + std::to_string(l.bin) + " outside category '"
                              + prediction[c].category + "'");
      out[c].push_back(l.bin - offset);
    }
  }
  return out;
}

std::vector<double> categorical_accuracy(const RankingSet &set, std::size_t k) {
  if (k < 1)
    throw ValidationError("k must be at least 1");
  if (set.size() == 0)
    throw ValidationError("cannot score an empty test set");
  std::vector<double> acc(set.categories.size(), 0.0);
  for (std::size_t c = 0; c < acc.size(); ++c) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const std::vector<std::size_t> &ranking = set.rankings[i][c];
      const std::vector<std::size_t> &truth = set.truths[i][c];
      const auto top = ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()));
      const bool hit = std::any_of(ranking.begin(), top, [&](std::size_t p) {
        return std::find(truth.begin(), truth.end(), p) != truth.end();
      });
      hits += hit ? 1 : 0;
    }
    acc[c] = static_cast<double>(hits) / static_cast<double>(set.size());
  }
  return acc;
}

DummyPredictor fit_dummy(std::span<const TargetVector> train, const ConditionDictionary &dict) {
  if (train.empty())
    throw ValidationError("cannot fit the dummy predictor on an empty training set");
  DummyPredictor dummy;
  dummy.training_size = train.size();
  for (const Category &c: dict.categories())
    dummy.counts.emplace_back(c.size(), 0);
  for (const TargetVector &t: train) {
    const auto truth = truth_positions(t, dict);
    for (std::size_t c = 0; c < truth.size(); ++c) {
      for (std::size_t p: truth[c])
        ++dummy.counts[c][p];
    }
  }
  for (const std::vector<std::size_t> &counts: dummy.counts) {
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return counts[a] > counts[b];
    });
    dummy.ranking.push_back(std::move(order));
  }
  return dummy;
}

RankingSet dummy_rankings(const DummyPredictor &dummy, std::span<const TargetVector> targets,
                          const ConditionDictionary &dict) {
  if (dummy.ranking.size() != dict.num_categories())
    throw DimensionError("dummy predictor was fitted on a different dictionary");
  RankingSet set = make_ranking_set(dict);
  for (const TargetVector &t: targets)
    set.add(dummy.ranking, truth_positions(t, dict));
  return set;
}

double aer(std::span<const double> model, std::span<const double> dummy,
           const std::vector<bool> &excluded) {
  if (model.size() != dummy.size())
    throw DimensionError("model and dummy accuracies cover " + std::to_string(model.size())
                         + " and " + std::to_string(dummy.size()) + " categories");
  if (!excluded.empty() && excluded.size() != model.size())
    throw DimensionError("exclusion mask does not match the category count");
  double total = 0.0;
  std::size_t included = 0;
  for (std::size_t c = 0; c < model.size(); ++c) {
    if (!excluded.empty() && excluded[c])
      continue;
    if (dummy[c] >= 1.0)
      throw ValidationError("category " + std::to_string(c)
                            + " has dummy accuracy 1 (division by zero); exclude it from AER");
    total += (model[c] - dummy[c]) / (1.0 - dummy[c]);
    ++included;
  }
  if (included == 0)
    throw ValidationError("every category is excluded from AER");
  return total / static_cast<double>(included);
}

std::vector<std::string> EvalReport::excluded_categories() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    if (excluded[c])
      out.push_back(categories[c]);
  }
  return out;
}

std::vector<EvalReport> evaluate(const RankingSet *model, const RankingSet &dummy,
                                 std::span<const std::size_t> ks) {
  if (model && (model->categories != dummy.categories || model->size() != dummy.size()))
    throw DimensionError("model and dummy rankings are not aligned");
  std::vector<EvalReport> reports;
  for (std::size_t k: ks) {
    EvalReport r;
    r.k = k;
    r.categories = dummy.categories;
    r.category_sizes = dummy.category_sizes;
    r.samples = dummy.size();
    r.dummy = categorical_accuracy(dummy, k);
    for (std::size_t size: r.category_sizes)
      r.excluded.push_back(size <= k);
    r.included = static_cast<std::size_t>(std::count(r.excluded.begin(), r.excluded.end(), false));
    if (model) {
      r.model = categorical_accuracy(*model, k);
      r.aer = aer(*r.model, r.dummy, r.excluded);
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string report_csv(std::span<const EvalReport> reports, const std::string &model_name) {
  const bool with_model = !reports.empty() && reports.front().model.has_value();
  std::ostringstream out;
  out << "# format_version=" << kReportFormatVersion << "\n";
  std::vector<std::string> header { "k", "category", "size", "excluded", "dummy" };
  if (with_model)
    header.push_back(model_name);
  write_csv_row(out, header);
  for (const EvalReport &r: reports) {
    for (std::size_t c = 0; c < r.categories.size(); ++c) {
      std::vector<std::string> row { std::to_string(r.k), r.categories[c],
                                     std::to_string(r.category_sizes[c]),
                                     r.excluded[c] ? "1" : "0", fixed(r.dummy[c]) };
      if (with_model)
        row.push_back(fixed((*r.model)[c]));
      write_csv_row(out, row);
    }
    std::vector<std::string> row { std::to_string(r.k), "AER", "", "", "" };
    if (with_model)
      row.push_back(r.aer ? fixed(*r.aer) : "");
    write_csv_row(out, row);
  }
  return out.str();
}

std::string report_json(std::span<const EvalReport> reports, const std::string &model_name) {
  nlohmann::ordered_json doc;
  doc["format"] = "rxncond-eval-report";
  doc["format_version"] = kReportFormatVersion;
  doc["model"] = model_name;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const EvalReport &r: reports) {
    nlohmann::ordered_json j;
    j["k"] = r.k;
    j["N"] = r.samples;
    j["C"] = r.included;
    j["excluded"] = r.excluded_categories();
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.categories.size(); ++c) {
      nlohmann::ordered_json e;
      e["name"] = r.categories[c];
      e["size"] = r.category_sizes[c];
      e["excluded"] = static_cast<bool>(r.excluded[c]);
      e["dummy"] = r.dummy[c];
      if (r.model)
        e["model"] = (*r.model)[c];
      cats.push_back(std::move(e));
    }
    j["categories"] = std::move(cats);
    j["aer"] = r.aer ? nlohmann::ordered_json(*r.aer) : nlohmann::ordered_json(nullptr);
    list.push_back(std::move(j));
  }
  doc["reports"] = std::move(list);
  return doc.dump(2) + "\n";
}

}  // namespace rxncond
