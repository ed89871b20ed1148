//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_EVAL_HPP_
#define RXNCOND_EVAL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rxncond/dictionary.hpp"
#include "rxncond/model.hpp"

namespace rxncond {

/// Per sample and category: the full predicted ranking and the ground-truth
/// set, both as positions within the category (null bin last).
struct RankingSet {
  std::vector<std::string> categories;
  std::vector<std::size_t> category_sizes;
  std::vector<std::vector<std::vector<std::size_t>>> rankings;  // [sample][category]
  std::vector<std::vector<std::vector<std::size_t>>> truths;    // [sample][category]

  std::size_t size() const { return rankings.size(); }
  /// Appends one sample; truths must be non-empty and rankings must be
  /// permutations of the category's positions.
  void add(std::vector<std::vector<std::size_t>> ranking,
           std::vector<std::vector<std::size_t>> truth);
};

/// Empty set laid out like `dict`.
RankingSet make_ranking_set(const ConditionDictionary &dict);
/// Ground truth of one target vector, as positions within each category.
std::vector<std::vector<std::size_t>> truth_positions(const TargetVector &targets,
                                                      const ConditionDictionary &dict);
/// Ranked prediction as positions within each category.
std::vector<std::vector<std::size_t>> ranking_positions(const RankedPrediction &prediction,
                                                        const ConditionDictionary &dict);

/// A_c = fraction of samples whose top-k contains any ground-truth label.
std::vector<double> categorical_accuracy(const RankingSet &set, std::size_t k);

/// Input-independent baseline: each category's labels ordered by training
/// frequency, ties by bin order.
struct DummyPredictor {
  std::vector<std::vector<std::size_t>> counts;   // [category][position]
  std::vector<std::vector<std::size_t>> ranking;  // [category] positions
  std::size_t training_size = 0;
};

DummyPredictor fit_dummy(std::span<const TargetVector> train, const ConditionDictionary &dict);
/// The dummy's (constant) rankings paired with the truths of `targets`.
RankingSet dummy_rankings(const DummyPredictor &dummy, std::span<const TargetVector> targets,
                          const ConditionDictionary &dict);

/// Mean over included categories of (A^g - A^d) / (1 - A^d).
double aer(std::span<const double> model, std::span<const double> dummy,
           const std::vector<bool> &excluded = { });

struct EvalReport {
  std::size_t k = 1;
  std::vector<std::string> categories;
  std::vector<std::size_t> category_sizes;
  std::vector<bool> excluded;           // size <= k: accuracy forced to 1
  std::vector<double> dummy;
  std::optional<std::vector<double>> model;
  std::optional<double> aer;            // needs a model
  std::size_t samples = 0;              // N
  std::size_t included = 0;             // C

  std::vector<std::string> excluded_categories() const;
};

/// One report per k. `model` may be null for a baseline-only report.
std::vector<EvalReport> evaluate(const RankingSet *model, const RankingSet &dummy,
                                 std::span<const std::size_t> ks);

inline constexpr int kReportFormatVersion = 1;

/// Rows k,category,size,excluded,dummy[,model]; an AER row closes each k.
std::string report_csv(std::span<const EvalReport> reports, const std::string &model_name);
std::string report_json(std::span<const EvalReport> reports, const std::string &model_name);

}  // namespace rxncond

#endif  // RXNCOND_EVAL_HPP_
