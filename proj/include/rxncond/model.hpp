//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_MODEL_HPP_
#define RXNCOND_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxncond/dictionary.hpp"
#include "rxncond/graphnet.hpp"
#include "rxncond/tensor.hpp"

namespace rxncond {

inline constexpr std::size_t kReactantSlots = 2;

/// Featurized reaction: one or two reactants in ingestion order, one product.
struct ReactionInput {
  std::vector<GraphInputs> reactants;
  GraphInputs product;
};

/// Parses and featurizes the structures of a record. Parse failures surface
/// as ParseError; more than two reactants is a ValidationError.
ReactionInput prepare_reaction(const RawRecord &record);
ReactionInput prepare_reaction(std::span<const std::string> reactants,
                               const std::string &product);

struct ModelConfig {
  GpnConfig gpn;
  std::size_t mlp_hidden = 128;
  std::size_t class_num = 0;

  void validate() const;
  std::size_t mlp_input() const { return 3 * gpn.embedding_dim(); }

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/// Shared GPN over the slots r1 | r2 | p, followed by a two-layer MLP head.
class ReactionModel {
 public:
  static constexpr std::string_view kGpnPrefix = "gpn.";

  ReactionModel(ModelConfig config, std::string dictionary_digest, std::uint64_t seed);
  /// Wraps existing parameters; names and shapes must match `config`.
  ReactionModel(ModelConfig config, std::string dictionary_digest, Parameters params);

  const ModelConfig &config() const { return config_; }
  const std::string &dictionary_digest() const { return digest_; }
  const Parameters &parameters() const { return params_; }
  Parameters &parameters() { return params_; }

  /// Throws ConfigError when `dict` is not the dictionary the model was built for.
  void check_dictionary(const ConditionDictionary &dict) const;

  /// Slot-concatenated reaction vectors, one row per reaction.
  Var reaction_vectors(const BoundParameters &bound,
                       std::span<const ReactionInput *const> batch) const;
  /// Pre-sigmoid outputs [batch x class_num].
  Var logits(const BoundParameters &bound,
             std::span<const ReactionInput *const> batch) const;

  /// Sigmoid probabilities [class_num].
  std::vector<double> forward(const ReactionInput &reaction) const;

 private:
  ModelConfig config_;
  std::string digest_;
  Parameters params_;
};

/// Sigmoid cross-entropy of a batch, mean over records and bins.
Var batch_loss(const ReactionModel &model, const BoundParameters &bound,
               std::span<const ReactionInput *const> batch,
               std::span<const TargetVector *const> targets);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
  // Held out first from the whole set, then from the remainder.
  double test_fraction = 0.1;
  double validation_fraction = 0.1;

  void validate() const;
  /// Overall train / validation / test shares; they sum to 1.
  std::array<double, 3> split_shares() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then test cut and validation cut. 1000 records give
/// 810 / 90 / 100.
SplitIndices split_dataset(std::size_t count, std::uint64_t seed,
                           double test_fraction = 0.1, double validation_fraction = 0.1);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;  // NaN without a validation set
};

struct Example {
  const ReactionInput *input = nullptr;
  const TargetVector *targets = nullptr;
};

struct TrainResult {
  std::vector<EpochStats> trace;
  Parameters best;                 // lowest validation loss seen
  std::size_t best_epoch = 0;      // 0: initial parameters
  double best_validation_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochStats &)>;

/// Mean sigmoid cross-entropy over `examples`, evaluated in chunks.
double evaluate_loss(const ReactionModel &model, std::span<const Example> examples,
                     std::size_t batch_size = 32);

/// Adam over shuffled mini-batches. The model ends holding the final
/// parameters; the best-validation snapshot is returned.
TrainResult train(ReactionModel &model, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainConfig &cfg,
                  const EpochCallback &on_epoch = { });

struct RankedLabel {
  std::string label;
  std::size_t bin = 0;  // global bin index
  double score = 0.0;

  friend bool operator==(const RankedLabel &, const RankedLabel &) = default;
};

struct CategoryRanking {
  std::string category;
  std::vector<RankedLabel> labels;  // descending score, ties by bin order
};

using RankedPrediction = std::vector<CategoryRanking>;

RankedPrediction rank_probabilities(std::span<const double> probabilities,
                                    const ConditionDictionary &dict);
RankedPrediction predict(const ReactionModel &model, const ReactionInput &reaction,
                         const ConditionDictionary &dict);

struct CheckpointMetadata {
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  std::optional<double> validation_loss;
  std::string label;  // "best", "final", ...
};

struct Checkpoint {
  ReactionModel model;
  CheckpointMetadata metadata;
};

inline constexpr int kCheckpointFormatVersion = 1;

std::string checkpoint_to_json(const ReactionModel &model, const CheckpointMetadata &meta);
Checkpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const std::string &path, const ReactionModel &model,
                     const CheckpointMetadata &meta);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace rxncond

#endif  // RXNCOND_MODEL_HPP_
