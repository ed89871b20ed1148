//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rxncond/error.hpp"

namespace rxncond {
namespace {

using nlohmann::ordered_json;

const std::string kGpn { ReactionModel::kGpnPrefix };

double stable_sigmoid(double z) {
  if (z >= 0.0)
    return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Parameters initial_parameters(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Parameters params;
  init_gpn_parameters(cfg.gpn, params, rng, kGpn);
  const std::size_t in = cfg.mlp_input();
  params.add("mlp.dense0.w", uniform_fan_in({ in, cfg.mlp_hidden }, in, rng));
  params.add("mlp.dense0.b", Tensor({ 1, cfg.mlp_hidden }));
  params.add("mlp.dense1.w",
             uniform_fan_in({ cfg.mlp_hidden, cfg.class_num }, cfg.mlp_hidden, rng));
  params.add("mlp.dense1.b", Tensor({ 1, cfg.class_num }));
  return params;
}

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq {
    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
  };
  return std::mt19937_64(seq);
}

Tensor stack_targets(std::span<const TargetVector *const> targets, std::size_t width) {
  Tensor out({ targets.size(), width });
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TargetVector &t = *targets[i];
    if (t.size() != width) {
      throw DimensionError("target vector has " + std::to_string(t.size())
                           + " bins, model expects " + std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j)
      out(i, j) = t[j];
  }
  return out;
}

Var loss_of(const ReactionModel &model, const BoundParameters &bound,
            std::span<const Example> examples) {
  std::vector<const ReactionInput *> inputs;
  std::vector<const TargetVector *> targets;
  for (const Example &e: examples) {
    inputs.push_back(e.input);
    targets.push_back(e.targets);
  }
  return batch_loss(model, bound, inputs, targets);
}

ordered_json config_json(const ModelConfig &cfg) {
  ordered_json j;
  j["architecture"] = std::string(architecture_name(cfg.gpn.architecture));
  j["hidden_dim"] = cfg.gpn.hidden_dim;
  j["out_dim"] = cfg.gpn.out_dim;
  j["n_layers"] = cfg.gpn.n_layers;
  j["n_atom_types"] = cfg.gpn.n_atom_types;
  j["num_edge_type"] = cfg.gpn.num_edge_type;
  j["weight_tying"] = cfg.gpn.weight_tying;
  j["max_degree"] = cfg.gpn.max_degree;
  j["concat_hidden"] = cfg.gpn.concat_hidden;
  j["mlp_hidden"] = cfg.mlp_hidden;
  j["class_num"] = cfg.class_num;
  return j;
}

ModelConfig config_from_json(const ordered_json &j) {
  ModelConfig cfg;
  cfg.gpn.architecture = parse_architecture(j.at("architecture").get<std::string>());
  cfg.gpn.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  cfg.gpn.out_dim = j.at("out_dim").get<std::size_t>();
  cfg.gpn.n_layers = j.at("n_layers").get<std::size_t>();
  cfg.gpn.n_atom_types = j.at("n_atom_types").get<std::size_t>();
  cfg.gpn.num_edge_type = j.at("num_edge_type").get<std::size_t>();
  cfg.gpn.weight_tying = j.at("weight_tying").get<bool>();
  cfg.gpn.max_degree = j.at("max_degree").get<std::size_t>();
  cfg.gpn.concat_hidden = j.at("concat_hidden").get<bool>();
  cfg.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  cfg.class_num = j.at("class_num").get<std::size_t>();
  return cfg;
}

}  // namespace

ReactionInput prepare_reaction(std::span<const std::string> reactants,
                               const std::string &product) {
  if (reactants.empty() || reactants.size() > kReactantSlots) {
    throw ValidationError("a reaction needs 1 or 2 reactants, got "
                          + std::to_string(reactants.size()));
  }
  ReactionInput input;
  for (const std::string &smiles: reactants)
    input.reactants.push_back(prepare_graph(parse_smiles(smiles)));
  input.product = prepare_graph(parse_smiles(product));
  return input;
}

ReactionInput prepare_reaction(const RawRecord &record) {
  return prepare_reaction(record.reactants, record.product);
}

void ModelConfig::validate() const {
  gpn.validate();
  if (mlp_hidden == 0)
    throw ConfigError("mlp_hidden must be positive");
  if (class_num == 0)
    throw ConfigError("class_num must be positive");
}

ReactionModel::ReactionModel(ModelConfig config, std::string dictionary_digest,
                             std::uint64_t seed)
    : config_(config), digest_(std::move(dictionary_digest)),
      params_(initial_parameters(config, seed)) { }

ReactionModel::ReactionModel(ModelConfig config, std::string dictionary_digest,
                             Parameters params)
    : config_(config), digest_(std::move(dictionary_digest)), params_(std::move(params)) {
  const Parameters expected = initial_parameters(config_, 0);
  if (expected.size() != params_.size())
    throw ConfigError("parameter count " + std::to_string(params_.size())
                      + " does not match configuration (" + std::to_string(expected.size())
                      + ")");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected.name(i) != params_.name(i))
      throw ConfigError("unexpected parameter '" + params_.name(i) + "', expected '"
                        + expected.name(i) + "'");
    if (expected.value(i).shape() != params_.value(i).shape())
      throw ConfigError("parameter '" + params_.name(i) + "' has shape "
                        + shape_string(params_.value(i).shape()) + ", expected "
                        + shape_string(expected.value(i).shape()));
  }
}

void ReactionModel::check_dictionary(const ConditionDictionary &dict) const {
  if (dict.total_bins() != config_.class_num)
    throw ConfigError("dictionary has " + std::to_string(dict.total_bins())
                      + " bins but the model outputs " + std::to_string(config_.class_num));
  const std::string digest = dict.digest();
  if (digest != digest_)
    throw ConfigError("dictionary digest " + digest + " does not match checkpoint digest "
                      + digest_);
}

Var ReactionModel::reaction_vectors(const BoundParameters &bound,
                                    std::span<const ReactionInput *const> batch) const {
  if (batch.empty())
    throw ValidationError("empty batch");
  Tape &tape = *bound.at(0).tape();
  const std::size_t width = config_.gpn.embedding_dim();
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const ReactionInput *reaction: batch) {
    if (reaction->reactants.empty() || reaction->reactants.size() > kReactantSlots)
      throw ValidationError("a reaction needs 1 or 2 reactants, got "
                            + std::to_string(reaction->reactants.size()));
    std::vector<Var> slots;
    for (const GraphInputs &g: reaction->reactants)
      slots.push_back(embed(g, bound, config_.gpn, kGpn).embedding);
    if (slots.size() < kReactantSlots)
      slots.push_back(tape.constant(Tensor({ 1, width })));
    slots.push_back(embed(reaction->product, bound, config_.gpn, kGpn).embedding);
    rows.push_back(concat_cols(slots));
  }
  return rows.size() == 1 ? rows.front() : concat_rows(rows);
}

Var ReactionModel::logits(const BoundParameters &bound,
                          std::span<const ReactionInput *const> batch) const {
  const Var x = reaction_vectors(bound, batch);
  const Var h = relu(add_bias(matmul(x, bound["mlp.dense0.w"]), bound["mlp.dense0.b"]));
  return add_bias(matmul(h, bound["mlp.dense1.w"]), bound["mlp.dense1.b"]);
}

std::vector<double> ReactionModel::forward(const ReactionInput &reaction) const {
  Tape tape;
  const BoundParameters bound = params_.bind(tape, false);
  const ReactionInput *batch[] = { &reaction };
  const Tensor z = logits(bound, batch).value();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = stable_sigmoid(z[i]);
  return out;
}

Var batch_loss(const ReactionModel &model, const BoundParameters &bound,
               std::span<const ReactionInput *const> batch,
               std::span<const TargetVector *const> targets) {
  if (batch.size() != targets.size())
    throw DimensionError("batch of " + std::to_string(batch.size()) + " reactions with "
                         + std::to_string(targets.size()) + " target vectors");
  const Tensor t = stack_targets(targets, model.config().class_num);
  return sigmoid_cross_entropy(model.logits(bound, batch), t);
}

void TrainConfig::validate() const {
  if (batch_size == 0)
    throw ConfigError("batch size must be positive");
  if (!(adam.learning_rate > 0.0) || !std::isfinite(adam.learning_rate))
    throw ConfigError("learning rate must be positive");
  for (double f: { test_fraction, validation_fraction }) {
    if (!(f > 0.0 && f < 1.0))
      throw ConfigError("split fractions must lie in (0, 1)");
  }
}

std::array<double, 3> TrainConfig::split_shares() const {
  const double rest = 1.0 - test_fraction;
  return { rest * (1.0 - validation_fraction), rest * validation_fraction, test_fraction };
}

SplitIndices split_dataset(std::size_t count, std::uint64_t seed, double test_fraction,
                           double validation_fraction) {
  if (count < 10)
    throw ValidationError("need at least 10 records to split, got " + std::to_string(count));
  if (!(test_fraction > 0.0 && test_fraction < 1.0)
      || !(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("split fractions must lie in (0, 1)");

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(count * test_fraction));
  const std::size_t n_rest = count - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(n_rest * validation_fraction));
  const std::size_t n_train = n_rest - n_val;

  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_rest);
  split.test.assign(order.begin() + n_rest, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double evaluate_loss(const ReactionModel &model, std::span<const Example> examples,
                     std::size_t batch_size) {
  if (examples.empty())
    return std::numeric_limits<double>::quiet_NaN();
  batch_size = std::max<std::size_t>(batch_size, 1);
  double total = 0.0;
  for (std::size_t begin = 0; begin < examples.size(); begin += batch_size) {
    const std::size_t n = std::min(batch_size, examples.size() - begin);
    Tape tape;
    const BoundParameters bound = model.parameters().bind(tape, false);
    total += loss_of(model, bound, examples.subspan(begin, n)).value().item()
        * static_cast<double>(n);
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(ReactionModel &model, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainConfig &cfg,
                  const EpochCallback &on_epoch) {
  cfg.validate();
  if (train_set.empty())
    throw ValidationError("training set is empty");
  const std::size_t width = model.config().class_num;
  for (std::span<const Example> set: { train_set, validation_set }) {
    for (const Example &e: set) {
      if (e.targets->size() != width)
        throw DimensionError("target vector has " + std::to_string(e.targets->size())
                             + " bins, model expects " + std::to_string(width));
    }
  }

  Parameters &params = model.parameters();
  AdamState adam(params, cfg.adam);
  TrainResult result;
  result.best = params;
  result.best_epoch = 0;
  result.best_validation_loss = evaluate_loss(model, validation_set, cfg.batch_size);

  std::vector<std::size_t> order(train_set.size());
  std::vector<Example> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng = epoch_rng(cfg.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      batch.clear();
      for (std::size_t i = begin; i < begin + n; ++i)
        batch.push_back(train_set[order[i]]);

      Tape tape;
      const BoundParameters bound = params.bind(tape);
      const Var loss = loss_of(model, bound, batch);
      const double value = loss.value().item();
      if (!std::isfinite(value))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch "
                            + std::to_string(batch_index + 1));
      tape.backward(loss);
      const std::vector<Tensor> grads = bound.gradients();
      adam_step(params, grads, adam);
      total += value * static_cast<double>(n);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = total / static_cast<double>(train_set.size());
    stats.validation_loss = evaluate_loss(model, validation_set, cfg.batch_size);
    result.trace.push_back(stats);

    const bool improved = validation_set.empty()
        || stats.validation_loss < result.best_validation_loss;
    if (improved) {
      result.best = params;
      result.best_epoch = epoch;
      result.best_validation_loss = stats.validation_loss;
    }
    if (on_epoch)
      on_epoch(stats);
  }
  return result;
}

RankedPrediction rank_probabilities(std::span<const double> probabilities,
                                    const ConditionDictionary &dict) {
  if (probabilities.size() != dict.total_bins())
    throw DimensionError("probability vector has " + std::to_string(probabilities.size())
                         + " entries, dictionary has " + std::to_string(dict.total_bins())
                         + " bins");
  RankedPrediction out;
  for (std::size_t c = 0; c < dict.num_categories(); ++c) {
    CategoryRanking ranking;
    ranking.category = dict.categories()[c].name;
    for (std::size_t bin = dict.category_offset(c); bin <= dict.null_index(c); ++bin)
      ranking.labels.push_back({ std::string(dict.label(bin)), bin, probabilities[bin] });
    std::stable_sort(ranking.labels.begin(), ranking.labels.end(),
                     [](const RankedLabel &a, const RankedLabel &b) {
                       return a.score > b.score;
                     });
    out.push_back(std::move(ranking));
  }
  return out;
}

RankedPrediction predict(const ReactionModel &model, const ReactionInput &reaction,
                         const ConditionDictionary &dict) {
  model.check_dictionary(dict);
  return rank_probabilities(model.forward(reaction), dict);
}

std::string checkpoint_to_json(const ReactionModel &model, const CheckpointMetadata &meta) {
  ordered_json doc;
  doc["format"] = "rxncond-checkpoint";
  doc["format_version"] = kCheckpointFormatVersion;
  doc["config"] = config_json(model.config());
  doc["dictionary_digest"] = model.dictionary_digest();
  ordered_json m;
  m["epoch"] = meta.epoch;
  m["seed"] = meta.seed;
  if (meta.validation_loss && std::isfinite(*meta.validation_loss))
    m["validation_loss"] = *meta.validation_loss;
  else
    m["validation_loss"] = nullptr;
  m["label"] = meta.label;
  doc["metadata"] = m;

  ordered_json params = ordered_json::array();
  const Parameters &p = model.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ordered_json entry;
    entry["name"] = p.name(i);
    entry["shape"] = p.value(i).shape();
    entry["values"] = std::vector<double>(p.value(i).values().begin(),
                                          p.value(i).values().end());
    params.push_back(std::move(entry));
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const ordered_json doc = ordered_json::parse(text);
    if (doc.at("format").get<std::string>() != "rxncond-checkpoint")
      throw ConfigError("not a checkpoint document");
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw ConfigError("unsupported checkpoint format_version " + std::to_string(version));
    const ModelConfig cfg = config_from_json(doc.at("config"));
    cfg.validate();

    Parameters params;
    for (const ordered_json &entry: doc.at("parameters")) {
      params.add(entry.at("name").get<std::string>(),
                 Tensor(entry.at("shape").get<Shape>(),
                        entry.at("values").get<std::vector<double>>()));
    }

    const ordered_json &m = doc.at("metadata");
    CheckpointMetadata meta;
    meta.epoch = m.at("epoch").get<std::size_t>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    if (!m.at("validation_loss").is_null())
      meta.validation_loss = m.at("validation_loss").get<double>();
    meta.label = m.at("label").get<std::string>();

    return Checkpoint {
      ReactionModel(cfg, doc.at("dictionary_digest").get<std::string>(), std::move(params)),
      meta,
    };
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError &e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string &path, const ReactionModel &model,
                     const CheckpointMetadata &meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << checkpoint_to_json(model, meta);
  if (!out)
    throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace rxncond
