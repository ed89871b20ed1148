//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rxncond/csv.hpp"
#include "rxncond/dictionary.hpp"
#include "rxncond/error.hpp"
#include "rxncond/eval.hpp"
#include "rxncond/interpret.hpp"
#include "rxncond/model.hpp"

namespace fs = std::filesystem;
using namespace rxncond;

namespace {

struct RunConfig {
  std::string dataset;
  std::string dictionary;
  std::string roles;
  std::string aliases;
  std::string checkpoint;
  std::string train_split;
  std::string test_split;
  std::string out_dir = "rxncond-out";
  std::string arch = "rgcn";
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t hidden_dim = 128;
  std::size_t out_dim = 128;
  std::size_t n_layers = 4;
  std::size_t mlp_hidden = 128;
  bool concat_hidden = false;
  double coverage = 0.95;
  std::string temperature_category;
  std::vector<std::string> filters;
  std::vector<std::size_t> ks { 1, 3 };
  std::vector<std::string> reactants;
  std::string product;
  std::string format = "text";
  std::size_t top = 3;
};

std::string fmt(const char *pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
  if (!out)
    throw IoError("failed writing " + path.string());
}

std::vector<RawRecord> load_records(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path);
  try {
    return read_records_csv(in);
  } catch (const ValidationError &e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_records(const fs::path &path, std::span<const RawRecord> records) {
  std::ostringstream out;
  write_records_csv(out, records);
  write_text(path, out.str());
}

ConditionDictionary load_dictionary(const RunConfig &cfg, const fs::path &out) {
  const std::string path = cfg.dictionary.empty() ? (out / "dictionary.json").string()
                                                  : cfg.dictionary;
  return ConditionDictionary::from_json(read_text(path));
}

fs::path prepare_out(const RunConfig &cfg) {
  fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec)
    throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void require(const std::string &value, const char *flag, const char *command) {
  if (value.empty())
    throw UsageError(std::string(command) + " needs " + flag);
}

// Records with their featurized inputs; a structure error names the record.
std::vector<ReactionInput> featurize_all(std::span<const RawRecord> records,
                                         const std::string &source) {
  std::vector<ReactionInput> inputs;
  inputs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      inputs.push_back(prepare_reaction(records[i]));
    } catch (const ParseError &e) {
      throw ParseError(e.offset(), source + " record " + std::to_string(i + 1) + ": "
                                       + e.reason());
    }
  }
  return inputs;
}

ModelConfig model_config(const RunConfig &cfg, const ConditionDictionary &dict) {
  ModelConfig m;
  m.gpn.architecture = parse_architecture(cfg.arch);
  m.gpn.hidden_dim = cfg.hidden_dim;
  m.gpn.out_dim = cfg.out_dim;
  m.gpn.n_layers = cfg.n_layers;
  m.gpn.concat_hidden = cfg.concat_hidden;
  m.mlp_hidden = cfg.mlp_hidden;
  m.class_num = dict.total_bins();
  m.validate();
  return m;
}

void write_run_manifest(const fs::path &out, const std::string &command, const RunConfig &cfg) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["arch"] = cfg.arch;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["hidden_dim"] = cfg.hidden_dim;
  j["out_dim"] = cfg.out_dim;
  j["n_layers"] = cfg.n_layers;
  j["mlp_hidden"] = cfg.mlp_hidden;
  j["k"] = cfg.ks;
  write_text(out / ("run_" + command + ".json"), j.dump(2) + "\n");
}

int cmd_curate(const RunConfig &cfg) {
  require(cfg.dataset, "--dataset", "curate");
  require(cfg.roles, "--roles", "curate");
  const fs::path out = prepare_out(cfg);

  std::vector<RawRecord> records = load_records(cfg.dataset);
  std::ifstream roles_in(cfg.roles);
  if (!roles_in)
    throw IoError("cannot read " + cfg.roles);
  const RoleMap roles = read_role_map(roles_in);
  AliasMap aliases;
  if (!cfg.aliases.empty()) {
    std::ifstream aliases_in(cfg.aliases);
    if (!aliases_in)
      throw IoError("cannot read " + cfg.aliases);
    aliases = read_alias_map(aliases_in);
  }

  if (!cfg.filters.empty()) {
    std::vector<FilterRule> rules;
    for (const std::string &f: cfg.filters)
      rules.push_back(FilterRule::parse(f));
    FilterContext ctx { &roles, &aliases };
    FilterResult filtered = filter_records(records, rules, ctx);
    for (const auto &[rule, count]: filtered.removed)
      std::cout << "filter " << rule << " removed " << count << "\n";
    records = std::move(filtered.kept);
    save_records(out / "curated.csv", records);
  }

  BuildOptions options;
  options.coverage = cfg.coverage;
  if (!cfg.temperature_category.empty())
    options.temperature_category = cfg.temperature_category;
  BuildReport report;
  const ConditionDictionary dict = build_dictionary(records, roles, aliases, options, &report);
  write_text(out / "dictionary.json", dict.to_json());

  std::ostringstream bins;
  bins << "category,bins,coverage\n";
  for (std::size_t c = 0; c < dict.num_categories(); ++c) {
    const CategoryReport &r = report.categories[c];
    bins << csv_field(r.name) << "," << dict.categories()[c].size() << ","
         << fmt("%.4f", r.coverage()) << "\n";
  }
  write_text(out / "curation_report.csv", bins.str());
  std::cout << bins.str();

  std::ostringstream dropped;
  dropped << "stage,category,label,frequency\n";
  for (const LabelCount &l: report.dropped)
    dropped << "global,," << csv_field(l.label) << "," << l.frequency << "\n";
  for (const LabelCount &l: report.unmapped)
    dropped << "unmapped,," << csv_field(l.label) << "," << l.frequency << "\n";
  for (const CategoryReport &r: report.categories) {
    for (const LabelCount &l: r.dropped)
      dropped << "category," << csv_field(r.name) << "," << csv_field(l.label) << ","
              << l.frequency << "\n";
  }
  write_text(out / "dropped_labels.csv", dropped.str());

  std::ostringstream imbalance;
  imbalance << "category,label,frequency,share\n";
  const double n = static_cast<double>(records.size());
  for (const Category &c: dict.categories()) {
    for (const Bin &b: c.bins)
      imbalance << csv_field(c.name) << "," << csv_field(b.label) << "," << b.frequency << ","
                << fmt("%.4f", b.frequency / n) << "\n";
    imbalance << csv_field(c.name) << "," << ConditionDictionary::kNullLabel << ","
              << c.null_frequency << "," << fmt("%.4f", c.null_frequency / n) << "\n";
  }
  write_text(out / "label_frequencies.csv", imbalance.str());
  write_run_manifest(out, "curate", cfg);
  return 0;
}

int cmd_split(const RunConfig &cfg) {
  require(cfg.dataset, "--dataset", "split");
  const fs::path out = prepare_out(cfg);
  const std::vector<RawRecord> records = load_records(cfg.dataset);
  const SplitIndices split = split_dataset(records.size(), cfg.seed);
  auto pick = [&](const std::vector<std::size_t> &idx) {
    std::vector<RawRecord> subset;
    for (std::size_t i: idx)
      subset.push_back(records[i]);
    return subset;
  };
  save_records(out / "train.csv", pick(split.train));
  save_records(out / "validation.csv", pick(split.validation));
  save_records(out / "test.csv", pick(split.test));
  write_run_manifest(out, "split", cfg);
  std::cout << "train " << split.train.size() << "\nvalidation " << split.validation.size()
            << "\ntest " << split.test.size() << "\n";
  return 0;
}

int cmd_train(const RunConfig &cfg) {
  require(cfg.dataset, "--dataset", "train");
  const fs::path out = prepare_out(cfg);
  const ConditionDictionary dict = load_dictionary(cfg, out);
  const std::vector<RawRecord> records = load_records(cfg.dataset);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.adam.learning_rate = cfg.learning_rate;
  tc.validate();
  const SplitIndices split = split_dataset(records.size(), cfg.seed, tc.test_fraction,
                                           tc.validation_fraction);

  const std::vector<ReactionInput> inputs = featurize_all(records, cfg.dataset);
  std::vector<TargetVector> targets;
  for (const RawRecord &r: records)
    targets.push_back(encode_targets(r, dict));

  auto pick = [&](const std::vector<std::size_t> &idx) {
    std::vector<Example> set;
    for (std::size_t i: idx)
      set.push_back({ &inputs[i], &targets[i] });
    return set;
  };
  auto pick_records = [&](const std::vector<std::size_t> &idx) {
    std::vector<RawRecord> subset;
    for (std::size_t i: idx)
      subset.push_back(records[i]);
    return subset;
  };
  save_records(out / "train.csv", pick_records(split.train));
  save_records(out / "validation.csv", pick_records(split.validation));
  save_records(out / "test.csv", pick_records(split.test));

  ReactionModel model(model_config(cfg, dict), dict.digest(), cfg.seed);
  const std::vector<Example> train_set = pick(split.train);
  const std::vector<Example> val_set = pick(split.validation);
  const TrainResult result = train(model, train_set, val_set, tc, [](const EpochStats &s) {
    std::cout << "epoch " << s.epoch << " train_loss " << fmt("%.6f", s.train_loss)
              << " validation_loss " << fmt("%.6f", s.validation_loss) << "\n";
  });

  std::ostringstream trace;
  trace << "epoch,train_loss,validation_loss\n";
  for (const EpochStats &s: result.trace)
    trace << s.epoch << "," << fmt("%.17g", s.train_loss) << ","
          << fmt("%.17g", s.validation_loss) << "\n";
  write_text(out / "loss_trace.csv", trace.str());

  CheckpointMetadata final_meta;
  final_meta.epoch = cfg.epochs;
  final_meta.seed = cfg.seed;
  final_meta.validation_loss = result.trace.empty() ? result.best_validation_loss
                                                    : result.trace.back().validation_loss;
  final_meta.label = "final";
  save_checkpoint((out / "checkpoint_final.json").string(), model, final_meta);

  const ReactionModel best(model.config(), model.dictionary_digest(), result.best);
  CheckpointMetadata best_meta;
  best_meta.epoch = result.best_epoch;
  best_meta.seed = cfg.seed;
  best_meta.validation_loss = result.best_validation_loss;
  best_meta.label = "best";
  save_checkpoint((out / "checkpoint_best.json").string(), best, best_meta);
  write_run_manifest(out, "train", cfg);
  std::cout << "best epoch " << result.best_epoch << "\n";
  return 0;
}

int cmd_eval(const RunConfig &cfg) {
  const fs::path out = prepare_out(cfg);
  const ConditionDictionary dict = load_dictionary(cfg, out);
  const std::string train_path = cfg.train_split.empty() ? (out / "train.csv").string()
                                                         : cfg.train_split;
  const std::string test_path = cfg.test_split.empty() ? (out / "test.csv").string()
                                                       : cfg.test_split;
  const std::vector<RawRecord> train_records = load_records(train_path);
  const std::vector<RawRecord> test_records = load_records(test_path);

  std::vector<TargetVector> train_targets, test_targets;
  for (const RawRecord &r: train_records)
    train_targets.push_back(encode_targets(r, dict));
  for (const RawRecord &r: test_records)
    test_targets.push_back(encode_targets(r, dict));

  const DummyPredictor dummy = fit_dummy(train_targets, dict);
  const RankingSet dummy_set = dummy_rankings(dummy, test_targets, dict);

  std::optional<RankingSet> model_set;
  std::string model_name = "model";
  if (!cfg.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    ckpt.model.check_dictionary(dict);
    model_name = std::string(architecture_name(ckpt.model.config().gpn.architecture));
    const std::vector<ReactionInput> inputs = featurize_all(test_records, test_path);
    model_set = make_ranking_set(dict);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const RankedPrediction pred = predict(ckpt.model, inputs[i], dict);
      model_set->add(ranking_positions(pred, dict), truth_positions(test_targets[i], dict));
    }
  }

  const std::vector<EvalReport> reports =
      evaluate(model_set ? &*model_set : nullptr, dummy_set, cfg.ks);
  const std::string csv = report_csv(reports, model_name);
  write_text(out / "report.csv", csv);
  write_text(out / "report.json", report_json(reports, model_name));
  write_run_manifest(out, "eval", cfg);
  std::cout << csv;
  return 0;
}

Checkpoint checked_checkpoint(const RunConfig &cfg, const ConditionDictionary &dict,
                              const char *command) {
  require(cfg.checkpoint, "--checkpoint", command);
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  ckpt.model.check_dictionary(dict);
  return ckpt;
}

int cmd_predict(const RunConfig &cfg) {
  if (cfg.reactants.empty())
    throw UsageError("predict needs --reactant");
  require(cfg.product, "--product", "predict");
  if (cfg.format != "text" && cfg.format != "json")
    throw UsageError("--format must be text or json");
  const fs::path out(cfg.out_dir);
  const ConditionDictionary dict = load_dictionary(cfg, out);
  const Checkpoint ckpt = checked_checkpoint(cfg, dict, "predict");
  const ReactionInput input = prepare_reaction(cfg.reactants, cfg.product);
  const RankedPrediction pred = predict(ckpt.model, input, dict);

  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["format"] = "rxncond-prediction";
    j["format_version"] = 1;
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (const CategoryRanking &c: pred) {
      nlohmann::ordered_json labels = nlohmann::ordered_json::array();
      const std::size_t n = cfg.top == 0 ? c.labels.size() : std::min(cfg.top, c.labels.size());
      for (std::size_t i = 0; i < n; ++i)
        labels.push_back({ { "label", c.labels[i].label }, { "score", c.labels[i].score } });
      cats.push_back({ { "category", c.category }, { "labels", labels } });
    }
    j["categories"] = std::move(cats);
    std::cout << j.dump(2) << "\n";
  } else {
    for (const CategoryRanking &c: pred) {
      std::cout << c.category;
      const std::size_t n = cfg.top == 0 ? c.labels.size() : std::min(cfg.top, c.labels.size());
      for (std::size_t i = 0; i < n; ++i)
        std::cout << "\t" << c.labels[i].label << " " << fmt("%.6f", c.labels[i].score);
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_explain(const RunConfig &cfg) {
  if (cfg.reactants.empty())
    throw UsageError("explain needs --reactant");
  require(cfg.product, "--product", "explain");
  const fs::path out = prepare_out(cfg);
  const ConditionDictionary dict = load_dictionary(cfg, out);
  const Checkpoint ckpt = checked_checkpoint(cfg, dict, "explain");

  const AtomActivationMap map = activations(ckpt.model, cfg.reactants, cfg.product);
  const fs::path dir = out / "explain";
  fs::create_directories(dir);
  std::size_t reactant = 0;
  for (const MoleculeActivation &m: map.molecules) {
    const std::string stem = m.role == MoleculeRole::kProduct
        ? std::string("product")
        : "reactant" + std::to_string(++reactant);
    write_text(dir / (stem + ".svg"), render_svg(m));
    write_text(dir / (stem + ".json"), molecule_json(m));
    std::cout << "wrote " << (dir / (stem + ".svg")).string() << "\n";
  }
  write_text(dir / "activations.json", activation_map_json(map));

  const RankedPrediction pred =
      predict(ckpt.model, prepare_reaction(cfg.reactants, cfg.product), dict);
  for (const CategoryRanking &c: pred)
    std::cout << c.category << "\t" << c.labels.front().label << " "
              << fmt("%.6f", c.labels.front().score) << "\n";
  return 0;
}

void report_error(const std::string &kind, const std::string &message) {
  std::cerr << "rxncond: error[" << kind << "]: " << message << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app { "Reaction condition recommendation with graph neural networks", "rxncond" };
  app.set_config("--config", "", "TOML configuration file; flags override its values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  if (const char *env = std::getenv("RXNCOND_OUT_DIR"); env != nullptr && *env != '\0')
    cfg.out_dir = env;

  app.add_option("--seed", cfg.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out-dir", cfg.out_dir, "Output directory (env RXNCOND_OUT_DIR)")
      ->capture_default_str();
  app.add_option("--arch", cfg.arch, "Graph network: nfp, ggnn, rgcn, rsgcn")
      ->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
  app.add_option("--k", cfg.ks, "Top-k values to report")->delimiter(',')->capture_default_str();
  app.add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  app.add_option("--hidden-dim", cfg.hidden_dim, "Graph network hidden width")
      ->capture_default_str();
  app.add_option("--out-dim", cfg.out_dim, "Molecular embedding width")->capture_default_str();
  app.add_option("--layers", cfg.n_layers, "Graph network layers")->capture_default_str();
  app.add_option("--mlp-hidden", cfg.mlp_hidden, "Hidden width of the MLP head")
      ->capture_default_str();
  app.add_flag("--concat-hidden", cfg.concat_hidden, "Concatenate per-layer readouts");
  app.add_option("--dataset", cfg.dataset, "Reaction CSV");
  app.add_option("--dictionary", cfg.dictionary, "Dictionary JSON (default <out-dir>/dictionary.json)");
  app.add_option("--checkpoint", cfg.checkpoint, "Checkpoint JSON");

  CLI::App *curate = app.add_subcommand("curate", "Build the condition dictionary");
  curate->add_option("--roles", cfg.roles, "Role map (label<TAB>categories)");
  curate->add_option("--aliases", cfg.aliases, "Alias map (variant<TAB>canonical)");
  curate->add_option("--coverage", cfg.coverage, "Cumulative coverage kept")
      ->capture_default_str();
  curate->add_option("--temperature-category", cfg.temperature_category,
                     "Category receiving record temperatures");
  curate->add_option("--filter", cfg.filters,
                     "Record filter, e.g. require-yield or max-reactants=2");

  CLI::App *split = app.add_subcommand("split", "Split a dataset into train/validation/test");
  CLI::App *train_cmd = app.add_subcommand("train", "Train a model");
  CLI::App *eval = app.add_subcommand("eval", "Evaluate a checkpoint against the dummy baseline");
  eval->add_option("--train-split", cfg.train_split, "Training CSV for the dummy baseline");
  eval->add_option("--test-split", cfg.test_split, "Test CSV");

  CLI::App *predict_cmd = app.add_subcommand("predict", "Rank conditions for one reaction");
  CLI::App *explain = app.add_subcommand("explain", "Atom activation maps for one reaction");
  for (CLI::App *sub: { predict_cmd, explain }) {
    sub->add_option("--reactant", cfg.reactants, "Reactant SMILES (one or two)");
    sub->add_option("--product", cfg.product, "Product SMILES");
  }
  predict_cmd->add_option("--format", cfg.format, "text or json")->capture_default_str();
  predict_cmd->add_option("--top", cfg.top, "Labels per category (0 = all)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*curate)
      return cmd_curate(cfg);
    if (*split)
      return cmd_split(cfg);
    if (*train_cmd)
      return cmd_train(cfg);
    if (*eval)
      return cmd_eval(cfg);
    if (*predict_cmd)
      return cmd_predict(cfg);
    if (*explain)
      return cmd_explain(cfg);
  } catch (const UsageError &e) {
    report_error(e.kind(), e.what());
    return 2;
  } catch (const Error &e) {
    report_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception &e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
