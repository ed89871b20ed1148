//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run every criterion
//   acceptance c05        run one

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "published.hpp"
#include "rxncond/dictionary.hpp"
#include "rxncond/error.hpp"
#include "rxncond/eval.hpp"
#include "rxncond/graphnet.hpp"
#include "rxncond/model.hpp"
#include "rxncond/smiles.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace rxncond;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string &why) {
    if (pass)
      detail = why;
    pass = false;
  }
};

struct Criterion {
  const char *id;
  const char *title;
  std::function<Verdict()> run;
};

constexpr Architecture kAll[] = { Architecture::kNfp, Architecture::kGgnn,
                                  Architecture::kRgcn, Architecture::kRsgcn };

std::string num(const char *pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string data_path(const char *name) {
  return std::string(RXNCOND_TEST_DATA) + "/" + name;
}

std::vector<std::vector<std::string>> read_tsv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("#"))
      continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --- c01 / c02 -------------------------------------------------------------

Verdict top1_aer() {
  Verdict v;
  std::size_t rows = 0;
  double worst = 0.0;
  for (const auto &b: testkit::load_published(data_path("published_accuracies.tsv"))) {
    if (b.table != "top1")
      continue;
    for (std::size_t m = 0; m < b.models.size(); ++m) {
      const double err = std::abs(aer(b.accuracy[m], b.dummy) - b.aer[m]);
      worst = std::max(worst, err);
      if (err > 5e-4)
        v.fail(b.reaction + " " + b.models[m] + " off by " + num("%.2e", err));
      ++rows;
    }
  }
  if (rows != 28)
    v.fail("expected 28 rows, found " + std::to_string(rows));
  if (v.pass)
    v.detail = std::to_string(rows) + " rows, max |diff| " + num("%.1e", worst);
  return v;
}

Verdict top3_aer_exclusion() {
  Verdict v;
  std::size_t rows = 0;
  for (const auto &b: testkit::load_published(data_path("published_accuracies.tsv"))) {
    if (b.table != "top3" || b.reaction != "PKR")
      continue;
    std::vector<bool> mask(b.categories.size(), false);
    for (std::size_t c = 0; c < mask.size(); ++c)
      mask[c] = b.categories[c] == "CO (g)";
    for (std::size_t m = 0; m < b.models.size(); ++m) {
      ++rows;
      const double err = std::abs(aer(b.accuracy[m], b.dummy, mask) - b.aer[m]);
      if (err > 5e-4)
        v.fail(b.models[m] + " excluded: off by " + num("%.2e", err));
      bool included_fails = false;
      try {
        included_fails = std::abs(aer(b.accuracy[m], b.dummy) - b.aer[m]) > 5e-4;
      } catch (const ValidationError &) {
        included_fails = true;
      }
      if (!included_fails)
        v.fail(b.models[m] + " reproduced with CO (g) included");
    }
  }
  if (rows != 7)
    v.fail("expected 7 PKR rows, found " + std::to_string(rows));
  if (v.pass)
    v.detail = "7 PKR rows match with CO (g) excluded, all fail with it included";
  return v;
}

// --- c03 -------------------------------------------------------------------

Verdict gradient_suite() {
  Verdict v;
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  std::size_t checks = 0;
  auto check = [&](const std::string &what, const testkit::ScalarFn &fn,
                   const std::vector<Tensor> &inputs) {
    const auto r = testkit::grad_check(fn, inputs, 1e-5);
    worst = std::max(worst, r.max_rel_error);
    checks += r.checked;
    if (!(r.max_rel_error < 1e-4))
      v.fail(what + " rel error " + num("%.2e", r.max_rel_error) + " at " + r.worst);
  };
  auto rnd = [&](Shape s) { return testkit::random_tensor(std::move(s), rng); };
  auto away = [&](Shape s) {
    Tensor t = rnd(std::move(s));
    for (double &x: t.values())
      x = x < 0 ? x - 0.1 : x + 0.1;
    return t;
  };
  using V = const std::vector<Var> &;
  check("matmul", [](Tape &, V x) { return testkit::weighted_sum(matmul(x[0], x[1])); },
        { rnd({ 3, 4 }), rnd({ 4, 2 }) });
  const std::vector<Tensor> pair { rnd({ 2, 3 }), rnd({ 2, 3 }) };
  check("add", [](Tape &, V x) { return testkit::weighted_sum(add(x[0], x[1])); }, pair);
  check("sub", [](Tape &, V x) { return testkit::weighted_sum(sub(x[0], x[1])); }, pair);
  check("mul", [](Tape &, V x) { return testkit::weighted_sum(mul(x[0], x[1])); }, pair);
  check("scale", [](Tape &, V x) { return testkit::weighted_sum(scale(x[0], -2.5)); },
        { rnd({ 3, 2 }) });
  check("one_minus", [](Tape &, V x) { return testkit::weighted_sum(one_minus(x[0])); },
        { rnd({ 3, 2 }) });
  check("add_bias", [](Tape &, V x) { return testkit::weighted_sum(add_bias(x[0], x[1])); },
        { rnd({ 4, 3 }), rnd({ 1, 3 }) });
  check("scale_rows",
        [](Tape &, V x) { return testkit::weighted_sum(scale_rows(x[0], { 0.5, -1.0, 2.0 })); },
        { rnd({ 3, 2 }) });
  const std::vector<Tensor> act { away({ 3, 4 }) };
  check("relu", [](Tape &, V x) { return testkit::weighted_sum(relu(x[0])); }, act);
  check("sigmoid", [](Tape &, V x) { return testkit::weighted_sum(sigmoid(x[0])); }, act);
  check("tanh", [](Tape &, V x) { return testkit::weighted_sum(tanh(x[0])); }, act);
  check("softmax_rows", [](Tape &, V x) { return testkit::weighted_sum(softmax_rows(x[0])); },
        act);
  check("sum_rows", [](Tape &, V x) { return testkit::weighted_sum(sum_rows(x[0])); },
        { rnd({ 4, 3 }) });
  check("sum", [](Tape &, V x) { return sum(mul(x[0], x[0])); }, { rnd({ 4, 3 }) });
  check("concat_cols",
        [](Tape &, V x) { return testkit::weighted_sum(concat_cols({ x[0], x[1], x[0] })); },
        { rnd({ 2, 3 }), rnd({ 2, 1 }) });
  check("concat_rows",
        [](Tape &, V x) { return testkit::weighted_sum(concat_rows({ x[1], x[0] })); },
        { rnd({ 2, 3 }), rnd({ 1, 3 }) });
  check("gather_rows",
        [](Tape &, V x) { return testkit::weighted_sum(gather_rows(x[0], { 2, 0, 2, 4 })); },
        { rnd({ 5, 3 }) });
  const Tensor targets = Tensor::matrix({ { 1, 0, 0 }, { 0, 1, 1 } });
  check("sigmoid_cross_entropy",
        [&](Tape &, V x) { return sigmoid_cross_entropy(x[0], targets); },
        { testkit::random_tensor({ 2, 3 }, rng, -3.0, 3.0) });
  std::vector<Tensor> gru { rnd({ 2, 3 }), rnd({ 2, 4 }) };
  for (int gate = 0; gate < 3; ++gate) {
    gru.push_back(rnd({ 3, 4 }));
    gru.push_back(rnd({ 4, 4 }));
    gru.push_back(rnd({ 1, 4 }));
  }
  check("gru_cell", [](Tape &, V x) {
    const GruParams p { x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9], x[10] };
    return testkit::weighted_sum(gru_cell(x[0], x[1], p));
  }, gru);

  const GraphInputs g = prepare_graph(parse_smiles("C#Cc(=O)c"));
  for (Architecture arch: kAll) {
    GpnConfig cfg;
    cfg.architecture = arch;
    cfg.hidden_dim = 4;
    cfg.out_dim = 3;
    cfg.n_layers = 2;
    Parameters params;
    std::mt19937_64 init(31);
    init_gpn_parameters(cfg, params, init);
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < params.size(); ++i)
      inputs.push_back(params.value(i));
    check(std::string(architecture_name(arch)), [&](Tape &, V x) {
      const BoundParameters bound(params, x);
      return testkit::weighted_sum(embed(g, bound, cfg).embedding);
    }, inputs);
  }
  if (v.pass)
    v.detail = "19 ops + 4 architectures, " + std::to_string(checks)
        + " entries, max rel error " + num("%.1e", worst);
  return v;
}

// --- c04 -------------------------------------------------------------------

Verdict permutation_invariance() {
  Verdict v;
  std::mt19937_64 rng(4242);
  std::vector<MolGraph> graphs;
  for (int i = 0; i < 100; ++i)
    graphs.push_back(parse_smiles(testkit::random_smiles(rng)));
  double worst = 0.0;
  for (Architecture arch: kAll) {
    GpnConfig cfg;
    cfg.architecture = arch;
    cfg.hidden_dim = 8;
    cfg.out_dim = 6;
    cfg.n_layers = 3;
    Parameters params;
    init_gpn_parameters(cfg, params, rng);
    Tape tape;
    const BoundParameters bound = params.bind(tape, false);
    for (const MolGraph &mol: graphs) {
      std::vector<std::size_t> perm(mol.num_atoms());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const Tensor a = embed(prepare_graph(mol), bound, cfg).embedding.value();
      const Tensor b = embed(prepare_graph(permute_atoms(mol, perm)), bound, cfg).embedding.value();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        worst = std::max(worst, d);
        if (d > 1e-10)
          v.fail(std::string(architecture_name(arch)) + " " + mol.source() + " moved by "
                 + num("%.2e", d));
      }
    }
  }
  if (v.pass)
    v.detail = "100 graphs x 4 architectures, max |diff| " + num("%.1e", worst);
  return v;
}

// --- c05 -------------------------------------------------------------------

struct RuleData {
  testkit::SyntheticCorpus corpus;
  ConditionDictionary dict;
  std::vector<ReactionInput> inputs;
  std::vector<TargetVector> targets;
  SplitIndices split;

  RuleData(std::size_t n, std::uint64_t seed)
      : corpus(testkit::structural_rule_corpus(n, seed)),
        dict(build_dictionary(corpus.records, corpus.roles, corpus.aliases)) {
    for (const RawRecord &r: corpus.records) {
      inputs.push_back(prepare_reaction(r));
      targets.push_back(encode_targets(r, dict));
    }
    split = split_dataset(n, seed);
  }

  std::vector<Example> pick(const std::vector<std::size_t> &idx) const {
    std::vector<Example> out;
    for (std::size_t i: idx)
      out.push_back({ &inputs[i], &targets[i] });
    return out;
  }

  RankingSet rankings(const ReactionModel &model, const std::vector<std::size_t> &idx) const {
    RankingSet set = make_ranking_set(dict);
    for (std::size_t i: idx)
      set.add(ranking_positions(predict(model, inputs[i], dict), dict),
              truth_positions(targets[i], dict));
    return set;
  }
};

Verdict structural_rule_overfit() {
  Verdict v;
  const RuleData data(600, 5);
  std::vector<TargetVector> train_targets;
  for (std::size_t i: data.split.train)
    train_targets.push_back(data.targets[i]);
  std::vector<TargetVector> test_targets;
  for (std::size_t i: data.split.test)
    test_targets.push_back(data.targets[i]);
  const DummyPredictor dummy = fit_dummy(train_targets, data.dict);
  const auto dummy_acc = categorical_accuracy(dummy_rankings(dummy, test_targets, data.dict), 1);

  std::string detail = std::to_string(data.corpus.records.size()) + " reactions;";
  for (std::size_t c = 0; c < dummy_acc.size(); ++c) {
    if (dummy_acc[c] > 0.6)
      v.fail("dummy reaches " + num("%.3f", dummy_acc[c]) + " on "
             + data.dict.categories()[c].name);
  }
  detail += " dummy max " + num("%.3f", *std::max_element(dummy_acc.begin(), dummy_acc.end()));

  for (Architecture arch: { Architecture::kRgcn, Architecture::kGgnn }) {
    ModelConfig cfg;
    cfg.gpn.architecture = arch;
    cfg.gpn.hidden_dim = 32;
    cfg.gpn.out_dim = 32;
    cfg.gpn.n_layers = arch == Architecture::kGgnn ? 3 : 2;
    cfg.mlp_hidden = 64;
    cfg.class_num = data.dict.total_bins();
    ReactionModel model(cfg, data.dict.digest(), 7);
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 32;
    tc.seed = 7;
    tc.adam.learning_rate = 5e-3;
    const auto train_set = data.pick(data.split.train);
    const auto val_set = data.pick(data.split.validation);
    const TrainResult r = train(model, train_set, val_set, tc);
    const ReactionModel best(cfg, data.dict.digest(), r.best);
    const auto acc = categorical_accuracy(data.rankings(best, data.split.test), 1);
    const double lo = *std::min_element(acc.begin(), acc.end());
    detail += "; " + std::string(architecture_name(arch)) + " min test top-1 "
        + num("%.3f", lo) + " (best epoch " + std::to_string(r.best_epoch) + "/30)";
    if (lo < 0.95)
      v.fail(std::string(architecture_name(arch)) + " min top-1 " + num("%.3f", lo));
  }
  if (v.pass)
    v.detail = detail;
  return v;
}

// --- c06 / c07 / c08 -------------------------------------------------------

Verdict dictionary_oracle() {
  Verdict v;
  std::mt19937_64 rng(606);
  std::size_t bins = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const testkit::LabelCorpus corpus = testkit::random_label_corpus(rng);
    const std::size_t pct = 80 + 5 * (rng() % 5);
    BuildOptions o;
    o.coverage = static_cast<double>(pct) / 100.0;
    const ConditionDictionary d = build_dictionary(corpus.records, corpus.roles, corpus.aliases, o);
    const auto oracle = testkit::brute_force_dictionary(
        corpus.records, corpus.role_table, corpus.roles.category_order(), corpus.aliases, pct);
    std::string why;
    if (!testkit::matches_oracle(d, oracle, &why))
      v.fail("corpus " + std::to_string(trial) + ": " + why);
    bins += d.total_bins();
  }
  if (v.pass)
    v.detail = "20 corpora, " + std::to_string(bins) + " bins identical";
  return v;
}

Verdict dummy_exactness() {
  Verdict v;
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 20; ++trial) {
    const ConditionDictionary dict = testkit::random_dictionary(rng);
    const std::size_t n = 1 + rng() % 300;
    const auto targets = testkit::random_targets(rng, dict, n);
    const DummyPredictor dummy = fit_dummy(targets, dict);
    const auto acc = categorical_accuracy(dummy_rankings(dummy, targets, dict), 1);
    for (std::size_t c = 0; c < dict.num_categories(); ++c) {
      std::size_t best = 0;
      for (std::size_t b = dict.category_offset(c); b <= dict.null_index(c); ++b) {
        std::size_t count = 0;
        for (const TargetVector &t: targets)
          count += t[b];
        best = std::max(best, count);
      }
      const double expected = static_cast<double>(best) / static_cast<double>(n);
      if (acc[c] != expected)
        v.fail("set " + std::to_string(trial) + " category " + std::to_string(c) + ": "
               + num("%.17g", acc[c]) + " vs " + num("%.17g", expected));
    }
  }
  if (v.pass)
    v.detail = "20 target sets, exact equality";
  return v;
}

Verdict monotonicity() {
  Verdict v;
  std::mt19937_64 rng(808);
  const RuleData data(200, 9);
  for (int trial = 0; trial < 50; ++trial) {
    RankingSet set;
    if (trial % 2 == 0) {
      ModelConfig cfg;
      cfg.gpn.architecture = kAll[rng() % 4];
      cfg.gpn.hidden_dim = 8;
      cfg.gpn.out_dim = 6;
      cfg.gpn.n_layers = 2;
      cfg.mlp_hidden = 12;
      cfg.class_num = data.dict.total_bins();
      const ReactionModel model(cfg, data.dict.digest(), rng());
      std::vector<std::size_t> idx(data.inputs.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(10 + rng() % 30);
      set = data.rankings(model, idx);
    } else {
      const ConditionDictionary dict = testkit::random_dictionary(rng);
      const auto targets = testkit::random_targets(rng, dict, 1 + rng() % 80);
      set = testkit::random_rankings(rng, dict, targets);
    }
    const auto top1 = categorical_accuracy(set, 1);
    const auto top3 = categorical_accuracy(set, 3);
    for (std::size_t c = 0; c < top1.size(); ++c)
      if (top3[c] < top1[c])
        v.fail("trial " + std::to_string(trial) + " category " + std::to_string(c));
  }
  if (v.pass)
    v.detail = "50 trials (25 model, 25 random rankings)";
  return v;
}

// --- c09 -------------------------------------------------------------------

Verdict training_determinism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / "rxncond-acceptance-c09";
  fs::remove_all(dir);
  fs::create_directories(dir);
  testkit::write_structural_rule_files(dir.string(), 600, 5);
  auto cli = [&](const std::string &args) {
    const std::string cmd = "cd '" + dir.string() + "' && env -u RXNCOND_OUT_DIR '"
        + RXNCOND_CLI + "' " + args + " > /dev/null 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  for (const char *out: { "a", "b" }) {
    const std::string o = std::string(" --out-dir ") + out;
    if (cli("curate --dataset dataset.csv --roles roles.tsv --aliases aliases.tsv" + o) != 0
        || cli("train --dataset dataset.csv --epochs 3 --hidden-dim 16 --out-dim 16"
               " --layers 2 --mlp-hidden 32 --seed 11" + o) != 0) {
      v.fail("cli failed: " + slurp(dir / "stderr.txt"));
      return v;
    }
  }
  std::size_t bytes = 0;
  for (const char *f: { "checkpoint_final.json", "checkpoint_best.json", "loss_trace.csv" }) {
    const std::string a = slurp(dir / "a" / f);
    const std::string b = slurp(dir / "b" / f);
    if (a.empty() || a != b)
      v.fail(std::string(f) + " differs between runs");
    bytes += a.size();
  }
  if (v.pass) {
    v.detail = "600 reactions, 3 files (" + std::to_string(bytes) + " bytes) identical";
    fs::remove_all(dir);
  }
  return v;
}

// --- c10 -------------------------------------------------------------------

Verdict parser_corpus() {
  Verdict v;
  const auto golden = read_tsv(data_path("smiles_golden.tsv"));
  if (golden.size() != 50)
    v.fail("golden file has " + std::to_string(golden.size()) + " rows");
  for (const auto &row: golden) {
    try {
      const MolGraph g = parse_smiles(row.at(0));
      std::string charges;
      for (const AtomNode &a: g.atoms())
        charges += (charges.empty() ? "" : ",") + std::to_string(a.formal_charge);
      const bool ok = g.num_atoms() == std::stoul(row.at(1))
          && g.bond_count(BondType::kSingle) == std::stoul(row.at(2))
          && g.bond_count(BondType::kDouble) == std::stoul(row.at(3))
          && g.bond_count(BondType::kTriple) == std::stoul(row.at(4))
          && g.bond_count(BondType::kAromatic) == std::stoul(row.at(5))
          && charges == row.at(6);
      if (!ok)
        v.fail("golden mismatch for " + row[0]);
    } catch (const ParseError &e) {
      v.fail("golden " + row[0] + " rejected: " + e.what());
    }
  }
  const auto malformed = read_tsv(data_path("smiles_malformed.tsv"));
  if (malformed.size() != 20)
    v.fail("malformed file has " + std::to_string(malformed.size()) + " rows");
  for (const auto &row: malformed) {
    try {
      parse_smiles(row.at(0));
      v.fail("accepted '" + row[0] + "'");
    } catch (const ParseError &e) {
      if (e.offset() != std::stoul(row.at(1)))
        v.fail("'" + row[0] + "' offset " + std::to_string(e.offset()) + ", expected " + row[1]);
    }
  }
  if (v.pass)
    v.detail = "50 golden molecules, 20 malformed offsets";
  return v;
}

const std::vector<Criterion> &criteria() {
  static const std::vector<Criterion> all {
    { "c01", "AER reproduces published top-1 rows", top1_aer },
    { "c02", "top-3 AER needs CO (g) excluded for PKR", top3_aer_exclusion },
    { "c03", "finite-difference gradient suite", gradient_suite },
    { "c04", "permutation invariance of embeddings", permutation_invariance },
    { "c05", "structural-rule corpus is learned", structural_rule_overfit },
    { "c06", "dictionary matches brute-force oracle", dictionary_oracle },
    { "c07", "dummy accuracy equals majority frequency", dummy_exactness },
    { "c08", "top-3 accuracy never below top-1", monotonicity },
    { "c09", "seeded training is byte-reproducible", training_determinism },
    { "c10", "SMILES golden and malformed corpus", parser_corpus },
  };
  return all;
}

}  // namespace

int main(int argc, char **argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  int failures = 0;
  bool matched = false;
  for (const Criterion &c: criteria()) {
    if (!only.empty() && only != c.id)
      continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception &e) {
      v.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
    std::printf("%s %s %s [%.1fs] %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
