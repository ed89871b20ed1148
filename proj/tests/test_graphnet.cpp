//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "rxncond/error.hpp"
#include "rxncond/graphnet.hpp"
#include "rxncond/smiles.hpp"
#include "synthetic.hpp"

using namespace rxncond;

namespace {

constexpr Architecture kAll[] = { Architecture::kNfp, Architecture::kGgnn,
                                  Architecture::kRgcn, Architecture::kRsgcn };

GpnConfig small_config(Architecture arch, std::size_t layers = 2) {
  GpnConfig cfg;
  cfg.architecture = arch;
  cfg.hidden_dim = 4;
  cfg.out_dim = 3;
  cfg.n_layers = layers;
  return cfg;
}

Parameters make_params(const GpnConfig &cfg, std::uint64_t seed) {
  Parameters p;
  std::mt19937_64 rng(seed);
  init_gpn_parameters(cfg, p, rng);
  return p;
}

GpnOutput run(const GraphInputs &g, const Parameters &p, const GpnConfig &cfg, Tape &tape) {
  const BoundParameters bound = p.bind(tape, false);
  return embed(g, bound, cfg);
}

Tensor embedding(const GraphInputs &g, const Parameters &p, const GpnConfig &cfg) {
  Tape tape;
  return run(g, p, cfg, tape).embedding.value();
}

Tensor atom_states(const GraphInputs &g, const Parameters &p, const GpnConfig &cfg) {
  Tape tape;
  return run(g, p, cfg, tape).atom_states.value();
}

GraphInputs graph(const std::string &smiles) {
  return prepare_graph(parse_smiles(smiles));
}

double max_abs_diff(const Tensor &a, const Tensor &b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Plain-loop matrix helpers for the hand oracles.
Tensor mm(const Tensor &a, const Tensor &b) {
  Tensor out({ a.rows(), b.cols() });
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k)
        out(i, j) += a(i, k) * b(k, j);
  return out;
}

Tensor embed_row(const Parameters &p, std::size_t atom_type) {
  const Tensor &e = p.get("gpn.embed");
  Tensor row({ 1, e.cols() });
  for (std::size_t j = 0; j < e.cols(); ++j)
    row(0, j) = e(atom_type, j);
  return row;
}

double sig(double x) {
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

TEST(GpnConfig, ValidationAndNames) {
  GpnConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.hidden_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = GpnConfig { };
  cfg.max_degree = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = GpnConfig { };
  cfg.num_edge_type = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);

  for (Architecture a: kAll)
    EXPECT_EQ(parse_architecture(architecture_name(a)), a);
  EXPECT_EQ(parse_architecture("RS-GCN"), Architecture::kRsgcn);
  EXPECT_EQ(parse_architecture("R_GCN"), Architecture::kRgcn);
  EXPECT_THROW(parse_architecture("mpnn"), ConfigError);
}

TEST(GpnGradient, AllArchitecturesEveryParameter) {
  const GraphInputs g = graph("C#Cc(=O)c");
  for (Architecture arch: kAll) {
    for (bool concat: { false, true }) {
      GpnConfig cfg = small_config(arch);
      cfg.concat_hidden = concat;
      const Parameters params = make_params(cfg, 31);
      std::vector<Tensor> inputs;
      for (std::size_t i = 0; i < params.size(); ++i)
        inputs.push_back(params.value(i));
      const testkit::ScalarFn fn = [&](Tape &, const std::vector<Var> &vars) {
        const BoundParameters bound(params, vars);
        return testkit::weighted_sum(embed(g, bound, cfg).embedding);
      };
      const auto r = testkit::grad_check(fn, inputs);
      EXPECT_LT(r.max_rel_error, 1e-4)
          << architecture_name(arch) << " concat=" << concat << " worst "
          << params.name(std::stoul(r.worst.substr(6)));
      EXPECT_GT(r.checked, params.element_count() - 1);
    }
  }
}

TEST(GpnGradient, UntiedGgnn) {
  const GraphInputs g = graph("C#Cc(=O)c");
  GpnConfig cfg = small_config(Architecture::kGgnn, 3);
  cfg.weight_tying = false;
  const Parameters params = make_params(cfg, 5);
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < params.size(); ++i)
    inputs.push_back(params.value(i));
  const testkit::ScalarFn fn = [&](Tape &, const std::vector<Var> &vars) {
    const BoundParameters bound(params, vars);
    return testkit::weighted_sum(embed(g, bound, cfg).embedding);
  };
  EXPECT_LT(testkit::grad_check(fn, inputs).max_rel_error, 1e-4);
}

TEST(GpnProperties, PermutationInvariance) {
  std::mt19937_64 rng(77);
  for (Architecture arch: kAll) {
    GpnConfig cfg = small_config(arch, 3);
    cfg.hidden_dim = 8;
    cfg.out_dim = 5;
    const Parameters params = make_params(cfg, 3);
    for (int trial = 0; trial < 30; ++trial) {
      const MolGraph mol = parse_smiles(testkit::random_smiles(rng));
      std::vector<std::size_t> perm(mol.num_atoms());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const Tensor a = embedding(prepare_graph(mol), params, cfg);
      const Tensor b = embedding(prepare_graph(permute_atoms(mol, perm)), params, cfg);
      EXPECT_LE(max_abs_diff(a, b), 1e-10) << architecture_name(arch) << " " << mol.source();
    }
  }
}

TEST(GpnProperties, WidthIsOutDim) {
  for (Architecture arch: kAll) {
    for (const char *smiles: { "C", "[Na+].[Cl-]", "c1ccccc1", "CC.O.N" }) {
      for (std::size_t layers: { 1u, 2u, 4u }) {
        GpnConfig cfg = small_config(arch, layers);
        const Parameters params = make_params(cfg, 1);
        const Tensor e = embedding(graph(smiles), params, cfg);
        EXPECT_EQ(e.shape(), (Shape { 1, cfg.out_dim })) << architecture_name(arch);
        for (double v: e.values())
          EXPECT_TRUE(std::isfinite(v));
        cfg.concat_hidden = true;
        const Tensor c = embedding(graph(smiles), make_params(cfg, 1), cfg);
        EXPECT_EQ(c.shape(), (Shape { 1, cfg.out_dim * layers }));
        EXPECT_EQ(cfg.embedding_dim(), cfg.out_dim * layers);
      }
    }
  }
}

TEST(GpnErrors, BadInputs) {
  const GpnConfig cfg = small_config(Architecture::kRgcn);
  const Parameters params = make_params(cfg, 1);
  GraphInputs empty;
  Tape tape;
  const BoundParameters bound = params.bind(tape, false);
  EXPECT_THROW(embed(empty, bound, cfg), ValidationError);
  GraphInputs g = graph("CC");
  g.atom_types[0] = 500;
  EXPECT_THROW(embed(g, bound, cfg), DimensionError);
  GpnConfig other = cfg;
  other.architecture = Architecture::kGgnn;
  EXPECT_THROW(embed(graph("CC"), bound, other), UsageError);
}

TEST(Nfp, SingleAtomFingerprintSumsToLayers) {
  for (std::size_t layers: { 1u, 2u, 5u }) {
    const GpnConfig cfg = small_config(Architecture::kNfp, layers);
    const Tensor e = embedding(graph("[Pd]"), make_params(cfg, 9), cfg);
    double total = 0;
    for (double v: e.values())
      total += v;
    EXPECT_NEAR(total, static_cast<double>(layers), 1e-12);
  }
  // The same holds per atom for any molecule.
  const GpnConfig cfg = small_config(Architecture::kNfp, 3);
  const Tensor e = embedding(graph("CC(=O)Oc1ccccc1"), make_params(cfg, 9), cfg);
  double total = 0;
  for (double v: e.values())
    total += v;
  EXPECT_NEAR(total, 3.0 * 10, 1e-10);
}

TEST(Nfp, DegreeBucketAblation) {
  // Centre carbon has degree 4, the fluorines degree 1.
  const GraphInputs g = graph("C(F)(F)(F)F");
  GpnConfig cfg = small_config(Architecture::kNfp, 1);
  const Parameters base = make_params(cfg, 12);
  const Tensor reference = atom_states(g, base, cfg);

  Parameters bumped4 = base;
  for (double &x: bumped4.get("gpn.layer0.deg4").values())
    x += 0.3;
  const Tensor s4 = atom_states(g, bumped4, cfg);
  EXPECT_GT(max_abs_diff(reference, s4), 1e-3);
  for (std::size_t leaf = 1; leaf < 5; ++leaf)
    for (std::size_t j = 0; j < cfg.hidden_dim; ++j)
      EXPECT_EQ(s4(leaf, j), reference(leaf, j));

  Parameters bumped1 = base;
  for (double &x: bumped1.get("gpn.layer0.deg1").values())
    x += 0.3;
  const Tensor s1 = atom_states(g, bumped1, cfg);
  for (std::size_t j = 0; j < cfg.hidden_dim; ++j)
    EXPECT_EQ(s1(0, j), reference(0, j));

  Parameters zeroed = base;
  for (double &x: zeroed.get("gpn.layer0.deg4").values())
    x = 0.0;
  const Tensor frozen = atom_states(g, zeroed, cfg);
  for (std::size_t j = 0; j < cfg.hidden_dim; ++j)
    EXPECT_EQ(frozen(0, j), 0.5);
  // Frozen centre ignores everything upstream, including the embeddings.
  for (double &x: zeroed.get("gpn.embed").values())
    x *= -2.0;
  const Tensor frozen2 = atom_states(g, zeroed, cfg);
  for (std::size_t j = 0; j < cfg.hidden_dim; ++j)
    EXPECT_EQ(frozen2(0, j), 0.5);
}

TEST(Nfp, IsolatedAtomsUseDegreeOneWeights) {
  const GpnConfig cfg = small_config(Architecture::kNfp, 1);
  const Parameters base = make_params(cfg, 4);
  Parameters bumped = base;
  for (double &x: bumped.get("gpn.layer0.deg1").values())
    x += 0.5;
  const GraphInputs g = graph("[Na+].[Cl-]");
  EXPECT_GT(max_abs_diff(atom_states(g, base, cfg), atom_states(g, bumped, cfg)), 1e-3);
}

TEST(Rgcn, NoBondsIsPerAtomMlp) {
  const GpnConfig cfg = small_config(Architecture::kRgcn, 2);
  const Parameters p = make_params(cfg, 21);
  const GraphInputs g = graph("[Na+].[Cl-]");
  Tensor expected({ 1, cfg.out_dim });
  for (std::size_t type: { 11u, 17u }) {
    Tensor h = embed_row(p, type);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      h = mm(h, p.get("gpn.layer" + std::to_string(l) + ".self"));
      for (double &x: h.values())
        x = std::max(x, 0.0);
    }
    const Tensor out = mm(h, p.get("gpn.readout.w"));
    for (std::size_t j = 0; j < cfg.out_dim; ++j)
      expected(0, j) += out(0, j);
  }
  EXPECT_LE(max_abs_diff(embedding(g, p, cfg), expected), 1e-14);
}

TEST(Rgcn, PlaneSelectivity) {
  const GpnConfig cfg = small_config(Architecture::kRgcn, 1);
  const Parameters base = make_params(cfg, 8);
  const GraphInputs g = graph("C=O");
  const Tensor reference = embedding(g, base, cfg);
  for (std::size_t r = 0; r < kNumBondTypes; ++r) {
    Parameters zeroed = base;
    for (double &x: zeroed.get("gpn.layer0.rel" + std::to_string(r)).values())
      x = 0.0;
    const double change = max_abs_diff(embedding(g, zeroed, cfg), reference);
    if (r == static_cast<std::size_t>(BondType::kDouble))
      EXPECT_GT(change, 1e-6);
    else
      EXPECT_EQ(change, 0.0) << "relation " << r;
  }
}

TEST(Rsgcn, SingleAtomIdentityWeights) {
  GpnConfig cfg = small_config(Architecture::kRsgcn, 3);
  cfg.out_dim = cfg.hidden_dim;
  Parameters p = make_params(cfg, 2);
  for (std::size_t l = 0; l < 3; ++l) {
    Tensor &w = p.get("gpn.layer" + std::to_string(l) + ".w");
    w = Tensor({ 4, 4 });
    for (std::size_t i = 0; i < 4; ++i)
      w(i, i) = 1.0;
  }
  p.get("gpn.readout.w") = p.get("gpn.layer0.w");
  Tensor expected = embed_row(p, 6);
  for (double &x: expected.values())
    x = std::max(x, 0.0);
  EXPECT_LE(max_abs_diff(embedding(graph("C"), p, cfg), expected), 1e-15);
}

TEST(Rsgcn, TwoAtomPathHandComputation) {
  // d = 2, one layer. Both atoms have degree 2 with self loops, so
  // Â = [[1/2, 1/2], [1/2, 1/2]].
  GpnConfig cfg = small_config(Architecture::kRsgcn, 1);
  cfg.hidden_dim = 2;
  cfg.out_dim = 1;
  Parameters p = make_params(cfg, 2);
  Tensor &e = p.get("gpn.embed");
  e(6, 0) = 1.0;
  e(6, 1) = -2.0;
  e(8, 0) = 0.5;
  e(8, 1) = 3.0;
  p.get("gpn.layer0.w") = Tensor::matrix({ { 1.0, -1.0 }, { 0.5, 2.0 } });
  p.get("gpn.readout.w") = Tensor::matrix({ { 2.0 }, { -1.0 } });
  // H0 W: C -> (1 - 1, -1 - 4) = (0, -5); O -> (0.5 + 1.5, -0.5 + 6) = (2, 5.5)
  // Â H0 W: both rows (1, 0.25); ReLU keeps them.
  // Readout: 2 * (1*2 - 0.25*1) = 3.5
  const Tensor out = embedding(graph("CO"), p, cfg);
  EXPECT_NEAR(out[0], 3.5, 1e-15);
}

TEST(Ggnn, WeightTyingParameterCount) {
  GpnConfig cfg = small_config(Architecture::kGgnn, 2);
  const std::size_t two = make_params(cfg, 1).element_count();
  cfg.n_layers = 6;
  EXPECT_EQ(make_params(cfg, 1).element_count(), two);
  cfg.weight_tying = false;
  EXPECT_GT(make_params(cfg, 1).element_count(), two);
}

TEST(Ggnn, IsolatedAtomIsGruOnZeroInput) {
  const GpnConfig cfg = small_config(Architecture::kGgnn, 3);
  const Parameters p = make_params(cfg, 44);
  const std::size_t h = cfg.hidden_dim;
  const Tensor h0 = embed_row(p, 46);
  Tensor state = h0;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const Tensor hz = mm(state, p.get("gpn.gru.u_z"));
    const Tensor hr = mm(state, p.get("gpn.gru.u_r"));
    Tensor z({ 1, h }), rh({ 1, h });
    for (std::size_t j = 0; j < h; ++j) {
      z(0, j) = sig(hz(0, j) + p.get("gpn.gru.b_z")(0, j));
      rh(0, j) = sig(hr(0, j) + p.get("gpn.gru.b_r")(0, j)) * state(0, j);
    }
    const Tensor hc = mm(rh, p.get("gpn.gru.u_h"));
    for (std::size_t j = 0; j < h; ++j) {
      const double cand = std::tanh(hc(0, j) + p.get("gpn.gru.b_h")(0, j));
      state(0, j) = (1 - z(0, j)) * state(0, j) + z(0, j) * cand;
    }
  }
  Tensor cat({ 1, 2 * h });
  for (std::size_t j = 0; j < h; ++j) {
    cat(0, j) = state(0, j);
    cat(0, h + j) = h0(0, j);
  }
  const Tensor gate = mm(cat, p.get("gpn.readout.gate"));
  const Tensor proj = mm(state, p.get("gpn.readout.proj"));
  const Tensor out = embedding(graph("[Pd]"), p, cfg);
  for (std::size_t j = 0; j < cfg.out_dim; ++j)
    EXPECT_NEAR(out[j], sig(gate(0, j)) * proj(0, j), 1e-15);
}

TEST(Gpn, DepthDoesNotChangeWidth) {
  for (Architecture arch: kAll) {
    GpnConfig cfg = small_config(arch, 2);
    const std::size_t w2 = cfg.embedding_dim();
    cfg.n_layers = 4;
    EXPECT_EQ(cfg.embedding_dim(), w2);
    const Tensor e = embedding(graph("CCO"), make_params(cfg, 1), cfg);
    EXPECT_EQ(e.cols(), w2);
  }
}
