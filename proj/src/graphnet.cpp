//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/graphnet.hpp"

#include <algorithm>
#include <cctype>

#include "rxncond/error.hpp"

namespace rxncond {
namespace {

std::string layer_prefix(const std::string &prefix, std::size_t layer) {
  return prefix + "layer" + std::to_string(layer) + ".";
}

// Readout weights are shared unless every layer is read out separately.
std::string readout_prefix(const std::string &prefix, const GpnConfig &cfg,
                           std::size_t layer) {
  if (cfg.concat_hidden)
    return prefix + "readout" + std::to_string(layer) + ".";
  return prefix + "readout.";
}

std::string rel_name(std::size_t r) {
  return "rel" + std::to_string(r);
}

std::string ggnn_prefix(const std::string &prefix, const GpnConfig &cfg,
                        std::size_t layer) {
  return cfg.weight_tying ? prefix : layer_prefix(prefix, layer);
}

Var initial_states(const GraphInputs &graph, const BoundParameters &params,
                   const std::string &prefix) {
  return gather_rows(params[prefix + "embed"], graph.atom_types);
}

void check_graph(const GraphInputs &graph, const GpnConfig &cfg) {
  cfg.validate();
  if (graph.num_atoms == 0)
    throw ValidationError("cannot embed a graph without atoms");
  for (std::size_t t: graph.atom_types) {
    if (t >= cfg.n_atom_types) {
      throw DimensionError("atom type " + std::to_string(t) + " outside vocabulary of "
                           + std::to_string(cfg.n_atom_types));
    }
  }
}

// Sum over atoms of states * W_out.
Var sum_readout(const Var &states, const BoundParameters &params,
                const std::string &name) {
  return sum_rows(matmul(states, params[name]));
}

Var combine_readouts(const std::vector<Var> &readouts, const GpnConfig &cfg) {
  if (cfg.concat_hidden)
    return concat_cols(readouts);
  return readouts.back();
}

void add_gru(Parameters &params, const std::string &p, std::size_t h,
             std::mt19937_64 &rng) {
  for (const char *gate: { "z", "r", "h" }) {
    params.add(p + "gru.w_" + gate, uniform_fan_in({ h, h }, h, rng));
    params.add(p + "gru.u_" + gate, uniform_fan_in({ h, h }, h, rng));
    params.add(p + "gru.b_" + gate, Tensor({ 1, h }));
  }
}

GruParams bind_gru(const BoundParameters &params, const std::string &p) {
  return GruParams {
    params[p + "gru.w_z"], params[p + "gru.u_z"], params[p + "gru.b_z"],
    params[p + "gru.w_r"], params[p + "gru.u_r"], params[p + "gru.b_r"],
    params[p + "gru.w_h"], params[p + "gru.u_h"], params[p + "gru.b_h"],
  };
}

}  // namespace

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
  case Architecture::kNfp:
    return "nfp";
  case Architecture::kGgnn:
    return "ggnn";
  case Architecture::kRgcn:
    return "rgcn";
  case Architecture::kRsgcn:
    return "rsgcn";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  std::string key;
  for (char c: name) {
    if (c != '-' && c != '_')
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "nfp")
    return Architecture::kNfp;
  if (key == "ggnn")
    return Architecture::kGgnn;
  if (key == "rgcn")
    return Architecture::kRgcn;
  if (key == "rsgcn")
    return Architecture::kRsgcn;
  throw ConfigError("unknown architecture '" + std::string(name)
                    + "' (expected nfp, ggnn, rgcn or rsgcn)");
}

void GpnConfig::validate() const {
  if (hidden_dim == 0 || out_dim == 0 || n_layers == 0 || n_atom_types == 0
      || num_edge_type == 0) {
    throw ConfigError("GPN extents must be positive");
  }
  if (max_degree < 1)
    throw ConfigError("max_degree must be at least 1");
  if (num_edge_type != kNumBondTypes) {
    throw ConfigError("num_edge_type must be " + std::to_string(kNumBondTypes));
  }
}

std::size_t GpnConfig::embedding_dim() const {
  return concat_hidden ? out_dim * n_layers : out_dim;
}

GraphInputs prepare_graph(const MolGraph &graph) {
  GraphInputs in;
  const std::size_t n = graph.num_atoms();
  in.num_atoms = n;
  const GraphFeatures f = featurize(graph);
  in.atom_types = f.atom_types;
  const Tensor scaled = normalized_adjacency(graph, AdjacencyMode::kPerTypeScaled);
  in.collapsed = Tensor({ n, n });
  for (std::size_t t = 0; t < kNumBondTypes; ++t) {
    in.planes[t] = Tensor({ n, n });
    in.scaled_planes[t] = Tensor({ n, n });
    const std::size_t base = t * n * n;
    for (std::size_t k = 0; k < n * n; ++k) {
      in.planes[t][k] = f.adjacency[base + k];
      in.scaled_planes[t][k] = scaled[base + k];
      if (f.adjacency[base + k] != 0.0) {
        in.plane_used[t] = true;
        in.collapsed[k] = 1.0;
      }
    }
  }
  in.renormalized = normalized_adjacency(graph, AdjacencyMode::kRenormalized);
  in.degree.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    in.degree[i] = graph.degree(i);
  return in;
}

void init_gpn_parameters(const GpnConfig &cfg, Parameters &params,
                         std::mt19937_64 &rng, const std::string &prefix) {
  cfg.validate();
  const std::size_t h = cfg.hidden_dim;
  const std::size_t o = cfg.out_dim;
  params.add(prefix + "embed", uniform_fan_in({ cfg.n_atom_types, h }, 1, rng));

  const std::size_t readouts = cfg.concat_hidden ? cfg.n_layers : 1;
  switch (cfg.architecture) {
  case Architecture::kRsgcn:
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
      params.add(layer_prefix(prefix, l) + "w", uniform_fan_in({ h, h }, h, rng));
    for (std::size_t l = cfg.n_layers - readouts; l < cfg.n_layers; ++l)
      params.add(readout_prefix(prefix, cfg, l) + "w", uniform_fan_in({ h, o }, h, rng));
    break;

  case Architecture::kRgcn:
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      const std::string p = layer_prefix(prefix, l);
      params.add(p + "self", uniform_fan_in({ h, h }, h, rng));
      for (std::size_t r = 0; r < cfg.num_edge_type; ++r)
        params.add(p + rel_name(r), uniform_fan_in({ h, h }, h, rng));
    }
    for (std::size_t l = cfg.n_layers - readouts; l < cfg.n_layers; ++l)
      params.add(readout_prefix(prefix, cfg, l) + "w", uniform_fan_in({ h, o }, h, rng));
    break;

  case Architecture::kGgnn: {
    const std::size_t blocks = cfg.weight_tying ? 1 : cfg.n_layers;
    for (std::size_t l = 0; l < blocks; ++l) {
      const std::string p = ggnn_prefix(prefix, cfg, l);
      for (std::size_t r = 0; r < cfg.num_edge_type; ++r)
        params.add(p + "msg." + rel_name(r), uniform_fan_in({ h, h }, h, rng));
      add_gru(params, p, h, rng);
    }
    for (std::size_t l = cfg.n_layers - readouts; l < cfg.n_layers; ++l) {
      const std::string p = readout_prefix(prefix, cfg, l);
      params.add(p + "gate", uniform_fan_in({ 2 * h, o }, 2 * h, rng));
      params.add(p + "proj", uniform_fan_in({ h, o }, h, rng));
    }
    break;
  }

  case Architecture::kNfp:
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      const std::string p = layer_prefix(prefix, l);
      for (std::size_t d = 1; d <= cfg.max_degree; ++d)
        params.add(p + "deg" + std::to_string(d), uniform_fan_in({ h, h }, h, rng));
      params.add(p + "out", uniform_fan_in({ h, o }, h, rng));
    }
    break;
  }
}

GpnOutput embed(const GraphInputs &graph, const BoundParameters &params,
                const GpnConfig &cfg, const std::string &prefix) {
  switch (cfg.architecture) {
  case Architecture::kNfp:
    return embed_nfp(graph, params, cfg, prefix);
  case Architecture::kGgnn:
    return embed_ggnn(graph, params, cfg, prefix);
  case Architecture::kRgcn:
    return embed_rgcn(graph, params, cfg, prefix);
  case Architecture::kRsgcn:
    return embed_rsgcn(graph, params, cfg, prefix);
  }
  throw ConfigError("unknown architecture");
}

GpnOutput embed_rsgcn(const GraphInputs &graph, const BoundParameters &params,
                      const GpnConfig &cfg, const std::string &prefix) {
  check_graph(graph, cfg);
  Tape &tape = *params.at(0).tape();
  const Var adj = tape.constant(graph.renormalized);
  Var h = initial_states(graph, params, prefix);
  std::vector<Var> readouts;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    h = relu(matmul(adj, matmul(h, params[layer_prefix(prefix, l) + "w"])));
    if (cfg.concat_hidden || l + 1 == cfg.n_layers)
      readouts.push_back(sum_readout(h, params, readout_prefix(prefix, cfg, l) + "w"));
  }
  return { combine_readouts(readouts, cfg), h };
}

GpnOutput embed_rgcn(const GraphInputs &graph, const BoundParameters &params,
                     const GpnConfig &cfg, const std::string &prefix) {
  check_graph(graph, cfg);
  Tape &tape = *params.at(0).tape();
  std::array<Var, kNumBondTypes> planes;
  for (std::size_t r = 0; r < kNumBondTypes; ++r) {
    if (graph.plane_used[r])
      planes[r] = tape.constant(graph.scaled_planes[r]);
  }
  Var h = initial_states(graph, params, prefix);
  std::vector<Var> readouts;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = layer_prefix(prefix, l);
    Var acc = matmul(h, params[p + "self"]);
    for (std::size_t r = 0; r < kNumBondTypes; ++r) {
      if (graph.plane_used[r])
        acc = add(acc, matmul(planes[r], matmul(h, params[p + rel_name(r)])));
    }
    h = relu(acc);
    if (cfg.concat_hidden || l + 1 == cfg.n_layers)
      readouts.push_back(sum_readout(h, params, readout_prefix(prefix, cfg, l) + "w"));
  }
  return { combine_readouts(readouts, cfg), h };
}

GpnOutput embed_ggnn(const GraphInputs &graph, const BoundParameters &params,
                     const GpnConfig &cfg, const std::string &prefix) {
  check_graph(graph, cfg);
  Tape &tape = *params.at(0).tape();
  std::array<Var, kNumBondTypes> planes;
  bool any_bond = false;
  for (std::size_t r = 0; r < kNumBondTypes; ++r) {
    if (graph.plane_used[r]) {
      planes[r] = tape.constant(graph.planes[r]);
      any_bond = true;
    }
  }
  const Var h0 = initial_states(graph, params, prefix);
  Var h = h0;
  std::vector<Var> readouts;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = ggnn_prefix(prefix, cfg, l);
    Var message;
    if (any_bond) {
      for (std::size_t r = 0; r < kNumBondTypes; ++r) {
        if (!graph.plane_used[r])
          continue;
        const Var m = matmul(planes[r], matmul(h, params[p + "msg." + rel_name(r)]));
        message = message.valid() ? add(message, m) : m;
      }
    } else {
      message = tape.constant(Tensor({ graph.num_atoms, cfg.hidden_dim }));
    }
    h = gru_cell(message, h, bind_gru(params, p));

    if (cfg.concat_hidden || l + 1 == cfg.n_layers) {
      const std::string rp = readout_prefix(prefix, cfg, l);
      const Var gate = sigmoid(matmul(concat_cols({ h, h0 }), params[rp + "gate"]));
      const Var proj = matmul(h, params[rp + "proj"]);
      readouts.push_back(sum_rows(mul(gate, proj)));
    }
  }
  return { combine_readouts(readouts, cfg), h };
}

GpnOutput embed_nfp(const GraphInputs &graph, const BoundParameters &params,
                    const GpnConfig &cfg, const std::string &prefix) {
  check_graph(graph, cfg);
  Tape &tape = *params.at(0).tape();
  const std::size_t n = graph.num_atoms;

  // Degree buckets: isolated atoms share the degree-1 weights, high degrees
  // are clamped to max_degree.
  std::vector<std::vector<double>> masks(cfg.max_degree + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = std::clamp<std::size_t>(graph.degree[i], 1, cfg.max_degree);
    if (masks[d].empty())
      masks[d].assign(n, 0.0);
    masks[d][i] = 1.0;
  }

  bool any_bond = false;
  for (bool used: graph.plane_used)
    any_bond = any_bond || used;
  Var adj;
  if (any_bond)
    adj = tape.constant(graph.collapsed);

  Var h = initial_states(graph, params, prefix);
  Var fingerprint;
  std::vector<Var> per_layer;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = layer_prefix(prefix, l);
    const Var v = any_bond ? add(h, matmul(adj, h)) : h;
    Var next;
    for (std::size_t d = 1; d <= cfg.max_degree; ++d) {
      if (masks[d].empty())
        continue;
      const Var part =
          scale_rows(sigmoid(matmul(v, params[p + "deg" + std::to_string(d)])), masks[d]);
      next = next.valid() ? add(next, part) : part;
    }
    h = next;
    const Var contribution = sum_rows(softmax_rows(matmul(h, params[p + "out"])));
    per_layer.push_back(contribution);
    fingerprint = fingerprint.valid() ? add(fingerprint, contribution) : contribution;
  }
  if (cfg.concat_hidden)
    return { concat_cols(per_layer), h };
  return { fingerprint, h };
}

}  // namespace rxncond
