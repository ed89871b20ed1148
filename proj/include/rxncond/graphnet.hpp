//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_GRAPHNET_HPP_
#define RXNCOND_GRAPHNET_HPP_

#include <array>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rxncond/smiles.hpp"
#include "rxncond/tensor.hpp"

namespace rxncond {

enum class Architecture { kNfp, kGgnn, kRgcn, kRsgcn };

std::string_view architecture_name(Architecture arch);
/// Accepts "nfp", "ggnn", "rgcn", "rsgcn" (case-insensitive, '-' ignored).
Architecture parse_architecture(std::string_view name);

struct GpnConfig {
  Architecture architecture = Architecture::kRgcn;
  std::size_t hidden_dim = 128;
  std::size_t out_dim = 128;
  std::size_t n_layers = 4;
  std::size_t n_atom_types = kNumAtomTypes;
  std::size_t num_edge_type = kNumBondTypes;
  bool weight_tying = true;     // GGNN only
  std::size_t max_degree = 6;   // NFP only
  bool concat_hidden = false;

  void validate() const;
  /// Width of the molecular embedding: out_dim, or out_dim * n_layers when
  /// per-layer readouts are concatenated.
  std::size_t embedding_dim() const;

  friend bool operator==(const GpnConfig &, const GpnConfig &) = default;
};

/// Everything a GPN needs from one molecule, computed once per molecule.
struct GraphInputs {
  std::size_t num_atoms = 0;
  std::vector<std::size_t> atom_types;
  std::array<Tensor, kNumBondTypes> planes;         // raw adjacency per bond type
  std::array<Tensor, kNumBondTypes> scaled_planes;  // row-normalised per type
  std::array<bool, kNumBondTypes> plane_used { };
  Tensor collapsed;                                 // any-bond adjacency
  Tensor renormalized;                              // D^-1/2 (A+I) D^-1/2
  std::vector<std::size_t> degree;
};

GraphInputs prepare_graph(const MolGraph &graph);

/// Output of a GPN forward pass.
struct GpnOutput {
  Var embedding;    // [1 x embedding_dim]
  Var atom_states;  // final-layer per-atom states [n x hidden_dim]
};

/// Parameters prefixed with `prefix`, initialised uniformly in
/// +-1/sqrt(fan_in). Embedding tables use fan_in = 1 (one active input).
void init_gpn_parameters(const GpnConfig &cfg, Parameters &params,
                         std::mt19937_64 &rng, const std::string &prefix = "gpn.");

/// Dispatches on cfg.architecture.
GpnOutput embed(const GraphInputs &graph, const BoundParameters &params,
                const GpnConfig &cfg, const std::string &prefix = "gpn.");

GpnOutput embed_rsgcn(const GraphInputs &graph, const BoundParameters &params,
                      const GpnConfig &cfg, const std::string &prefix = "gpn.");
GpnOutput embed_rgcn(const GraphInputs &graph, const BoundParameters &params,
                     const GpnConfig &cfg, const std::string &prefix = "gpn.");
GpnOutput embed_ggnn(const GraphInputs &graph, const BoundParameters &params,
                     const GpnConfig &cfg, const std::string &prefix = "gpn.");
GpnOutput embed_nfp(const GraphInputs &graph, const BoundParameters &params,
                    const GpnConfig &cfg, const std::string &prefix = "gpn.");

}  // namespace rxncond

#endif  // RXNCOND_GRAPHNET_HPP_
