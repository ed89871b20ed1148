//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_INTERPRET_HPP_
#define RXNCOND_INTERPRET_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxncond/model.hpp"
#include "rxncond/smiles.hpp"

namespace rxncond {

enum class MoleculeRole { kReactant, kProduct };

std::string_view role_name(MoleculeRole role);
MoleculeRole parse_role(std::string_view name);

struct MoleculeActivation {
  MoleculeRole role = MoleculeRole::kReactant;
  std::string smiles;
  std::vector<std::string> elements;
  std::vector<Bond> bonds;
  std::vector<double> norms;   // raw L2 norms of final atom states
  std::vector<double> scores;  // min-max over the whole reaction

  friend bool operator==(const MoleculeActivation &, const MoleculeActivation &) = default;
};

struct AtomActivationMap {
  std::vector<MoleculeActivation> molecules;

  friend bool operator==(const AtomActivationMap &, const AtomActivationMap &) = default;
};

inline constexpr int kActivationFormatVersion = 1;

/// Min-max over all values; all-equal input maps to zeros.
std::vector<double> min_max(std::span<const double> values);
/// Fills `scores` of every molecule from the pooled `norms`.
void normalize_scores(AtomActivationMap &map);

/// L2 norm of each atom's final-layer state.
std::vector<double> atom_norms(const ReactionModel &model, const GraphInputs &graph);

AtomActivationMap activations(const ReactionModel &model,
                              std::span<const std::string> reactants,
                              const std::string &product);

std::string activation_map_json(const AtomActivationMap &map);
AtomActivationMap activation_map_from_json(std::string_view text);
/// Sidecar for one molecule: atom index, element, score (and raw norm).
std::string molecule_json(const MoleculeActivation &molecule);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Schematic 2-D coordinates: rings as regular polygons, remaining atoms
/// placed breadth-first at unit bond length. Components are laid out side by
/// side. Deterministic.
std::vector<Point> layout_molecule(std::size_t num_atoms, std::span<const Bond> bonds);

/// Gray level of a score: 255 (white) at 0 down to 40 at 1.
int shade_level(double score);

/// SVG 1.1 drawing with one circle per atom shaded by score.
std::string render_svg(const MoleculeActivation &molecule);

}  // namespace rxncond

#endif  // RXNCOND_INTERPRET_HPP_
