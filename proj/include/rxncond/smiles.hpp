//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_SMILES_HPP_
#define RXNCOND_SMILES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxncond/tensor.hpp"

namespace rxncond {

enum class BondType : std::uint8_t {
  kSingle = 0,
  kDouble = 1,
  kTriple = 2,
  kAromatic = 3,
};

inline constexpr std::size_t kNumBondTypes = 4;
inline constexpr std::size_t kNumAtomTypes = 117;

std::string_view bond_type_name(BondType type);

/// Atomic number for an element symbol (case-sensitive), -1 when unknown.
/// "*" maps to 0.
int atomic_number(std::string_view symbol);
/// Symbol for an atomic number in [0, 118]; "*" for 0.
std::string_view element_symbol(int atomic_number);

struct AtomNode {
  std::string symbol;
  int atomic_number = 0;
  int formal_charge = 0;
  bool aromatic = false;
  int isotope = 0;
  // Explicit bracket H count, -1 when the atom was written without brackets.
  int hydrogen_count = -1;
  std::size_t feature_index = 0;
};

struct Bond {
  std::size_t begin = 0;  // begin < end
  std::size_t end = 0;
  BondType type = BondType::kSingle;

  friend bool operator==(const Bond &, const Bond &) = default;
};

/// Heavy-atom molecular graph with four bond types. Disconnected components
/// ("." in SMILES) live in one graph.
class MolGraph {
 public:
  std::size_t add_atom(AtomNode atom);
  /// Throws ValidationError on self-loops, duplicate pairs or bad indices.
  void add_bond(std::size_t a, std::size_t b, BondType type);

  const std::vector<AtomNode> &atoms() const { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }
  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }

  bool has_bond(std::size_t a, std::size_t b) const;
  /// Neighbours over all bond types, in bond insertion order.
  const std::vector<std::size_t> &neighbors(std::size_t atom) const {
    return neighbors_[atom];
  }
  /// Neighbours connected by bonds of one type.
  std::vector<std::size_t> neighbors(std::size_t atom, BondType type) const;
  std::size_t degree(std::size_t atom) const { return neighbors_[atom].size(); }
  std::size_t bond_count(BondType type) const;
  std::size_t num_components() const;

  // Bookkeeping filled in by the parser.
  std::size_t ring_closures() const { return ring_closures_; }
  const std::string &source() const { return source_; }

 private:
  friend MolGraph parse_smiles(std::string_view text);

  std::vector<AtomNode> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t ring_closures_ = 0;
  std::string source_;
};

/// Parses organic-subset and bracket atoms, branches, ring closures (digits and
/// %nn), bond symbols - = # : and "." separators. Stereo marks are accepted
/// and dropped. Throws ParseError carrying the byte offset of the problem.
MolGraph parse_smiles(std::string_view text);

/// Relabels atoms: old atom i becomes atom perm[i].
MolGraph permute_atoms(const MolGraph &graph, std::span<const std::size_t> perm);

struct GraphFeatures {
  std::vector<std::size_t> atom_types;  // atomic number clamped to 116
  Tensor adjacency;                     // [4 x n x n], symmetric, zero diagonal
};

GraphFeatures featurize(const MolGraph &graph);

enum class AdjacencyMode {
  kRenormalized,   // D^-1/2 (A + I) D^-1/2 over all bond types -> [n x n]
  kPerTypeScaled,  // each bond-type plane row-normalised -> [4 x n x n]
};

Tensor normalized_adjacency(const MolGraph &graph, AdjacencyMode mode);

}  // namespace rxncond

#endif  // RXNCOND_SMILES_HPP_
