//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/smiles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <utility>

#include "rxncond/error.hpp"

namespace rxncond {

std::string_view bond_type_name(BondType type) {
  switch (type) {
  case BondType::kSingle:
    return "single";
  case BondType::kDouble:
    return "double";
  case BondType::kTriple:
    return "triple";
  case BondType::kAromatic:
    return "aromatic";
  }
  return "?";
}

/* MolGraph */

std::size_t MolGraph::add_atom(AtomNode atom) {
  atoms_.push_back(std::move(atom));
  neighbors_.emplace_back();
  return atoms_.size() - 1;
}

bool MolGraph::has_bond(std::size_t a, std::size_t b) const {
  const auto &nb = neighbors_[a];
  return std::find(nb.begin(), nb.end(), b) != nb.end();
}

void MolGraph::add_bond(std::size_t a, std::size_t b, BondType type) {
  if (a >= atoms_.size() || b >= atoms_.size())
    throw ValidationError("bond refers to a missing atom");
  if (a == b)
    throw ValidationError("self-loop on atom " + std::to_string(a));
  if (has_bond(a, b)) {
    throw ValidationError("duplicate bond " + std::to_string(a) + "-"
                          + std::to_string(b));
  }
  bonds_.push_back(Bond { std::min(a, b), std::max(a, b), type });
  neighbors_[a].push_back(b);
  neighbors_[b].push_back(a);
}

std::vector<std::size_t> MolGraph::neighbors(std::size_t atom, BondType type) const {
  std::vector<std::size_t> out;
  for (const Bond &b: bonds_) {
    if (b.type != type)
      continue;
    if (b.begin == atom)
      out.push_back(b.end);
    else if (b.end == atom)
      out.push_back(b.begin);
  }
  return out;
}

std::size_t MolGraph::bond_count(BondType type) const {
  return static_cast<std::size_t>(std::count_if(
      bonds_.begin(), bonds_.end(), [type](const Bond &b) { return b.type == type; }));
}

std::size_t MolGraph::num_components() const {
  std::vector<std::size_t> parent(atoms_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Bond &b: bonds_)
    parent[find(b.begin)] = find(b.end);
  std::size_t n = 0;
  for (std::size_t i = 0; i < parent.size(); ++i)
    n += find(i) == i ? 1 : 0;
  return n;
}

/* Parser */

namespace {

constexpr std::string_view kOrganicTwo[] = { "Cl", "Br" };
constexpr std::string_view kOrganicOne[] = { "B", "C", "N", "O", "P", "S", "F", "I" };
constexpr std::string_view kAromaticOrganic[] = { "b", "c", "n", "o", "p", "s" };
constexpr std::string_view kAromaticBracketTwo[] = { "se", "as", "te" };

bool is_digit(char c) {
  return c >= '0' && c <= '9';
}

bool is_upper(char c) {
  return c >= 'A' && c <= 'Z';
}

bool is_lower(char c) {
  return c >= 'a' && c <= 'z';
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty() && is_lower(out[0]))
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

AtomNode make_atom(std::string symbol, int z, bool aromatic) {
  AtomNode atom;
  atom.symbol = std::move(symbol);
  atom.atomic_number = z;
  atom.aromatic = aromatic;
  atom.feature_index = static_cast<std::size_t>(
      std::min(z, static_cast<int>(kNumAtomTypes) - 1));
  return atom;
}

struct PendingBond {
  char symbol;
  std::size_t offset;
};

struct OpenRing {
  std::size_t atom;
  std::optional<PendingBond> bond;
  std::size_t offset;
};

struct OpenBranch {
  std::size_t atom;
  std::size_t atoms_before;
  std::size_t offset;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text): text_(text) { }

  MolGraph parse() {
    if (text_.empty())
      throw ParseError(0, "empty SMILES string");

    std::optional<std::size_t> last_dot;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '[' || c == '*' || is_upper(c) || is_lower(c)) {
        const std::size_t atom = c == '[' ? bracket_atom() : organic_atom();
        connect_new_atom(atom);
        last_dot.reset();
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/'
                 || c == '\\') {
        if (!prev_)
          throw ParseError(pos_, "bond symbol without a preceding atom");
        if (pending_)
          throw ParseError(pos_, "consecutive bond symbols");
        pending_ = PendingBond { c, pos_ };
        ++pos_;
      } else if (c == '$') {
        throw ParseError(pos_, "quadruple bonds are not supported");
      } else if (c == '(') {
        if (!prev_)
          throw ParseError(pos_, "branch without a preceding atom");
        if (pending_)
          throw ParseError(pending_->offset, "bond symbol before branch");
        branches_.push_back(OpenBranch { *prev_, graph_.num_atoms(), pos_ });
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty())
          throw ParseError(pos_, "unmatched ')'");
        if (pending_)
          throw ParseError(pending_->offset, "bond symbol without a following atom");
        if (graph_.num_atoms() == branches_.back().atoms_before)
          throw ParseError(pos_, "empty branch");
        prev_ = branches_.back().atom;
        branches_.pop_back();
        ++pos_;
      } else if (is_digit(c) || c == '%') {
        ring_bond();
      } else if (c == '.') {
        if (!prev_)
          throw ParseError(pos_, "'.' without a preceding atom");
        if (pending_)
          throw ParseError(pending_->offset, "bond symbol without a following atom");
        if (!branches_.empty())
          throw ParseError(pos_, "'.' inside a branch");
        last_dot = pos_;
        prev_.reset();
        ++pos_;
      } else {
        throw ParseError(pos_, std::string("unexpected character '") + c + "'");
      }
    }

    if (pending_)
      throw ParseError(pending_->offset, "bond symbol without a following atom");
    if (!branches_.empty())
      throw ParseError(branches_.back().offset, "unclosed branch");
    if (!rings_.empty()) {
      std::size_t first = text_.size();
      for (const auto &[num, ring]: rings_)
        first = std::min(first, ring.offset);
      throw ParseError(first, "unclosed ring bond");
    }
    if (last_dot)
      throw ParseError(*last_dot, "'.' without a following atom");

    return std::move(graph_);
  }

  std::size_t ring_closures() const { return ring_closures_; }

 private:
  std::size_t ring_closures_ = 0;
  void connect_new_atom(std::size_t atom) {
    if (prev_) {
      const BondType type = resolve(pending_, *prev_, atom);
      graph_.add_bond(*prev_, atom, type);
    } else if (pending_) {
      throw ParseError(pending_->offset, "bond symbol without a preceding atom");
    }
    pending_.reset();
    prev_ = atom;
  }

  BondType resolve(const std::optional<PendingBond> &bond, std::size_t a,
                   std::size_t b) const {
    if (!bond) {
      const auto &atoms = graph_.atoms();
      return atoms[a].aromatic && atoms[b].aromatic ? BondType::kAromatic
                                                    : BondType::kSingle;
    }
    switch (bond->symbol) {
    case '=':
      return BondType::kDouble;
    case '#':
      return BondType::kTriple;
    case ':':
      return BondType::kAromatic;
    default:
      return BondType::kSingle;
    }
  }

  std::size_t organic_atom() {
    const std::string_view rest = text_.substr(pos_);
    for (std::string_view sym: kOrganicTwo) {
      if (rest.starts_with(sym)) {
        pos_ += 2;
        return graph_.add_atom(make_atom(std::string(sym), atomic_number(sym), false));
      }
    }
    for (std::string_view sym: kOrganicOne) {
      if (rest.starts_with(sym)) {
        pos_ += 1;
        return graph_.add_atom(make_atom(std::string(sym), atomic_number(sym), false));
      }
    }
    for (std::string_view sym: kAromaticOrganic) {
      if (rest.starts_with(sym)) {
        pos_ += 1;
        const std::string upper = capitalize(sym);
        return graph_.add_atom(make_atom(upper, atomic_number(upper), true));
      }
    }
    if (rest.front() == '*') {
      pos_ += 1;
      return graph_.add_atom(make_atom("*", 0, false));
    }
    throw ParseError(pos_, "unknown element symbol");
  }

  std::size_t read_number(int &out) {
    const std::size_t start = pos_;
    out = 0;
    while (pos_ < text_.size() && is_digit(text_[pos_])) {
      out = out * 10 + (text_[pos_] - '0');
      if (out > 100000)
        throw ParseError(start, "number too large");
      ++pos_;
    }
    return pos_ - start;
  }

  std::size_t bracket_atom() {
    const std::size_t open = pos_;
    const std::size_t close = text_.find(']', open);
    if (close == std::string_view::npos)
      throw ParseError(open, "unterminated bracket atom");
    ++pos_;

    int isotope = 0;
    read_number(isotope);

    // Element symbol.
    const std::size_t sym_start = pos_;
    std::string symbol;
    int z = -1;
    bool aromatic = false;
    const std::string_view rest = text_.substr(pos_, close - pos_);
    if (rest.empty())
      throw ParseError(pos_, "missing element symbol in bracket atom");
    if (rest.front() == '*') {
      symbol = "*";
      z = 0;
      pos_ += 1;
    } else if (is_upper(rest.front())) {
      if (rest.size() >= 2 && is_lower(rest[1])
          && atomic_number(rest.substr(0, 2)) >= 0) {
        symbol = std::string(rest.substr(0, 2));
        pos_ += 2;
      } else {
        symbol = std::string(rest.substr(0, 1));
        pos_ += 1;
      }
      z = atomic_number(symbol);
    } else if (is_lower(rest.front())) {
      aromatic = true;
      for (std::string_view sym: kAromaticBracketTwo) {
        if (rest.starts_with(sym)) {
          symbol = capitalize(sym);
          pos_ += 2;
          break;
        }
      }
      if (symbol.empty()) {
        for (std::string_view sym: kAromaticOrganic) {
          if (rest.starts_with(sym)) {
            symbol = capitalize(sym);
            pos_ += 1;
            break;
          }
        }
      }
      z = symbol.empty() ? -1 : atomic_number(symbol);
    } else {
      throw ParseError(pos_, "missing element symbol in bracket atom");
    }
    if (z < 0)
      throw ParseError(sym_start, "unknown element symbol");

    // Chirality, discarded.
    while (pos_ < close && text_[pos_] == '@')
      ++pos_;
    if (pos_ > sym_start && text_[pos_ - 1] == '@') {
      static constexpr std::string_view kClasses[] = { "TH", "AL", "SP", "TB", "OH" };
      for (std::string_view cls: kClasses) {
        if (text_.substr(pos_).starts_with(cls)) {
          pos_ += 2;
          int ignored = 0;
          if (read_number(ignored) == 0)
            throw ParseError(pos_, "chirality class without a number");
          break;
        }
      }
    }

    int hcount = 0;
    if (pos_ < close && text_[pos_] == 'H') {
      ++pos_;
      int n = 0;
      hcount = read_number(n) > 0 ? n : 1;
    }

    int charge = 0;
    if (pos_ < close && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_];
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      int n = 0;
      if (read_number(n) > 0) {
        charge = unit * n;
      } else {
        charge = unit;
        while (pos_ < close && text_[pos_] == sign) {
          charge += unit;
          ++pos_;
        }
      }
    }

    if (pos_ < close && text_[pos_] == ':') {
      ++pos_;
      int ignored = 0;
      if (read_number(ignored) == 0)
        throw ParseError(pos_, "atom class without a number");
    }

    if (pos_ != close)
      throw ParseError(pos_, "malformed bracket atom");
    pos_ = close + 1;

    AtomNode atom = make_atom(symbol, z, aromatic);
    atom.isotope = isotope;
    atom.hydrogen_count = hcount;
    atom.formal_charge = charge;
    return graph_.add_atom(std::move(atom));
  }

  void ring_bond() {
    const std::size_t start = pos_;
    if (!prev_)
      throw ParseError(start, "ring bond without a preceding atom");
    int number = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !is_digit(text_[pos_ + 1])
          || !is_digit(text_[pos_ + 2])) {
        throw ParseError(start, "'%' must be followed by two digits");
      }
      number = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = text_[pos_] - '0';
      pos_ += 1;
    }

    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing { *prev_, pending_, start });
      pending_.reset();
      return;
    }

    const OpenRing ring = it->second;
    rings_.erase(it);
    std::optional<PendingBond> bond = pending_;
    if (ring.bond && bond && ring.bond->symbol != bond->symbol)
      throw ParseError(start, "conflicting ring bond symbols");
    if (!bond)
      bond = ring.bond;
    if (ring.atom == *prev_)
      throw ParseError(start, "ring bond closes on its own atom");
    if (graph_.has_bond(ring.atom, *prev_))
      throw ParseError(start, "ring bond duplicates an existing bond");
    graph_.add_bond(ring.atom, *prev_, resolve(bond, ring.atom, *prev_));
    ++ring_closures_;
    pending_.reset();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  MolGraph graph_;
  std::optional<std::size_t> prev_;
  std::optional<PendingBond> pending_;
  std::vector<OpenBranch> branches_;
  std::map<int, OpenRing> rings_;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) {
  SmilesParser parser(text);
  MolGraph graph = parser.parse();
  graph.source_ = std::string(text);
  graph.ring_closures_ = parser.ring_closures();
  return graph;
}

MolGraph permute_atoms(const MolGraph &graph, std::span<const std::size_t> perm) {
  const std::size_t n = graph.num_atoms();
  if (perm.size() != n)
    throw ValidationError("permutation length does not match atom count");
  std::vector<std::size_t> inverse(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || inverse[perm[i]] != n)
      throw ValidationError("not a permutation");
    inverse[perm[i]] = i;
  }
  MolGraph out;
  for (std::size_t j = 0; j < n; ++j)
    out.add_atom(graph.atoms()[inverse[j]]);
  for (const Bond &b: graph.bonds())
    out.add_bond(perm[b.begin], perm[b.end], b.type);
  return out;
}

GraphFeatures featurize(const MolGraph &graph) {
  const std::size_t n = graph.num_atoms();
  GraphFeatures f;
  f.atom_types.reserve(n);
  for (const AtomNode &a: graph.atoms())
    f.atom_types.push_back(a.feature_index);
  f.adjacency = Tensor({ kNumBondTypes, n, n });
  for (const Bond &b: graph.bonds()) {
    const std::size_t plane = static_cast<std::size_t>(b.type) * n * n;
    f.adjacency[plane + b.begin * n + b.end] = 1.0;
    f.adjacency[plane + b.end * n + b.begin] = 1.0;
  }
  return f;
}

Tensor normalized_adjacency(const MolGraph &graph, AdjacencyMode mode) {
  const std::size_t n = graph.num_atoms();
  if (mode == AdjacencyMode::kRenormalized) {
    Tensor a({ n, n });
    for (std::size_t i = 0; i < n; ++i)
      a(i, i) = 1.0;
    for (const Bond &b: graph.bonds()) {
      a(b.begin, b.end) = 1.0;
      a(b.end, b.begin) = 1.0;
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0;
      for (std::size_t j = 0; j < n; ++j)
        d += a(i, j);
      inv_sqrt[i] = 1.0 / std::sqrt(d);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    }
    return a;
  }

  Tensor planes = featurize(graph).adjacency;
  for (std::size_t t = 0; t < kNumBondTypes; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double *row = planes.data() + t * n * n + i * n;
      double d = 0;
      for (std::size_t j = 0; j < n; ++j)
        d += row[j];
      if (d > 0) {
        for (std::size_t j = 0; j < n; ++j)
          row[j] /= d;
      }
    }
  }
  return planes;
}

}  // namespace rxncond
