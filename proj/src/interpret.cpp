//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rxncond/error.hpp"

namespace rxncond {
namespace {

using nlohmann::ordered_json;

const std::string kGpn { ReactionModel::kGpnPrefix };

MoleculeActivation describe(const MolGraph &graph, MoleculeRole role, std::string smiles) {
  MoleculeActivation m;
  m.role = role;
  m.smiles = std::move(smiles);
  for (const AtomNode &a: graph.atoms())
    m.elements.push_back(a.symbol);
  m.bonds = graph.bonds();
  return m;
}

ordered_json molecule_to_json(const MoleculeActivation &m) {
  ordered_json j;
  j["role"] = std::string(role_name(m.role));
  j["smiles"] = m.smiles;
  ordered_json atoms = ordered_json::array();
  for (std::size_t i = 0; i < m.elements.size(); ++i) {
    ordered_json a;
    a["index"] = i;
    a["element"] = m.elements[i];
    a["score"] = i < m.scores.size() ? m.scores[i] : 0.0;
    a["norm"] = i < m.norms.size() ? m.norms[i] : 0.0;
    atoms.push_back(std::move(a));
  }
  j["atoms"] = std::move(atoms);
  ordered_json bonds = ordered_json::array();
  for (const Bond &b: m.bonds)
    bonds.push_back({ b.begin, b.end, std::string(bond_type_name(b.type)) });
  j["bonds"] = std::move(bonds);
  return j;
}

BondType bond_from_name(const std::string &name) {
  for (std::size_t t = 0; t < kNumBondTypes; ++t) {
    const auto type = static_cast<BondType>(t);
    if (bond_type_name(type) == name)
      return type;
  }
  throw ConfigError("unknown bond type '" + name + "'");
}

MoleculeActivation molecule_from_json(const ordered_json &j) {
  MoleculeActivation m;
  m.role = parse_role(j.at("role").get<std::string>());
  m.smiles = j.at("smiles").get<std::string>();
  for (const ordered_json &a: j.at("atoms")) {
    if (a.at("index").get<std::size_t>() != m.elements.size())
      throw ConfigError("atom indices must be consecutive from 0");
    m.elements.push_back(a.at("element").get<std::string>());
    m.scores.push_back(a.at("score").get<double>());
    m.norms.push_back(a.at("norm").get<double>());
  }
  for (const ordered_json &b: j.at("bonds")) {
    Bond bond;
    bond.begin = b.at(0).get<std::size_t>();
    bond.end = b.at(1).get<std::size_t>();
    bond.type = bond_from_name(b.at(2).get<std::string>());
    if (bond.begin >= bond.end || bond.end >= m.elements.size())
      throw ConfigError("bond indices out of range");
    m.bonds.push_back(bond);
  }
  return m;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string_view role_name(MoleculeRole role) {
  return role == MoleculeRole::kProduct ? "product" : "reactant";
}

MoleculeRole parse_role(std::string_view name) {
  if (name == "reactant")
    return MoleculeRole::kReactant;
  if (name == "product")
    return MoleculeRole::kProduct;
  throw ConfigError("unknown molecule role '" + std::string(name) + "'");
}

std::vector<double> min_max(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty())
    return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0))
    return out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - *lo) / range;
  return out;
}

void normalize_scores(AtomActivationMap &map) {
  std::vector<double> pooled;
  for (const MoleculeActivation &m: map.molecules)
    pooled.insert(pooled.end(), m.norms.begin(), m.norms.end());
  const std::vector<double> scores = min_max(pooled);
  std::size_t at = 0;
  for (MoleculeActivation &m: map.molecules) {
    m.scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(at),
                    scores.begin() + static_cast<std::ptrdiff_t>(at + m.norms.size()));
    at += m.norms.size();
  }
}

std::vector<double> atom_norms(const ReactionModel &model, const GraphInputs &graph) {
  Tape tape;
  const BoundParameters bound = model.parameters().bind(tape, false);
  const Tensor states = embed(graph, bound, model.config().gpn, kGpn).atom_states.value();
  std::vector<double> norms(states.rows(), 0.0);
  for (std::size_t i = 0; i < states.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < states.cols(); ++j)
      s += states(i, j) * states(i, j);
    norms[i] = std::sqrt(s);
  }
  return norms;
}

AtomActivationMap activations(const ReactionModel &model,
                              std::span<const std::string> reactants,
                              const std::string &product) {
  AtomActivationMap map;
  auto add = [&](const std::string &smiles, MoleculeRole role) {
    const MolGraph graph = parse_smiles(smiles);
    MoleculeActivation m = describe(graph, role, smiles);
    m.norms = atom_norms(model, prepare_graph(graph));
    map.molecules.push_back(std::move(m));
  };
  for (const std::string &r: reactants)
    add(r, MoleculeRole::kReactant);
  add(product, MoleculeRole::kProduct);
  normalize_scores(map);
  return map;
}

std::string molecule_json(const MoleculeActivation &molecule) {
  ordered_json j;
  j["format"] = "rxncond-activations";
  j["format_version"] = kActivationFormatVersion;
  const ordered_json body = molecule_to_json(molecule);
  for (const auto &[key, value]: body.items())
    j[key] = value;
  return j.dump(2) + "\n";
}

std::string activation_map_json(const AtomActivationMap &map) {
  ordered_json j;
  j["format"] = "rxncond-activations";
  j["format_version"] = kActivationFormatVersion;
  ordered_json list = ordered_json::array();
  for (const MoleculeActivation &m: map.molecules)
    list.push_back(molecule_to_json(m));
  j["molecules"] = std::move(list);
  return j.dump(2) + "\n";
}

AtomActivationMap activation_map_from_json(std::string_view text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kActivationFormatVersion)
      throw ConfigError("unsupported activation format_version " + std::to_string(version));
    AtomActivationMap map;
    if (j.contains("molecules")) {
      for (const ordered_json &m: j.at("molecules"))
        map.molecules.push_back(molecule_from_json(m));
    } else {
      map.molecules.push_back(molecule_from_json(j));
    }
    return map;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed activation document: ") + e.what());
  }
}

int shade_level(double score) {
  const double s = std::clamp(score, 0.0, 1.0);
  return 255 - static_cast<int>(std::lround(s * 215.0));
}

std::string render_svg(const MoleculeActivation &molecule) {
  const std::size_t n = molecule.elements.size();
  const std::vector<Point> pos = layout_molecule(n, molecule.bonds);

  constexpr double kScale = 40.0;
  constexpr double kMargin = 30.0;
  constexpr double kRadius = 12.0;
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || pos[i].x < min_x) min_x = pos[i].x;
    if (i == 0 || pos[i].y < min_y) min_y = pos[i].y;
    if (i == 0 || pos[i].x > max_x) max_x = pos[i].x;
    if (i == 0 || pos[i].y > max_y) max_y = pos[i].y;
  }
  auto px = [&](std::size_t i) { return kMargin + (pos[i].x - min_x) * kScale; };
  auto py = [&](std::size_t i) { return kMargin + (pos[i].y - min_y) * kScale; };
  const double width = 2 * kMargin + (max_x - min_x) * kScale;
  const double height = 2 * kMargin + (max_y - min_y) * kScale;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
      << num(height) << "\">\n";
  svg << "<title>" << role_name(molecule.role) << " ";
  for (char c: molecule.smiles) {
    switch (c) {
    case '&': svg << "&amp;"; break;
    case '<': svg << "&lt;"; break;
    case '>': svg << "&gt;"; break;
    default: svg << c;
    }
  }
  svg << "</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  svg << "<g stroke=\"black\" stroke-width=\"1.5\">\n";
  for (const Bond &b: molecule.bonds) {
    const double x1 = px(b.begin), y1 = py(b.begin), x2 = px(b.end), y2 = py(b.end);
    const double len = std::hypot(x2 - x1, y2 - y1);
    const double nx = len > 0 ? -(y2 - y1) / len : 0.0;
    const double ny = len > 0 ? (x2 - x1) / len : 0.0;
    std::vector<double> offsets;
    switch (b.type) {
    case BondType::kSingle: offsets = { 0.0 }; break;
    case BondType::kDouble: offsets = { -2.5, 2.5 }; break;
    case BondType::kTriple: offsets = { -4.0, 0.0, 4.0 }; break;
    case BondType::kAromatic: offsets = { 0.0, 4.0 }; break;
    }
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const double o = offsets[k];
      svg << "<line x1=\"" << num(x1 + nx * o) << "\" y1=\"" << num(y1 + ny * o)
          << "\" x2=\"" << num(x2 + nx * o) << "\" y2=\"" << num(y2 + ny * o) << "\"";
      if (b.type == BondType::kAromatic && k == 1)
        svg << " stroke-dasharray=\"3,3\"";
      svg << "/>\n";
    }
  }
  svg << "</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double score = i < molecule.scores.size() ? molecule.scores[i] : 0.0;
    const int level = shade_level(score);
    char fill[8];
    std::snprintf(fill, sizeof fill, "#%02x%02x%02x", level, level, level);
    svg << "<circle cx=\"" << num(px(i)) << "\" cy=\"" << num(py(i)) << "\" r=\""
        << num(kRadius) << "\" fill=\"" << fill << "\" stroke=\"black\" data-atom=\"" << i
        << "\" data-score=\"" << num(score) << "\"/>\n";
    svg << "<text x=\"" << num(px(i)) << "\" y=\"" << num(py(i) + 4.0) << "\" fill=\""
        << (level < 128 ? "white" : "black") << "\">" << molecule.elements[i] << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace rxncond
