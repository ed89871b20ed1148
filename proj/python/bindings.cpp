//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rxncond/dictionary.hpp"
#include "rxncond/error.hpp"
#include "rxncond/eval.hpp"
#include "rxncond/interpret.hpp"
#include "rxncond/model.hpp"
#include "rxncond/smiles.hpp"

namespace py = pybind11;
using namespace rxncond;

namespace {

RawRecord record_from(const py::dict &d) {
  RawRecord r;
  r.reactants = d["reactants"].cast<std::vector<std::string>>();
  r.product = d["product"].cast<std::string>();
  r.conditions = d["conditions"].cast<std::vector<std::string>>();
  if (d.contains("yield") && !d["yield"].is_none())
    r.yield = d["yield"].cast<double>();
  if (d.contains("temperature") && !d["temperature"].is_none())
    r.temperature = d["temperature"].cast<std::string>();
  return r;
}

std::vector<RawRecord> records_from(const py::iterable &items) {
  std::vector<RawRecord> out;
  for (const py::handle &h: items)
    out.push_back(record_from(h.cast<py::dict>()));
  return out;
}

py::dict graph_dict(const MolGraph &g) {
  py::list atoms, charges, bonds;
  for (const AtomNode &a: g.atoms()) {
    atoms.append(a.symbol);
    charges.append(a.formal_charge);
  }
  for (const Bond &b: g.bonds())
    bonds.append(py::make_tuple(b.begin, b.end, std::string(bond_type_name(b.type))));
  py::dict d;
  d["atoms"] = atoms;
  d["charges"] = charges;
  d["bonds"] = bonds;
  d["components"] = g.num_components();
  return d;
}

py::list ranking_list(const RankedPrediction &pred) {
  py::list out;
  for (const CategoryRanking &c: pred) {
    py::list labels;
    for (const RankedLabel &l: c.labels)
      labels.append(py::make_tuple(l.label, l.score));
    out.append(py::make_tuple(c.category, labels));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reaction condition recommendation core";

  static py::exception<Error> error(m, "Error");
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const ParseError &e) {
      py::object args = py::make_tuple(e.what(), e.offset());
      PyErr_SetObject(parse_error.ptr(), args.ptr());
    } catch (const Error &e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("parse_smiles", [](const std::string &smiles) { return graph_dict(parse_smiles(smiles)); },
        py::arg("smiles"), "Parse SMILES into atoms, charges and typed bonds.");

  m.def("featurize", [](const std::string &smiles) {
    const GraphFeatures f = featurize(parse_smiles(smiles));
    const std::size_t n = f.atom_types.size();
    py::array_t<double> adj({ kNumBondTypes, n, n });
    std::copy(f.adjacency.values().begin(), f.adjacency.values().end(), adj.mutable_data());
    return py::make_tuple(f.atom_types, adj);
  }, py::arg("smiles"), "Atom type indices and the [4, n, n] bond-type adjacency.");

  py::class_<ConditionDictionary>(m, "Dictionary")
      .def_static("from_json", &ConditionDictionary::from_json)
      .def("to_json", &ConditionDictionary::to_json)
      .def("digest", &ConditionDictionary::digest)
      .def_property_readonly("total_bins", &ConditionDictionary::total_bins)
      .def_property_readonly("categories", [](const ConditionDictionary &d) {
        py::list out;
        for (const Category &c: d.categories()) {
          py::list bins;
          for (const Bin &b: c.bins)
            bins.append(py::make_tuple(b.label, b.frequency));
          out.append(py::make_tuple(c.name, bins, c.null_frequency));
        }
        return out;
      })
      .def("encode", [](const ConditionDictionary &d, const py::dict &record) {
        return encode_targets(record_from(record), d);
      }, py::arg("record"));

  m.def("build_dictionary",
        [](const py::iterable &records, const py::dict &roles, const AliasMap &aliases,
           double coverage) {
          // Dict order fixes the category order.
          RoleMap role_map;
          for (const auto &[label, cats]: roles)
            role_map.assign(label.cast<std::string>(), cats.cast<std::vector<std::string>>());
          BuildOptions options;
          options.coverage = coverage;
          return build_dictionary(records_from(records), role_map, aliases, options);
        },
        py::arg("records"), py::arg("roles"), py::arg("aliases") = AliasMap { },
        py::arg("coverage") = 0.95);

  m.def("aer",
        [](const std::vector<double> &model, const std::vector<double> &dummy,
           const std::vector<bool> &excluded) { return aer(model, dummy, excluded); },
        py::arg("model"), py::arg("dummy"), py::arg("excluded") = std::vector<bool> { },
        "Average error reduction of a model over the dummy baseline.");

  m.def("categorical_accuracy",
        [](const std::vector<std::vector<std::vector<std::size_t>>> &rankings,
           const std::vector<std::vector<std::vector<std::size_t>>> &truths,
           const std::vector<std::size_t> &sizes, std::size_t k) {
          RankingSet set;
          for (std::size_t c = 0; c < sizes.size(); ++c)
            set.categories.push_back(std::to_string(c));
          set.category_sizes = sizes;
          if (rankings.size() != truths.size())
            throw DimensionError("rankings and truths differ in length");
          for (std::size_t i = 0; i < rankings.size(); ++i)
            set.add(rankings[i], truths[i]);
          return categorical_accuracy(set, k);
        },
        py::arg("rankings"), py::arg("truths"), py::arg("category_sizes"), py::arg("k"));

  m.def("split_dataset",
        [](std::size_t count, std::uint64_t seed) {
          const SplitIndices s = split_dataset(count, seed);
          return py::make_tuple(s.train, s.validation, s.test);
        },
        py::arg("count"), py::arg("seed"));

  py::class_<ReactionModel>(m, "Model")
      .def_property_readonly("class_num", [](const ReactionModel &r) { return r.config().class_num; })
      .def_property_readonly("architecture", [](const ReactionModel &r) {
        return std::string(architecture_name(r.config().gpn.architecture));
      })
      .def("forward", [](const ReactionModel &r, const std::vector<std::string> &reactants,
                         const std::string &product) {
        return r.forward(prepare_reaction(reactants, product));
      }, py::arg("reactants"), py::arg("product"))
      .def("predict", [](const ReactionModel &r, const std::vector<std::string> &reactants,
                         const std::string &product, const ConditionDictionary &dict) {
        return ranking_list(predict(r, prepare_reaction(reactants, product), dict));
      }, py::arg("reactants"), py::arg("product"), py::arg("dictionary"))
      .def("activations", [](const ReactionModel &r, const std::vector<std::string> &reactants,
                             const std::string &product) {
        return activation_map_json(activations(r, reactants, product));
      }, py::arg("reactants"), py::arg("product"), "Atom activation map as JSON.")
      .def("checkpoint_json", [](const ReactionModel &r, std::size_t epoch, std::uint64_t seed) {
        return checkpoint_to_json(r, CheckpointMetadata { epoch, seed, std::nullopt, "python" });
      }, py::arg("epoch") = 0, py::arg("seed") = 0);

  m.def("render_svg", [](const std::string &activations_json) {
    std::vector<std::string> out;
    for (const MoleculeActivation &mol: activation_map_from_json(activations_json).molecules)
      out.push_back(render_svg(mol));
    return out;
  }, py::arg("activations_json"), "One SVG per molecule of an activation map.");

  m.def("load_checkpoint", [](const std::string &path) { return load_checkpoint(path).model; },
        py::arg("path"));

  m.def("train",
        [](const py::iterable &records, const ConditionDictionary &dict, const std::string &arch,
           std::size_t hidden_dim, std::size_t n_layers, std::size_t epochs, std::uint64_t seed) {
          const std::vector<RawRecord> recs = records_from(records);
          std::vector<ReactionInput> inputs;
          std::vector<TargetVector> targets;
          for (const RawRecord &r: recs) {
            inputs.push_back(prepare_reaction(r));
            targets.push_back(encode_targets(r, dict));
          }
          const SplitIndices split = split_dataset(recs.size(), seed);
          std::vector<Example> train_set, val_set;
          for (std::size_t i: split.train)
            train_set.push_back({ &inputs[i], &targets[i] });
          for (std::size_t i: split.validation)
            val_set.push_back({ &inputs[i], &targets[i] });

          ModelConfig cfg;
          cfg.gpn.architecture = parse_architecture(arch);
          cfg.gpn.hidden_dim = hidden_dim;
          cfg.gpn.out_dim = hidden_dim;
          cfg.gpn.n_layers = n_layers;
          cfg.mlp_hidden = hidden_dim;
          cfg.class_num = dict.total_bins();
          ReactionModel model(cfg, dict.digest(), seed);
          TrainConfig tc;
          tc.epochs = epochs;
          tc.seed = seed;
          TrainResult result;
          {
            py::gil_scoped_release release;
            result = train(model, train_set, val_set, tc);
          }
          py::list trace;
          for (const EpochStats &s: result.trace)
            trace.append(py::make_tuple(s.epoch, s.train_loss, s.validation_loss));
          return py::make_tuple(model, trace);
        },
        py::arg("records"), py::arg("dictionary"), py::arg("arch") = "rgcn",
        py::arg("hidden_dim") = 32, py::arg("n_layers") = 2, py::arg("epochs") = 10,
        py::arg("seed") = 0);
}
