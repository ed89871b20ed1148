//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_DICTIONARY_HPP_
#define RXNCOND_DICTIONARY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rxncond {

/// One reaction as ingested: structures, raw condition strings, yield.
struct RawRecord {
  std::vector<std::string> reactants;
  std::string product;
  std::vector<std::string> conditions;
  std::optional<double> yield;
  std::optional<std::string> temperature;

  friend bool operator==(const RawRecord &, const RawRecord &) = default;
};

/// Drops repeated condition strings, keeping first occurrences in order.
void dedupe_conditions(RawRecord &record);

/// Reads the dataset CSV (columns reactant_smiles, product_smiles, conditions,
/// optional yield and temperature; list fields separated by ';').
/// Schema violations raise ValidationError naming the line.
std::vector<RawRecord> read_records_csv(std::istream &in);
void write_records_csv(std::ostream &out, std::span<const RawRecord> records);

/// Raw label -> one or more categories. Category order is the order of first
/// appearance.
class RoleMap {
 public:
  void assign(const std::string &label, const std::vector<std::string> &categories);
  const std::vector<std::string> *categories_for(const std::string &label) const;
  const std::vector<std::string> &category_order() const { return order_; }
  bool empty() const { return roles_.empty(); }

 private:
  std::map<std::string, std::vector<std::string>> roles_;
  std::vector<std::string> order_;
};

using AliasMap = std::map<std::string, std::string>;

/// label<TAB>category[,category...] per line; '#' comments and blank lines are
/// ignored.
RoleMap read_role_map(std::istream &in);
/// variant<TAB>canonical per line.
AliasMap read_alias_map(std::istream &in);

struct Bin {
  std::string label;
  std::size_t frequency = 0;

  friend bool operator==(const Bin &, const Bin &) = default;
};

struct Category {
  std::string name;
  std::vector<Bin> bins;  // descending frequency, ties lexicographic
  std::size_t null_frequency = 0;

  /// Bin count including the trailing null bin.
  std::size_t size() const { return bins.size() + 1; }

  friend bool operator==(const Category &, const Category &) = default;
};

struct BuildOptions {
  double coverage = 0.95;
  // When set, each record's temperature (or `default_temperature`) becomes a
  // label of this category.
  std::optional<std::string> temperature_category;
  std::string default_temperature = "20 °C";
};

struct LabelCount {
  std::string label;
  std::size_t frequency = 0;
};

struct CategoryReport {
  std::string name;
  std::size_t total = 0;  // instances of labels assigned to the category
  std::size_t kept = 0;   // instances covered by surviving bins
  std::vector<LabelCount> dropped;

  double coverage() const {
    return total == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(total);
  }
};

struct BuildReport {
  std::size_t total_instances = 0;
  std::size_t kept_instances = 0;
  std::vector<LabelCount> dropped;   // cut by the global truncation
  std::vector<LabelCount> unmapped;  // survived truncation but have no role
  std::vector<CategoryReport> categories;
  std::vector<LabelCount> pooled;    // every label with its frequency, sorted
};

using TargetVector = std::vector<std::uint8_t>;

/// Role-categorised label space. Global bin layout: categories in order, each
/// contributing its bins followed by its null bin.
class ConditionDictionary {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr std::string_view kNullLabel = "null";

  ConditionDictionary() = default;
  ConditionDictionary(std::vector<Category> categories, AliasMap aliases,
                      BuildOptions options);

  const std::vector<Category> &categories() const { return categories_; }
  std::size_t num_categories() const { return categories_.size(); }
  std::size_t total_bins() const { return total_; }
  std::size_t category_offset(std::size_t c) const { return offsets_[c]; }
  std::size_t null_index(std::size_t c) const {
    return offsets_[c] + categories_[c].bins.size();
  }
  /// (category, position within category) of a global bin index.
  std::pair<std::size_t, std::size_t> locate(std::size_t bin) const;
  std::string_view label(std::size_t bin) const;
  /// Global bins holding `canonical_label` (several if copied into categories).
  std::vector<std::size_t> bins_for(const std::string &canonical_label) const;
  std::optional<std::size_t> category_index(std::string_view name) const;

  const AliasMap &aliases() const { return aliases_; }
  std::string canonical(const std::string &label) const;
  const BuildOptions &options() const { return options_; }

  std::string to_json() const;
  static ConditionDictionary from_json(std::string_view text);
  /// SHA-256 (hex) of the canonical JSON document.
  std::string digest() const;

  friend bool operator==(const ConditionDictionary &a, const ConditionDictionary &b) {
    return a.to_json() == b.to_json();
  }

 private:
  void index();

  std::vector<Category> categories_;
  AliasMap aliases_;
  BuildOptions options_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  std::map<std::string, std::vector<std::size_t>> by_label_;
};

/// Two-stage truncated, role-categorised dictionary:
/// global 95% (by default) instance-frequency cut, role assignment with
/// copying, per-category recount and cut, null bin per category.
ConditionDictionary build_dictionary(std::span<const RawRecord> records,
                                     const RoleMap &roles, const AliasMap &aliases,
                                     const BuildOptions &options = { },
                                     BuildReport *report = nullptr);

/// Canonical, de-duplicated labels of a record, temperature included when the
/// dictionary keeps a temperature category.
std::vector<std::string> record_labels(const RawRecord &record,
                                       const ConditionDictionary &dict);

TargetVector encode_targets(const RawRecord &record, const ConditionDictionary &dict);
/// Per category, the labels whose bits are set (null included).
std::vector<std::vector<std::string>> decode_targets(const TargetVector &targets,
                                                     const ConditionDictionary &dict);

struct FilterRule {
  enum class Kind {
    kRequireYield,
    kRequireSolvent,
    kRequireStructures,
    kMaxReactants,
    kMaxReagents,
    kMaxSolvents,
  };

  Kind kind = Kind::kRequireYield;
  std::size_t limit = 0;

  /// "require-yield", "max-reactants=2", ...
  static FilterRule parse(std::string_view text);
  std::string name() const;
};

struct FilterContext {
  const RoleMap *roles = nullptr;
  const AliasMap *aliases = nullptr;
  std::string solvent_category = "solvent";
};

struct FilterResult {
  std::vector<RawRecord> kept;
  // Per rule, records removed by it. A record failing several rules is
  // charged to the first one in rule order.
  std::vector<std::pair<std::string, std::size_t>> removed;
};

FilterResult filter_records(std::span<const RawRecord> records,
                            std::span<const FilterRule> rules,
                            const FilterContext &context = { });

}  // namespace rxncond

#endif  // RXNCOND_DICTIONARY_HPP_
