//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/dictionary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "rxncond/csv.hpp"
#include "rxncond/error.hpp"

namespace rxncond {
namespace {

using nlohmann::json;

constexpr std::string_view kRequiredColumns[] = { "reactant_smiles",
                                                  "product_smiles", "conditions" };
constexpr std::string_view kOptionalColumns[] = { "yield", "temperature" };

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr)
      != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

bool by_frequency(const LabelCount &a, const LabelCount &b) {
  if (a.frequency != b.frequency)
    return a.frequency > b.frequency;
  return a.label < b.label;
}

// Keeps the most frequent labels until the cumulative share first reaches
// `coverage`; the label that crosses the threshold is kept.
std::size_t coverage_cut(const std::vector<LabelCount> &sorted, double coverage) {
  std::size_t total = 0;
  for (const auto &lc: sorted)
    total += lc.frequency;
  if (total == 0)
    return 0;
  std::size_t cumulative = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i].frequency;
    if (static_cast<double>(cumulative) / static_cast<double>(total) >= coverage)
      return i + 1;
  }
  return sorted.size();
}

std::vector<std::pair<std::size_t, std::string>> read_tsv_lines(std::istream &in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#')
      continue;
    out.emplace_back(number, line);
  }
  return out;
}

}  // namespace

/* Records */

void dedupe_conditions(RawRecord &record) {
  std::set<std::string> seen;
  std::vector<std::string> unique;
  for (auto &c: record.conditions) {
    if (seen.insert(c).second)
      unique.push_back(std::move(c));
  }
  record.conditions = std::move(unique);
}

std::vector<RawRecord> read_records_csv(std::istream &in) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty())
    throw ValidationError("line 1: missing CSV header");

  const CsvRow &header = rows.front();
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    const std::string name = trim(header.fields[i]);
    const bool known =
        std::find(std::begin(kRequiredColumns), std::end(kRequiredColumns), name)
            != std::end(kRequiredColumns)
        || std::find(std::begin(kOptionalColumns), std::end(kOptionalColumns), name)
               != std::end(kOptionalColumns);
    if (!known) {
      throw ValidationError("line " + std::to_string(header.line)
                            + ": unknown column '" + name + "'");
    }
    if (!column.emplace(name, i).second) {
      throw ValidationError("line " + std::to_string(header.line)
                            + ": duplicate column '" + name + "'");
    }
  }
  for (std::string_view req: kRequiredColumns) {
    if (!column.contains(std::string(req))) {
      throw ValidationError("line " + std::to_string(header.line)
                            + ": missing column '" + std::string(req) + "'");
    }
  }

  std::vector<RawRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow &row = rows[r];
    const std::string where = "line " + std::to_string(row.line) + ": ";
    if (row.fields.size() != header.fields.size()) {
      throw ValidationError(where + "expected " + std::to_string(header.fields.size())
                            + " fields, found " + std::to_string(row.fields.size()));
    }
    auto field = [&](std::string_view name) -> std::string {
      auto it = column.find(std::string(name));
      return it == column.end() ? std::string() : trim(row.fields[it->second]);
    };

    RawRecord rec;
    rec.reactants = split_list(field("reactant_smiles"), ';');
    rec.product = field("product_smiles");
    rec.conditions = split_list(field("conditions"), ';');
    const std::string yield = field("yield");
    if (!yield.empty()) {
      double value = 0;
      const auto [ptr, ec] =
          std::from_chars(yield.data(), yield.data() + yield.size(), value);
      if (ec != std::errc() || ptr != yield.data() + yield.size()
          || !std::isfinite(value)) {
        throw ValidationError(where + "yield '" + yield + "' is not a number");
      }
      if (value < 0 || value > 100)
        throw ValidationError(where + "yield " + yield + " outside 0-100");
      rec.yield = value;
    }
    const std::string temperature = field("temperature");
    if (!temperature.empty())
      rec.temperature = temperature;
    dedupe_conditions(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records_csv(std::ostream &out, std::span<const RawRecord> records) {
  write_csv_row(out, { "reactant_smiles", "product_smiles", "conditions", "yield",
                       "temperature" });
  for (const RawRecord &r: records) {
    std::string reactants, conditions;
    for (std::size_t i = 0; i < r.reactants.size(); ++i)
      reactants += (i ? ";" : "") + r.reactants[i];
    for (std::size_t i = 0; i < r.conditions.size(); ++i)
      conditions += (i ? ";" : "") + r.conditions[i];
    std::string yield;
    if (r.yield) {
      std::ostringstream os;
      os << *r.yield;
      yield = os.str();
    }
    write_csv_row(out, { reactants, r.product, conditions, yield,
                         r.temperature.value_or("") });
  }
}

/* Role and alias maps */

void RoleMap::assign(const std::string &label,
                     const std::vector<std::string> &categories) {
  auto &dst = roles_[label];
  for (const std::string &c: categories) {
    if (std::find(dst.begin(), dst.end(), c) == dst.end())
      dst.push_back(c);
    if (std::find(order_.begin(), order_.end(), c) == order_.end())
      order_.push_back(c);
  }
}

const std::vector<std::string> *RoleMap::categories_for(const std::string &label) const {
  auto it = roles_.find(label);
  return it == roles_.end() ? nullptr : &it->second;
}

RoleMap read_role_map(std::istream &in) {
  RoleMap roles;
  for (const auto &[number, line]: read_tsv_lines(in)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("role map line " + std::to_string(number)
                            + ": expected label<TAB>categories");
    }
    const std::string label = trim(std::string_view(line).substr(0, tab));
    const auto categories = split_list(std::string_view(line).substr(tab + 1), ',');
    if (label.empty() || categories.empty()) {
      throw ValidationError("role map line " + std::to_string(number)
                            + ": empty label or category list");
    }
    roles.assign(label, categories);
  }
  return roles;
}

AliasMap read_alias_map(std::istream &in) {
  AliasMap aliases;
  for (const auto &[number, line]: read_tsv_lines(in)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("alias map line " + std::to_string(number)
                            + ": expected variant<TAB>canonical");
    }
    const std::string variant = trim(std::string_view(line).substr(0, tab));
    const std::string canonical = trim(std::string_view(line).substr(tab + 1));
    if (variant.empty() || canonical.empty()) {
      throw ValidationError("alias map line " + std::to_string(number)
                            + ": empty variant or canonical label");
    }
    aliases[variant] = canonical;
  }
  return aliases;
}

/* ConditionDictionary */

ConditionDictionary::ConditionDictionary(std::vector<Category> categories,
                                         AliasMap aliases, BuildOptions options)
    : categories_(std::move(categories)), aliases_(std::move(aliases)),
      options_(std::move(options)) {
  index();
}

void ConditionDictionary::index() {
  offsets_.clear();
  by_label_.clear();
  total_ = 0;
  for (const Category &c: categories_) {
    offsets_.push_back(total_);
    for (std::size_t b = 0; b < c.bins.size(); ++b)
      by_label_[c.bins[b].label].push_back(total_ + b);
    total_ += c.size();
  }
}

std::pair<std::size_t, std::size_t> ConditionDictionary::locate(std::size_t bin) const {
  if (bin >= total_)
    throw UsageError("bin index " + std::to_string(bin) + " out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), bin);
  const std::size_t c = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return { c, bin - offsets_[c] };
}

std::string_view ConditionDictionary::label(std::size_t bin) const {
  const auto [c, local] = locate(bin);
  const Category &cat = categories_[c];
  return local < cat.bins.size() ? std::string_view(cat.bins[local].label)
                                 : kNullLabel;
}

std::vector<std::size_t> ConditionDictionary::bins_for(const std::string &label) const {
  auto it = by_label_.find(label);
  return it == by_label_.end() ? std::vector<std::size_t> { } : it->second;
}

std::optional<std::size_t> ConditionDictionary::category_index(std::string_view name) const {
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    if (categories_[c].name == name)
      return c;
  }
  return std::nullopt;
}

std::string ConditionDictionary::canonical(const std::string &label) const {
  auto it = aliases_.find(label);
  return it == aliases_.end() ? label : it->second;
}

std::string ConditionDictionary::to_json() const {
  json doc;
  doc["format"] = "rxncond-dictionary";
  doc["format_version"] = kFormatVersion;
  doc["coverage"] = options_.coverage;
  doc["temperature_category"] = options_.temperature_category
                                    ? json(*options_.temperature_category)
                                    : json(nullptr);
  doc["default_temperature"] = options_.default_temperature;
  doc["aliases"] = json::object();
  for (const auto &[variant, canonical]: aliases_)
    doc["aliases"][variant] = canonical;
  json cats = json::array();
  for (const Category &c: categories_) {
    json bins = json::array();
    for (const Bin &b: c.bins)
      bins.push_back({ { "label", b.label }, { "frequency", b.frequency } });
    cats.push_back({ { "name", c.name },
                     { "bins", std::move(bins) },
                     { "null_frequency", c.null_frequency } });
  }
  doc["categories"] = std::move(cats);
  return doc.dump(2) + "\n";
}

ConditionDictionary ConditionDictionary::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "rxncond-dictionary")
      throw ConfigError("not a condition dictionary document");
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw ConfigError("unsupported dictionary format_version "
                        + std::to_string(version));
    }
    BuildOptions options;
    options.coverage = doc.at("coverage").get<double>();
    if (!doc.at("temperature_category").is_null())
      options.temperature_category = doc["temperature_category"].get<std::string>();
    options.default_temperature = doc.at("default_temperature").get<std::string>();
    AliasMap aliases = doc.at("aliases").get<AliasMap>();
    std::vector<Category> categories;
    for (const json &c: doc.at("categories")) {
      Category cat;
      cat.name = c.at("name").get<std::string>();
      cat.null_frequency = c.at("null_frequency").get<std::size_t>();
      for (const json &b: c.at("bins"))
        cat.bins.push_back(Bin { b.at("label").get<std::string>(),
                                 b.at("frequency").get<std::size_t>() });
      categories.push_back(std::move(cat));
    }
    return ConditionDictionary(std::move(categories), std::move(aliases),
                               std::move(options));
  } catch (const json::exception &e) {
    throw ConfigError(std::string("malformed dictionary JSON: ") + e.what());
  }
}

std::string ConditionDictionary::digest() const {
  return sha256_hex(to_json());
}

/* Build */

std::vector<std::string> record_labels(const RawRecord &record,
                                       const ConditionDictionary &dict) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const std::string &c: record.conditions) {
    std::string canon = dict.canonical(c);
    if (seen.insert(canon).second)
      labels.push_back(std::move(canon));
  }
  if (dict.options().temperature_category) {
    std::string t = record.temperature.value_or(dict.options().default_temperature);
    if (seen.insert(t).second)
      labels.push_back(std::move(t));
  }
  return labels;
}

ConditionDictionary build_dictionary(std::span<const RawRecord> records,
                                     const RoleMap &roles, const AliasMap &aliases,
                                     const BuildOptions &options, BuildReport *report) {
  if (!(options.coverage > 0.0 && options.coverage <= 1.0)) {
    throw ValidationError("coverage must lie in (0, 1], got "
                          + std::to_string(options.coverage));
  }
  if (records.empty())
    throw ValidationError("cannot build a dictionary from zero records");

  // Pool canonical labels. Temperatures form their own pool so that a
  // temperature string never collides with a reagent name.
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::size_t> temperature_counts;
  auto canonical = [&](const std::string &label) {
    auto it = aliases.find(label);
    return it == aliases.end() ? label : it->second;
  };
  for (const RawRecord &r: records) {
    std::set<std::string> seen;
    for (const std::string &c: r.conditions) {
      std::string canon = canonical(c);
      if (seen.insert(canon).second)
        ++counts[canon];
    }
    if (options.temperature_category)
      ++temperature_counts[r.temperature.value_or(options.default_temperature)];
  }

  struct Pooled {
    LabelCount count;
    bool temperature;
  };
  std::vector<Pooled> pooled;
  for (const auto &[label, n]: counts)
    pooled.push_back({ { label, n }, false });
  for (const auto &[label, n]: temperature_counts)
    pooled.push_back({ { label, n }, true });
  std::stable_sort(pooled.begin(), pooled.end(), [](const Pooled &a, const Pooled &b) {
    if (by_frequency(a.count, b.count) != by_frequency(b.count, a.count))
      return by_frequency(a.count, b.count);
    return !a.temperature && b.temperature;
  });

  std::vector<LabelCount> sorted;
  for (const auto &p: pooled)
    sorted.push_back(p.count);
  const std::size_t keep = coverage_cut(sorted, options.coverage);

  BuildReport rep;
  rep.pooled = sorted;
  for (const auto &lc: sorted)
    rep.total_instances += lc.frequency;

  // Category order: role map order, then the temperature category.
  std::vector<std::string> order = roles.category_order();
  if (options.temperature_category
      && std::find(order.begin(), order.end(), *options.temperature_category)
             == order.end()) {
    order.push_back(*options.temperature_category);
  }
  std::map<std::string, std::vector<LabelCount>> assigned;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const Pooled &p = pooled[i];
    if (i >= keep) {
      rep.dropped.push_back(p.count);
      continue;
    }
    rep.kept_instances += p.count.frequency;
    if (p.temperature) {
      assigned[*options.temperature_category].push_back(p.count);
      continue;
    }
    const auto *cats = roles.categories_for(p.count.label);
    if (cats == nullptr) {
      rep.unmapped.push_back(p.count);
      continue;
    }
    for (const std::string &c: *cats)
      assigned[c].push_back(p.count);
  }

  std::vector<Category> categories;
  for (const std::string &name: order) {
    std::vector<LabelCount> labels = assigned[name];
    std::sort(labels.begin(), labels.end(), by_frequency);
    const std::size_t cut = coverage_cut(labels, options.coverage);
    CategoryReport crep;
    crep.name = name;
    Category cat;
    cat.name = name;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      crep.total += labels[i].frequency;
      if (i < cut) {
        crep.kept += labels[i].frequency;
        cat.bins.push_back(Bin { labels[i].label, labels[i].frequency });
      } else {
        crep.dropped.push_back(labels[i]);
      }
    }
    rep.categories.push_back(std::move(crep));
    categories.push_back(std::move(cat));
  }

  ConditionDictionary draft(categories, aliases, options);
  std::vector<std::size_t> nulls(categories.size(), 0);
  for (const RawRecord &r: records) {
    const TargetVector t = encode_targets(r, draft);
    for (std::size_t c = 0; c < categories.size(); ++c)
      nulls[c] += t[draft.null_index(c)];
  }
  for (std::size_t c = 0; c < categories.size(); ++c)
    categories[c].null_frequency = nulls[c];

  if (report != nullptr)
    *report = std::move(rep);
  return ConditionDictionary(std::move(categories), aliases, options);
}

TargetVector encode_targets(const RawRecord &record, const ConditionDictionary &dict) {
  TargetVector t(dict.total_bins(), 0);
  const std::size_t none = dict.num_categories();
  const std::size_t temp_cat = dict.options().temperature_category
      ? dict.category_index(*dict.options().temperature_category).value_or(none)
      : none;

  auto set_bins = [&](const std::string &label, bool temperature) {
    for (std::size_t bin: dict.bins_for(label)) {
      const std::size_t c = dict.locate(bin).first;
      const bool in_temp = c == temp_cat;
      if (in_temp == temperature)
        t[bin] = 1;
    }
  };

  std::set<std::string> seen;
  for (const std::string &c: record.conditions) {
    std::string canon = dict.canonical(c);
    if (seen.insert(canon).second)
      set_bins(canon, false);
  }
  if (temp_cat != none)
    set_bins(record.temperature.value_or(dict.options().default_temperature), true);

  for (std::size_t c = 0; c < dict.num_categories(); ++c) {
    const std::size_t begin = dict.category_offset(c);
    const std::size_t null_bin = dict.null_index(c);
    bool any = false;
    for (std::size_t b = begin; b < null_bin; ++b)
      any = any || t[b] != 0;
    if (!any)
      t[null_bin] = 1;
  }
  return t;
}

std::vector<std::vector<std::string>> decode_targets(const TargetVector &targets,
                                                     const ConditionDictionary &dict) {
  if (targets.size() != dict.total_bins()) {
    throw DimensionError("target vector of length " + std::to_string(targets.size())
                         + " for a dictionary of " + std::to_string(dict.total_bins())
                         + " bins");
  }
  std::vector<std::vector<std::string>> out(dict.num_categories());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    if (targets[b] != 0)
      out[dict.locate(b).first].emplace_back(dict.label(b));
  }
  return out;
}

/* Filters */

FilterRule FilterRule::parse(std::string_view text) {
  const auto eq = text.find('=');
  const std::string name(text.substr(0, eq));
  FilterRule rule;
  auto need_limit = [&] {
    if (eq == std::string_view::npos)
      throw ValidationError("filter '" + name + "' needs a limit, e.g. " + name + "=2");
    const std::string_view digits = text.substr(eq + 1);
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), rule.limit);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw ValidationError("filter '" + name + "': bad limit");
  };
  auto no_limit = [&] {
    if (eq != std::string_view::npos)
      throw ValidationError("filter '" + name + "' takes no limit");
  };
  if (name == "require-yield") {
    rule.kind = Kind::kRequireYield;
    no_limit();
  } else if (name == "require-solvent") {
    rule.kind = Kind::kRequireSolvent;
    no_limit();
  } else if (name == "require-structures") {
    rule.kind = Kind::kRequireStructures;
    no_limit();
  } else if (name == "max-reactants") {
    rule.kind = Kind::kMaxReactants;
    need_limit();
  } else if (name == "max-reagents") {
    rule.kind = Kind::kMaxReagents;
    need_limit();
  } else if (name == "max-solvents") {
    rule.kind = Kind::kMaxSolvents;
    need_limit();
  } else {
    throw ValidationError("unknown filter rule '" + name + "'");
  }
  return rule;
}

std::string FilterRule::name() const {
  switch (kind) {
  case Kind::kRequireYield:
    return "require-yield";
  case Kind::kRequireSolvent:
    return "require-solvent";
  case Kind::kRequireStructures:
    return "require-structures";
  case Kind::kMaxReactants:
    return "max-reactants(" + std::to_string(limit) + ")";
  case Kind::kMaxReagents:
    return "max-reagents(" + std::to_string(limit) + ")";
  case Kind::kMaxSolvents:
    return "max-solvents(" + std::to_string(limit) + ")";
  }
  return "?";
}

FilterResult filter_records(std::span<const RawRecord> records,
                            std::span<const FilterRule> rules,
                            const FilterContext &context) {
  FilterResult result;
  for (const FilterRule &r: rules)
    result.removed.emplace_back(r.name(), 0);

  auto is_solvent = [&](const std::string &label) {
    if (context.roles == nullptr)
      return false;
    std::string canon = label;
    if (context.aliases != nullptr) {
      auto it = context.aliases->find(label);
      if (it != context.aliases->end())
        canon = it->second;
    }
    const auto *cats = context.roles->categories_for(canon);
    return cats != nullptr
           && std::find(cats->begin(), cats->end(), context.solvent_category)
                  != cats->end();
  };

  for (const RawRecord &rec: records) {
    std::size_t solvents = 0;
    for (const std::string &c: rec.conditions)
      solvents += is_solvent(c) ? 1 : 0;
    const std::size_t reagents = rec.conditions.size() - solvents;

    std::optional<std::size_t> failed;
    for (std::size_t i = 0; i < rules.size() && !failed; ++i) {
      const FilterRule &rule = rules[i];
      bool ok = true;
      switch (rule.kind) {
      case FilterRule::Kind::kRequireYield:
        ok = rec.yield.has_value();
        break;
      case FilterRule::Kind::kRequireSolvent:
        ok = solvents > 0;
        break;
      case FilterRule::Kind::kRequireStructures:
        ok = !rec.reactants.empty() && !rec.product.empty()
             && std::none_of(rec.reactants.begin(), rec.reactants.end(),
                             [](const std::string &s) { return s.empty(); });
        break;
      case FilterRule::Kind::kMaxReactants:
        ok = rec.reactants.size() <= rule.limit;
        break;
      case FilterRule::Kind::kMaxReagents:
        ok = reagents <= rule.limit;
        break;
      case FilterRule::Kind::kMaxSolvents:
        ok = solvents <= rule.limit;
        break;
      }
      if (!ok)
        failed = i;
    }
    if (failed)
      ++result.removed[*failed].second;
    else
      result.kept.push_back(rec);
  }
  return result;
}

}  // namespace rxncond
