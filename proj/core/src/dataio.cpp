#include "seriate/dataio.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "seriate/propositional_backend.hpp"
#include "seriate/series_backend.hpp"
#include "seriate/set_backend.hpp"
#include "seriate/tree_backend.hpp"

namespace seriate {

using nlohmann::json;

namespace {

json tree_to_json(const TreeNode& node) {
  json j;
  j["label"] = node.label;
  json children = json::array();
  for (const auto& c : node.children) children.push_back(tree_to_json(c));
  j["children"] = std::move(children);
  return j;
}

TreeNode tree_from_json(const json& j) {
  TreeNode node;
  node.label = j.at("label").get<std::string>();
  if (j.contains("children"))
    for (const auto& c : j.at("children")) node.children.push_back(tree_from_json(c));
  return node;
}

StructureKind kind_from_string(const std::string& kind, bool ordered) {
  if (kind == "set") return StructureKind::Set;
  if (kind == "tree") return ordered ? StructureKind::OrderedTree
                                     : StructureKind::UnorderedTree;
  if (kind == "series") return StructureKind::Series;
  if (kind == "propositional") return StructureKind::Propositional;
  throw Error("unknown instance kind: " + kind);
}

}  // namespace

std::unique_ptr<StructureBackend> make_backend(const BackendSchema& schema) {
  switch (schema.kind) {
    case StructureKind::Set:
      return std::make_unique<SetBackend>(schema.set_universe);
    case StructureKind::OrderedTree:
      return std::make_unique<TreeBackend>(schema.tree_labels, true);
    case StructureKind::UnorderedTree:
      return std::make_unique<TreeBackend>(schema.tree_labels, false);
    case StructureKind::Series:
      return std::make_unique<SeriesBackend>(schema.series_variables,
                                             schema.series_features);
    case StructureKind::Propositional:
      return std::make_unique<PropositionalBackend>(
          schema.numeric_names, schema.categorical_domains, schema.label_classes,
          schema.label_name);
  }
  throw Error("unknown backend kind");
}

BackendSchema derive_schema(const Dataset& data) {
  if (data.empty()) throw Error("empty dataset");
  BackendSchema schema;
  schema.kind = static_cast<StructureKind>(0xFF);

  std::set<std::string> set_universe, tree_labels, variables, features, numerics;
  std::set<std::string> classes;
  bool variables_fixed = false;
  std::vector<std::string> first_variables;

  for (const auto& entry : data) {
    const StructureKind kind = std::visit(
        [](const auto& inst) -> StructureKind {
          using T = std::decay_t<decltype(inst)>;
          if constexpr (std::is_same_v<T, SetInstance>) return StructureKind::Set;
          if constexpr (std::is_same_v<T, TreeInstance>)
            return inst.ordered ? StructureKind::OrderedTree
                                : StructureKind::UnorderedTree;
          if constexpr (std::is_same_v<T, SeriesInstance>) return StructureKind::Series;
          return StructureKind::Propositional;
        },
        entry.instance);
    if (schema.kind == static_cast<StructureKind>(0xFF)) {
      schema.kind = kind;
    } else if (schema.kind != kind) {
      throw Error("dataset mixes structure kinds");
    }

    if (entry.label) classes.insert(*entry.label);
    if (const auto* set = std::get_if<SetInstance>(&entry.instance)) {
      set_universe.insert(set->elements.begin(), set->elements.end());
    } else if (const auto* tree = std::get_if<TreeInstance>(&entry.instance)) {
      const auto walk = [&](const TreeNode& n, const auto& self) -> void {
        tree_labels.insert(n.label);
        for (const auto& c : n.children) self(c, self);
      };
      walk(tree->root, walk);
    } else if (const auto* series = std::get_if<SeriesInstance>(&entry.instance)) {
      series->validate();
      if (!variables_fixed) {
        first_variables = series->variables;
        variables_fixed = true;
      } else if (series->variables != first_variables) {
        throw Error("series instances disagree on variable names");
      }
      for (const auto& [name, v] : series->input_features) features.insert(name);
    } else if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance)) {
      for (const auto& [name, v] : record->numeric_features) numerics.insert(name);
      for (const auto& [name, v] : record->categorical_features)
        schema.categorical_domains[name].insert(v);
      if (record->label) classes.insert(*record->label);
    }
  }

  schema.set_universe.assign(set_universe.begin(), set_universe.end());
  schema.tree_labels.assign(tree_labels.begin(), tree_labels.end());
  schema.series_variables = first_variables;
  schema.series_features.assign(features.begin(), features.end());
  schema.numeric_names.assign(numerics.begin(), numerics.end());
  schema.label_classes.assign(classes.begin(), classes.end());
  return schema;
}

std::string schema_to_json(const BackendSchema& schema) {
  json j;
  switch (schema.kind) {
    case StructureKind::Set:
      j["kind"] = "set";
      j["universe"] = schema.set_universe;
      break;
    case StructureKind::OrderedTree:
    case StructureKind::UnorderedTree:
      j["kind"] = "tree";
      j["ordered"] = schema.kind == StructureKind::OrderedTree;
      j["labels"] = schema.tree_labels;
      break;
    case StructureKind::Series:
      j["kind"] = "series";
      j["variables"] = schema.series_variables;
      j["features"] = schema.series_features;
      break;
    case StructureKind::Propositional:
      j["kind"] = "propositional";
      j["numeric"] = schema.numeric_names;
      j["categorical"] = schema.categorical_domains;
      j["label_name"] = schema.label_name;
      break;
  }
  // Discriminative targets exist for every kind.
  if (!schema.label_classes.empty()) j["classes"] = schema.label_classes;
  return j.dump();
}

BackendSchema schema_from_json(const std::string& text) {
  const json j = json::parse(text);
  BackendSchema schema;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "set") {
    schema.kind = StructureKind::Set;
    schema.set_universe = j.at("universe").get<std::vector<std::string>>();
  } else if (kind == "tree") {
    schema.kind = j.at("ordered").get<bool>() ? StructureKind::OrderedTree
                                              : StructureKind::UnorderedTree;
    schema.tree_labels = j.at("labels").get<std::vector<std::string>>();
  } else if (kind == "series") {
    schema.kind = StructureKind::Series;
    schema.series_variables = j.at("variables").get<std::vector<std::string>>();
    schema.series_features = j.at("features").get<std::vector<std::string>>();
  } else if (kind == "propositional") {
    schema.kind = StructureKind::Propositional;
    schema.numeric_names = j.at("numeric").get<std::vector<std::string>>();
    schema.categorical_domains =
        j.at("categorical").get<std::map<std::string, std::set<std::string>>>();
    schema.label_name = j.at("label_name").get<std::string>();
  } else {
    throw Error("unknown schema kind: " + kind);
  }
  if (j.contains("classes"))
    schema.label_classes = j.at("classes").get<std::vector<std::string>>();
  return schema;
}

std::string instance_to_json_line(const DatasetEntry& entry) {
  json j;
  if (const auto* set = std::get_if<SetInstance>(&entry.instance)) {
    j["kind"] = "set";
    j["elements"] = set->elements;
  } else if (const auto* tree = std::get_if<TreeInstance>(&entry.instance)) {
    j = tree_to_json(tree->root);
    j["kind"] = "tree";
    j["ordered"] = tree->ordered;
  } else if (const auto* series = std::get_if<SeriesInstance>(&entry.instance)) {
    j["kind"] = "series";
    j["features"] = series->input_features;
    j["variables"] = series->variables;
    j["values"] = series->values;
  } else if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance)) {
    j["kind"] = "propositional";
    j["numeric"] = record->numeric_features;
    j["categorical"] = record->categorical_features;
    if (record->label) j["label"] = *record->label;
  }
  // Tree lines already use "label" for the root node, so discriminative
  // targets of non-propositional kinds travel under "target".
  if (entry.label && !std::holds_alternative<PropositionalInstance>(entry.instance))
    j["target"] = *entry.label;
  return j.dump();
}

DatasetEntry instance_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw Error("instance line is not a JSON object");
  DatasetEntry entry;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "set") {
    entry.instance = SetInstance::of(j.at("elements").get<std::vector<std::string>>());
  } else if (kind == "tree") {
    TreeInstance tree;
    tree.ordered = j.value("ordered", false);
    tree.root = tree_from_json(j);
    if (!tree.ordered) {
      // Canonical child order, consistent with TreeBackend::deserialize.
      std::set<std::string> labels;
      const auto walk = [&](const TreeNode& n, const auto& self) -> void {
        labels.insert(n.label);
        for (const auto& c : n.children) self(c, self);
      };
      walk(tree.root, walk);
      const TreeBackend canon({labels.begin(), labels.end()}, false);
      const auto sort_rec = [&](TreeNode& node, const auto& self) -> void {
        for (auto& ch : node.children) self(ch, self);
        std::stable_sort(node.children.begin(), node.children.end(),
                         [&](const TreeNode& a, const TreeNode& b) {
                           return canon.encode_subtree(a) < canon.encode_subtree(b);
                         });
      };
      sort_rec(tree.root, sort_rec);
    }
    entry.instance = std::move(tree);
  } else if (kind == "series") {
    SeriesInstance series;
    if (j.contains("features"))
      series.input_features = j.at("features").get<std::map<std::string, double>>();
    series.variables = j.at("variables").get<std::vector<std::string>>();
    series.values = j.at("values").get<std::vector<std::vector<double>>>();
    series.validate();
    entry.instance = std::move(series);
  } else if (kind == "propositional") {
    PropositionalInstance record;
    if (j.contains("numeric"))
      record.numeric_features = j.at("numeric").get<std::map<std::string, double>>();
    if (j.contains("categorical"))
      record.categorical_features =
          j.at("categorical").get<std::map<std::string, std::string>>();
    if (j.contains("label")) record.label = j.at("label").get<std::string>();
    entry.label = record.label;
    entry.instance = std::move(record);
  } else {
    throw Error("unknown instance kind: " + kind);
  }
  if (kind != "propositional" && j.contains("target"))
    entry.label = j.at("target").get<std::string>();
  return entry;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path.string());
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      data.push_back(instance_from_json_line(line));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::string out;
  for (const auto& entry : data) {
    out += instance_to_json_line(entry);
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_corpus(const std::filesystem::path& path,
                  std::span<const CorpusRecord> corpus, const Alphabet& alphabet) {
  std::string out;
  for (const auto& record : corpus) {
    json j;
    j["instance_id"] = record.instance_id;
    json elements = json::array();
    for (const auto& e : record.serialization.elements) {
      json je;
      je["sym"] = alphabet.name(e.symbol);
      if (e.value) je["val"] = *e.value;
      elements.push_back(std::move(je));
    }
    j["elements"] = std::move(elements);
    if (record.serialization.step_log_probs)
      j["step_log_probs"] = *record.serialization.step_log_probs;
    out += j.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path,
                                      const Alphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path.string());
  std::vector<CorpusRecord> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CorpusRecord record;
      record.instance_id = j.at("instance_id").get<std::size_t>();
      for (const auto& je : j.at("elements")) {
        const SymbolId sym = alphabet.id(je.at("sym").get<std::string>());
        if (je.contains("val"))
          record.serialization.elements.push_back(
              LexiconElement::valued(sym, je.at("val").get<double>()));
        else
          record.serialization.elements.push_back(LexiconElement::categorical(sym));
      }
      if (j.contains("step_log_probs"))
        record.serialization.step_log_probs =
            j.at("step_log_probs").get<std::vector<double>>();
      corpus.push_back(std::move(record));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace seriate
