#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "seriate/backend.hpp"

namespace seriate {

// Everything needed to rebuild a backend: the structure kind plus its
// kind-specific symbol schema.
struct BackendSchema {
  StructureKind kind = StructureKind::Set;
  std::vector<std::string> set_universe;
  std::vector<std::string> tree_labels;
  std::vector<std::string> series_variables;
  std::vector<std::string> series_features;
  std::vector<std::string> numeric_names;
  std::map<std::string, std::set<std::string>> categorical_domains;
  std::vector<std::string> label_classes;
  std::string label_name = "label";
};

std::unique_ptr<StructureBackend> make_backend(const BackendSchema& schema);

// Scans a dataset and derives the minimal schema covering it.
BackendSchema derive_schema(const Dataset& data);

std::string schema_to_json(const BackendSchema& schema);
BackendSchema schema_from_json(const std::string& text);

// JSON-lines instance files, one instance per line:
//   {"kind":"set","elements":[...]}
//   {"kind":"tree","ordered":false,"label":"A","children":[...]}
//   {"kind":"series","features":{...},"variables":[...],"values":[[...],...]}
//   {"kind":"propositional","numeric":{...},"categorical":{...},"label":"c"}
// Non-propositional kinds take an optional "label" for discriminative
// targets.  Parse errors report 1-based line numbers.
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

std::string instance_to_json_line(const DatasetEntry& entry);
DatasetEntry instance_from_json_line(const std::string& line);

// Serialized corpora: {"instance_id":N,"elements":[{"sym":...,"val":...}],
// "step_log_probs":[...]} per line.
struct CorpusRecord {
  std::size_t instance_id = 0;
  Serialization serialization;
};

void write_corpus(const std::filesystem::path& path,
                  std::span<const CorpusRecord> corpus, const Alphabet& alphabet);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path,
                                      const Alphabet& alphabet);

// Write-temp-then-rename; the only write primitive the CLI uses.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// 17-significant-digit formatting; round-trips doubles exactly.
std::string format_double(double v);

}  // namespace seriate
