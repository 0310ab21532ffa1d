#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seriate/errors.hpp"

namespace seriate {

// Finite set of distinct categorical symbols.
struct SetInstance {
  std::vector<std::string> elements;  // kept sorted, no duplicates

  static SetInstance of(std::vector<std::string> elems);
  friend bool operator==(const SetInstance&, const SetInstance&) = default;
};

struct TreeNode {
  std::string label;
  std::vector<TreeNode> children;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Root-labeled tree; `ordered` says whether sibling order is significant.
struct TreeInstance {
  TreeNode root;
  bool ordered = false;
  std::size_t node_count() const;
  friend bool operator==(const TreeInstance&, const TreeInstance&) = default;
};

// Multivariate series: optional named input features x and a k-by-l output
// matrix Y with named rows (variables) and l time columns.
struct SeriesInstance {
  std::map<std::string, double> input_features;
  std::vector<std::string> variables;            // k names, distinct
  std::vector<std::vector<double>> values;       // row-major, variables x time

  std::size_t num_steps() const { return values.empty() ? 0 : values.front().size(); }
  void validate() const;
  friend bool operator==(const SeriesInstance&, const SeriesInstance&) = default;
};

// Tabular record: numeric and categorical features plus an optional class
// label.  Names must be globally unique across all three namespaces.
struct PropositionalInstance {
  std::map<std::string, double> numeric_features;
  std::map<std::string, std::string> categorical_features;
  std::optional<std::string> label;
  friend bool operator==(const PropositionalInstance&, const PropositionalInstance&) = default;
};

using StructureInstance =
    std::variant<SetInstance, TreeInstance, SeriesInstance, PropositionalInstance>;

// A dataset row: the instance plus an optional discriminative target.
struct DatasetEntry {
  StructureInstance instance;
  std::optional<std::string> label;
};

using Dataset = std::vector<DatasetEntry>;

}  // namespace seriate
