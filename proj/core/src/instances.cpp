#include "seriate/instances.hpp"

#include <algorithm>
#include <cmath>

namespace seriate {

SetInstance SetInstance::of(std::vector<std::string> elems) {
  std::sort(elems.begin(), elems.end());
  const auto dup = std::adjacent_find(elems.begin(), elems.end());
  if (dup != elems.end()) throw Error("set contains duplicate element: " + *dup);
  return SetInstance{std::move(elems)};
}

std::size_t TreeInstance::node_count() const {
  std::size_t n = 0;
  const auto walk = [&](const TreeNode& node, const auto& self) -> void {
    ++n;
    for (const auto& child : node.children) self(child, self);
  };
  walk(root, walk);
  return n;
}

void SeriesInstance::validate() const {
  if (variables.empty()) throw Error("series needs at least one variable");
  if (values.size() != variables.size())
    throw Error("series value matrix row count differs from variable count");
  for (std::size_t i = 0; i + 1 < variables.size(); ++i)
    for (std::size_t j = i + 1; j < variables.size(); ++j)
      if (variables[i] == variables[j]) throw DuplicateName(variables[i]);
  const std::size_t l = values.front().size();
  if (l < 1) throw Error("series needs at least one time step");
  for (const auto& row : values) {
    if (row.size() != l) throw Error("ragged series value matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw Error("non-finite series value");
  }
  for (const auto& [name, v] : input_features)
    if (!std::isfinite(v)) throw Error("non-finite input feature " + name);
}

}  // namespace seriate
