#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seriate/backend.hpp"

namespace seriate {

// Sparse binary relation over a batch of serializations: (j, k, t) with
// j < k means serializations j and k replay to equal StateKeys at step t.
// Symmetry is implicit; reflexive pairs are excluded.  Step t = 0 (the shared
// initial state) is included, so every pair appears there.
struct ConstraintEntry {
  std::uint32_t j = 0;
  std::uint32_t k = 0;
  std::uint32_t t = 0;
  friend bool operator==(const ConstraintEntry&, const ConstraintEntry&) = default;
};

struct ConstraintMatrix {
  std::vector<ConstraintEntry> entries;  // sorted by t, then (j, k)
  std::size_t batch_size = 0;
  std::size_t max_t = 0;

  bool contains(std::uint32_t j, std::uint32_t k, std::uint32_t t) const;
};

// Groups replayed states by (t, StateKey) with a hash table — expected
// O(total elements + output size), never O(batch^2 * T) pairwise comparison.
// States are grouped across the whole batch, so serializations of different
// instances sharing substructure are constrained too.  Throws
// EntryBudgetExceeded instead of materializing more than `entry_budget`
// triples.
ConstraintMatrix build_constraint_matrix(const StructureBackend& backend,
                                         std::span<const Serialization> batch,
                                         std::uint64_t entry_budget = 50'000'000);

// JSON-lines export ({"j":…,"k":…,"t":…} per entry) for offline inspection.
void write_constraints(const std::filesystem::path& path, const ConstraintMatrix& c);

}  // namespace seriate
