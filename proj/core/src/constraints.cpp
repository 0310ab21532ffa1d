#include "seriate/constraints.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

namespace seriate {

bool ConstraintMatrix::contains(std::uint32_t j, std::uint32_t k, std::uint32_t t) const {
  if (j > k) std::swap(j, k);
  const ConstraintEntry probe{j, k, t};
  const auto cmp = [](const ConstraintEntry& a, const ConstraintEntry& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  };
  return std::binary_search(entries.begin(), entries.end(), probe, cmp);
}

ConstraintMatrix build_constraint_matrix(const StructureBackend& backend,
                                         std::span<const Serialization> batch,
                                         std::uint64_t entry_budget) {
  ConstraintMatrix out;
  out.batch_size = batch.size();

  std::vector<std::vector<StateKey>> trajectories;
  trajectories.reserve(batch.size());
  for (const auto& a : batch) {
    trajectories.push_back(replay_states(backend, a));
    out.max_t = std::max(out.max_t, trajectories.back().size() - 1);
  }

  std::uint64_t total = 0;
  std::unordered_map<StateKey, std::vector<std::uint32_t>, StateKeyHash> groups;
  for (std::size_t t = 0; t <= out.max_t; ++t) {
    groups.clear();
    for (std::uint32_t j = 0; j < trajectories.size(); ++j)
      if (t < trajectories[j].size()) groups[trajectories[j][t]].push_back(j);

    for (const auto& [state, members] : groups) {
      if (members.size() < 2) continue;
      const std::uint64_t pairs = members.size() * (members.size() - 1) / 2;
      total += pairs;
      if (total > entry_budget) throw EntryBudgetExceeded(total, entry_budget);
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
          out.entries.push_back({members[a], members[b], static_cast<std::uint32_t>(t)});
    }
  }

  std::sort(out.entries.begin(), out.entries.end(),
            [](const ConstraintEntry& a, const ConstraintEntry& b) {
              if (a.t != b.t) return a.t < b.t;
              if (a.j != b.j) return a.j < b.j;
              return a.k < b.k;
            });
  return out;
}

void write_constraints(const std::filesystem::path& path, const ConstraintMatrix& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& entry : c.entries)
    out << "{\"j\":" << entry.j << ",\"k\":" << entry.k << ",\"t\":" << entry.t
        << "}\n";
}

}  // namespace seriate
