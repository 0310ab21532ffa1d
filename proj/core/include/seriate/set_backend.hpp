#pragma once

#include "seriate/backend.hpp"

namespace seriate {

// Sets of distinct categorical symbols.  Serializations are the n!
// permutations of the element symbols followed by eos; the state is the
// order-normalized multiset of emitted symbols.
class SetBackend : public StructureBackend {
public:
  explicit SetBackend(std::vector<std::string> universe);

  StructureKind kind() const override { return StructureKind::Set; }
  const Alphabet& alphabet() const override { return alphabet_; }
  StateKey initial_state() const override;
  StateKey transition_impl(const StateKey& state,
                           const LexiconElement& element) const override;
  StructureInstance deserialize(const Serialization& a) const override;
  std::vector<Serialization> enumerate_serializations(
      const StructureInstance& x, std::uint64_t bound) const override;
  double count_serializations(const StructureInstance& x) const override;
  std::vector<LexiconElement> candidate_next_elements(
      const StructureInstance& x, const StateKey& state,
      std::span<const LexiconElement> prefix) const override;

private:
  Alphabet alphabet_;
};

}  // namespace seriate
