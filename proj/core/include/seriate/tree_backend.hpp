#pragma once

#include "seriate/backend.hpp"

namespace seriate {

// Root-labeled trees, serialized by depth-first traversal with the grammar
//
//   node  := label [ "(" node+ ")" ]
//   whole := node eos
//
// so leaves omit the parenthesis pair.  Ordered trees have a single
// serialization; unordered trees admit any sibling order, and identical
// sibling subtrees collapse to the same sequence (the fiber holds distinct
// sequences only).
//
// The state tracks, per open level, the parent label, the canonical
// encodings of completed sibling subtrees (sorted when unordered), and the
// pending node label whose subtree has not started yet.
class TreeBackend : public StructureBackend {
public:
  TreeBackend(std::vector<std::string> labels, bool ordered);

  StructureKind kind() const override {
    return ordered_ ? StructureKind::OrderedTree : StructureKind::UnorderedTree;
  }
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

  SymbolId open_symbol() const { return open_; }
  SymbolId close_symbol() const { return close_; }

  // Canonical byte encoding of a subtree (children sorted when unordered).
  std::string encode_subtree(const TreeNode& node) const;

private:
  const TreeInstance& get_tree(const StructureInstance& x) const;

  Alphabet alphabet_;
  bool ordered_;
  SymbolId open_ = 0;
  SymbolId close_ = 0;
};

}  // namespace seriate
