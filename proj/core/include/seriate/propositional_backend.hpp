#pragma once

#include <map>
#include <set>

#include "seriate/backend.hpp"

namespace seriate {

// Tabular records.  A numeric feature serializes as one value-carrying
// element (its name symbol with the value); a categorical feature and the
// class label serialize as a pair of value-free elements: the name symbol,
// then the value/class symbol.  The state is the set of completed
// (name, value) couples plus the pending name of a half-emitted pair.
//
// Feature names, categorical values, the label name and the class names all
// share one symbol namespace and must be globally unique.
class PropositionalBackend : public StructureBackend {
public:
  PropositionalBackend(std::vector<std::string> numeric_names,
                       std::map<std::string, std::set<std::string>> categorical_domains,
                       std::vector<std::string> label_classes,
                       std::string label_name = "label");

  StructureKind kind() const override { return StructureKind::Propositional; }
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

  std::vector<SymbolId> front_symbols() const override;
  std::vector<SymbolId> droppable_feature_symbols() const override;
  StructureInstance drop_features(const StructureInstance& x,
                                  const std::vector<SymbolId>& dropped) const override;

  const std::string& label_name() const { return label_name_; }
  bool has_label_classes() const { return !label_classes_.empty(); }

private:
  const PropositionalInstance& get_record(const StructureInstance& x) const;
  bool is_numeric_name(SymbolId sym) const { return numeric_syms_.contains(sym); }

  std::vector<std::string> numeric_names_;
  std::map<std::string, std::set<std::string>> categorical_domains_;
  std::vector<std::string> label_classes_;
  std::string label_name_;
  Alphabet alphabet_;
  std::set<SymbolId> numeric_syms_;
  std::set<SymbolId> categorical_name_syms_;
  SymbolId label_sym_ = 0;
  bool has_label_ = false;
  std::map<SymbolId, std::set<SymbolId>> domain_syms_;  // name sym -> value syms
};

}  // namespace seriate
