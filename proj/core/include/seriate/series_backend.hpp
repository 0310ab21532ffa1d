#pragma once

#include "seriate/backend.hpp"

namespace seriate {

// Builds {AdvanceTime} ∪ {AddTS(v)} ∪ {AddFeature(f)} ∪ {eos}; AddTS and
// AddFeature carry values, AdvanceTime and eos are value-free.
Alphabet series_alphabet(const std::vector<std::string>& variables,
                         const std::vector<std::string>& features);

// Multivariate series with named input features.  A serialization emits the
// Y matrix column by column — the k variables of a column in any order, then
// AdvanceTime — with the input features interleaved anywhere before eos.
// AdvanceTime seals a column, so within-column order never enters the state.
class SeriesBackend : public StructureBackend {
public:
  SeriesBackend(std::vector<std::string> variables, std::vector<std::string> features);

  StructureKind kind() const override { return StructureKind::Series; }
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
  StructureInstance drop_features(const StructureInstance& x,
                                  const std::vector<SymbolId>& dropped) const override;

  SymbolId advance_symbol() const { return advance_; }
  std::size_t num_variables() const { return variables_.size(); }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<std::string>& features() const { return features_; }

private:
  const SeriesInstance& get_series(const StructureInstance& x) const;

  std::vector<std::string> variables_;
  std::vector<std::string> features_;
  Alphabet alphabet_;
  SymbolId advance_ = 0;
  std::vector<SymbolId> variable_syms_;
  std::vector<SymbolId> feature_syms_;
};

}  // namespace seriate
