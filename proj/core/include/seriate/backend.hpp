#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "seriate/instances.hpp"
#include "seriate/lexicon.hpp"
#include "seriate/measure.hpp"
#include "seriate/state.hpp"

namespace seriate {

// Abstract contract every structure backend satisfies.  Backends are
// stateless after construction; every operation is a pure function.
//
// Requirements:
//   * deserialize(a) reproduces the source instance exactly for every a the
//     backend can emit (revertibility);
//   * transition is a pure function of (StateKey, LexiconElement), never of
//     the instance — equal states across instances behave identically;
//   * enumerate_serializations is exhaustive and duplicate-free, and
//     candidate_next_elements agrees with it position by position.
class StructureBackend {
public:
  virtual ~StructureBackend() = default;

  virtual StructureKind kind() const = 0;
  virtual const Alphabet& alphabet() const = 0;

  // State of the empty partial serialization (s^0).
  virtual StateKey initial_state() const = 0;

  // s^{t+1} = f(s^t, a^{t+1}).  Implementations may assume the element was
  // validated against the alphabet by the free-function wrapper below.
  virtual StateKey transition_impl(const StateKey& state,
                                   const LexiconElement& element) const = 0;

  virtual StructureInstance deserialize(const Serialization& a) const = 0;

  // Exhaustive, duplicate-free fiber X^-1(x).  Throws EnumerationTooLarge
  // (with the count) when the fiber exceeds `bound` sequences.
  virtual std::vector<Serialization> enumerate_serializations(
      const StructureInstance& x, std::uint64_t bound) const = 0;

  // Number of serializations of x, computed without materializing them.
  // Returned as double: counts grow factorially and only feed bound checks.
  virtual double count_serializations(const StructureInstance& x) const = 0;

  // Streaming candidates: exactly the distinct elements appearing at the next
  // position across all serializations of x sharing `prefix`, sorted in
  // canonical element order.  Throws DeadEnd if the prefix extends to no
  // serialization of x.
  virtual std::vector<LexiconElement> candidate_next_elements(
      const StructureInstance& x, const StateKey& state,
      std::span<const LexiconElement> prefix) const = 0;

  // Symbols belonging to the conditioning ("input") block, used by the
  // biased-front measure to restrict the pool while that block is open.
  // Empty for backends without an input component.
  virtual std::vector<SymbolId> front_symbols() const { return {}; }

  // Feature name symbols eligible for random dropping (biased-front's
  // optional per-feature drop).  Defaults to the front set.
  virtual std::vector<SymbolId> droppable_feature_symbols() const {
    return front_symbols();
  }

  // Drops the features named by ids from the instance (biased-front measure's
  // optional feature dropping).  Identity for backends without features.
  virtual StructureInstance drop_features(const StructureInstance& x,
                                          const std::vector<SymbolId>&) const {
    return x;
  }
};

// Validated transition: checks the symbol against the backend alphabet and
// the state tag against the backend kind.
StateKey transition(const StructureBackend& backend, const StateKey& state,
                    const LexiconElement& element);

// [s^0, s^1, ..., s^T]; length |elements| + 1.
std::vector<StateKey> replay_states(const StructureBackend& backend,
                                    const Serialization& a);

enum class MeasureMode { Unconditional, Conditional };

// Default measures from the serialization schemes: uniform everywhere except
// the conditional series/propositional case, which fronts the input features
// half the time.
SamplingMeasure default_measure(const StructureBackend& backend, MeasureMode mode);

}  // namespace seriate
