#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seriate/backend.hpp"
#include "seriate/rng.hpp"

namespace seriate {

// Element-wise mu-weighted sampling of a serialization.
//
// Enumerating mode materializes the fiber X^-1(x) and filters it step by
// step; streaming mode asks the backend for incremental candidates instead
// (recursive structures make that much cheaper).  Both modes induce the same
// distribution over serializations.
struct SamplerConfig {
  enum class Mode { Enumerating, Streaming };

  Mode mode = Mode::Streaming;
  SamplingMeasure measure = SamplingMeasure::uniform();
  std::uint64_t enumeration_bound = 1'000'000;
  std::uint64_t seed = 0;
  // Degenerate sampling strategy that always picks the canonically smallest
  // candidate: a single serialization with probability 1.
  bool canonical_order = false;
};

// Distinct elements found at position t across the candidates, sorted in
// canonical element order.
std::vector<LexiconElement> possible_elements(std::size_t t,
                                              std::span<const Serialization> candidates);

// Draws from the pool with probability mu(state, e) / sum over the pool.
// Sampling is exact cumulative-weight inversion over the pool in its given
// (canonical) order, so the (seed -> sample) map is deterministic.
std::pair<LexiconElement, double> sample_next(const SamplingMeasure& mu,
                                              const StateKey& state,
                                              std::span<const LexiconElement> pool,
                                              Philox& rng);

// Keeps exactly the candidates whose position-t element equals `chosen`.
std::vector<Serialization> update_list(std::vector<Serialization> candidates,
                                       const LexiconElement& chosen, std::size_t t);

// Samples one serialization of x, recording per-step log probabilities whose
// sum is log q(a|x).  A biased-front measure draws its branch up front and
// folds the branch log probability into the first step's entry.
Serialization sample_serialization(const StructureBackend& backend,
                                   const StructureInstance& x,
                                   const SamplerConfig& cfg, Philox& rng);

// Recomputes log q(a|x) for a serialization produced elsewhere by replaying
// the candidate filtering and per-step normalization deterministically.  For
// a biased-front measure this is the exact two-branch mixture marginal.
double path_log_prob(const StructureBackend& backend, const StructureInstance& x,
                     const Serialization& a, const SamplerConfig& cfg);

}  // namespace seriate
