#include "seriate/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace seriate {

namespace {

struct FrontContext {
  bool active = false;                 // front branch of a biased-front draw
  std::vector<SymbolId> front_syms;    // sorted
};

bool is_front(const FrontContext& ctx, SymbolId sym) {
  return std::binary_search(ctx.front_syms.begin(), ctx.front_syms.end(), sym);
}

// While the front branch is active, keep only input-block elements; once the
// input block is exhausted the filter passes everything through.
std::vector<LexiconElement> front_filter(const FrontContext& ctx,
                                         std::vector<LexiconElement> pool) {
  if (!ctx.active) return pool;
  std::vector<LexiconElement> filtered;
  for (const auto& e : pool)
    if (is_front(ctx, e.symbol)) filtered.push_back(e);
  return filtered.empty() ? pool : filtered;
}

}  // namespace

std::vector<LexiconElement> possible_elements(std::size_t t,
                                              std::span<const Serialization> candidates) {
  if (candidates.empty()) throw EmptyCandidates();
  std::set<LexiconElement> distinct;
  for (const auto& a : candidates) {
    if (t >= a.elements.size())
      throw InternalInconsistency("candidate shorter than requested position");
    distinct.insert(a.elements[t]);
  }
  return {distinct.begin(), distinct.end()};
}

std::pair<LexiconElement, double> sample_next(const SamplingMeasure& mu,
                                              const StateKey& state,
                                              std::span<const LexiconElement> pool,
                                              Philox& rng) {
  if (pool.empty()) throw EmptyCandidates();
  std::vector<double> weights(pool.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    weights[i] = mu.weight(state, pool[i].symbol);
    norm += weights[i];
  }
  const double u = rng.uniform() * norm;
  double cumulative = 0.0;
  std::size_t pick = pool.size() - 1;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) {
      pick = i;
      break;
    }
  }
  return {pool[pick], std::log(weights[pick]) - std::log(norm)};
}

std::vector<Serialization> update_list(std::vector<Serialization> candidates,
                                       const LexiconElement& chosen, std::size_t t) {
  std::erase_if(candidates, [&](const Serialization& a) {
    return t >= a.elements.size() || !(a.elements[t] == chosen);
  });
  if (candidates.empty())
    throw InternalInconsistency("no candidate carries the chosen element at position " +
                                std::to_string(t));
  return candidates;
}

namespace {

StructureInstance apply_feature_drop(const StructureBackend& backend,
                                     const StructureInstance& x,
                                     const SamplingMeasure& mu, Philox& rng) {
  if (mu.kind() != SamplingMeasure::Kind::BiasedFront || mu.feature_drop_prob() <= 0.0)
    return x;
  std::vector<SymbolId> drops;
  for (SymbolId sym : backend.droppable_feature_symbols())
    if (rng.uniform() < mu.feature_drop_prob()) drops.push_back(sym);
  return drops.empty() ? x : backend.drop_features(x, drops);
}

}  // namespace

Serialization sample_serialization(const StructureBackend& backend,
                                   const StructureInstance& x,
                                   const SamplerConfig& cfg, Philox& rng) {
  const SamplingMeasure& mu = cfg.measure;
  const StructureInstance instance = apply_feature_drop(backend, x, mu, rng);

  FrontContext front;
  double branch_log_prob = 0.0;
  if (mu.kind() == SamplingMeasure::Kind::BiasedFront) {
    front.front_syms = backend.front_symbols();
    front.active = rng.uniform() < mu.front_fraction();
    branch_log_prob =
        std::log(front.active ? mu.front_fraction() : 1.0 - mu.front_fraction());
  }

  std::vector<Serialization> candidates;
  if (cfg.mode == SamplerConfig::Mode::Enumerating)
    candidates = backend.enumerate_serializations(instance, cfg.enumeration_bound);

  Serialization out;
  out.step_log_probs.emplace();
  StateKey state = backend.initial_state();
  const SymbolId eos = backend.alphabet().eos();

  for (std::size_t t = 0;; ++t) {
    std::vector<LexiconElement> pool =
        cfg.mode == SamplerConfig::Mode::Enumerating
            ? possible_elements(t, candidates)
            : backend.candidate_next_elements(instance, state, out.elements);
    pool = front_filter(front, std::move(pool));

    LexiconElement chosen;
    double log_prob = 0.0;
    if (cfg.canonical_order) {
      chosen = pool.front();
    } else {
      std::tie(chosen, log_prob) = sample_next(mu, state, pool, rng);
    }

    out.elements.push_back(chosen);
    out.step_log_probs->push_back(log_prob);
    state = transition(backend, state, chosen);
    if (cfg.mode == SamplerConfig::Mode::Enumerating)
      candidates = update_list(std::move(candidates), chosen, t);
    if (chosen.symbol == eos) break;
  }

  if (mu.kind() == SamplingMeasure::Kind::BiasedFront)
    out.step_log_probs->front() += branch_log_prob;
  return out;
}

namespace {

// Log probability of `a` under one concrete pool policy (front filter on or
// off).  Returns -inf when a step's element falls outside the filtered pool.
double replay_log_prob(const StructureBackend& backend, const StructureInstance& x,
                       const Serialization& a, const SamplerConfig& cfg,
                       const FrontContext& front) {
  std::vector<Serialization> candidates;
  if (cfg.mode == SamplerConfig::Mode::Enumerating)
    candidates = backend.enumerate_serializations(x, cfg.enumeration_bound);

  double total = 0.0;
  StateKey state = backend.initial_state();
  std::vector<LexiconElement> prefix;
  for (std::size_t t = 0; t < a.elements.size(); ++t) {
    std::vector<LexiconElement> pool =
        cfg.mode == SamplerConfig::Mode::Enumerating
            ? possible_elements(t, candidates)
            : backend.candidate_next_elements(x, state, prefix);
    pool = front_filter(front, std::move(pool));

    const auto& element = a.elements[t];
    const auto it = std::find(pool.begin(), pool.end(), element);
    if (it == pool.end()) return -std::numeric_limits<double>::infinity();

    if (cfg.canonical_order) {
      if (!(element == pool.front()))
        return -std::numeric_limits<double>::infinity();
    } else {
      double norm = 0.0;
      for (const auto& e : pool) norm += cfg.measure.weight(state, e.symbol);
      total += std::log(cfg.measure.weight(state, element.symbol)) - std::log(norm);
    }

    state = transition(backend, state, element);
    prefix.push_back(element);
    if (cfg.mode == SamplerConfig::Mode::Enumerating)
      candidates = update_list(std::move(candidates), element, t);
  }
  return total;
}

double log_add(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double path_log_prob(const StructureBackend& backend, const StructureInstance& x,
                     const Serialization& a, const SamplerConfig& cfg) {
  StructureInstance roundtrip;
  try {
    roundtrip = backend.deserialize(a);
  } catch (const MalformedSerialization& e) {
    throw NotASerializationOf(std::string("sequence does not deserialize: ") + e.what());
  }
  if (!(roundtrip == x))
    throw NotASerializationOf("sequence deserializes to a different instance");

  if (cfg.measure.kind() != SamplingMeasure::Kind::BiasedFront) {
    FrontContext off;
    return replay_log_prob(backend, x, a, cfg, off);
  }

  if (cfg.measure.feature_drop_prob() > 0.0)
    throw Error("path probability is undefined under random feature dropping");

  FrontContext fronted{true, backend.front_symbols()};
  FrontContext interleaved{false, {}};
  const double ff = cfg.measure.front_fraction();
  const double log_front =
      std::log(ff) + replay_log_prob(backend, x, a, cfg, fronted);
  const double log_mix = ff >= 1.0
                             ? -std::numeric_limits<double>::infinity()
                             : std::log1p(-ff) + replay_log_prob(backend, x, a, cfg,
                                                                 interleaved);
  return log_add(log_front, log_mix);
}

}  // namespace seriate
