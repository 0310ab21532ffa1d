#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>

#include "seriate/sampler.hpp"
#include "seriate/seqmodel.hpp"

namespace seriate {

// Anything that scores complete serializations.
class SequenceModel {
public:
  virtual ~SequenceModel() = default;
  virtual double log_prob(const Serialization& a) const = 0;  // -inf for zero mass
};

// Exact, explicitly stored sequence distribution; the ground truth the
// probability machinery is tested against.  Every stored conditional is
// normalized per reachable prefix.
class TabularSeqModel : public SequenceModel {
public:
  double log_prob(const Serialization& a) const override;

  // Adds mass to a complete sequence (builder API).
  void add_mass(const Serialization& a, double mass);

  // Conditional distribution over next elements given a prefix of the
  // support, sorted in canonical element order.
  std::vector<std::pair<LexiconElement, double>> next_distribution(
      std::span<const LexiconElement> prefix) const;

  double total_mass() const;
  std::size_t support_size() const { return masses_.size(); }

  // The stored (sequence, mass) pairs; deterministic order.
  std::vector<std::pair<Serialization, double>> sequences() const;

private:
  static std::string key_of(std::span<const LexiconElement> elements);
  double prefix_mass(std::span<const LexiconElement> prefix) const;

  std::map<std::string, std::pair<Serialization, double>> masses_;
};

// Adapter: the trained recurrent model as a SequenceModel.
class RnnSequenceModel : public SequenceModel {
public:
  RnnSequenceModel(const ModelParams& params, const Alphabet& alphabet)
      : params_(params), alphabet_(alphabet) {}
  double log_prob(const Serialization& a) const override {
    return -sequence_nll(params_, alphabet_, a);
  }

private:
  const ModelParams& params_;
  const Alphabet& alphabet_;
};

// Exact distribution over sequences induced by uniform instance choice
// followed by the sampler's state-conditional measure: mass(a) = (1/N) *
// sum over dataset entries x with a in X^-1(x) of q(a|x).
TabularSeqModel build_tabular_oracle(const StructureBackend& backend,
                                     const Dataset& dataset, const SamplerConfig& cfg,
                                     std::uint64_t bound);

// Push-forward probability (fiber sum): sum over a in X^-1(x) of P_model(a),
// accumulated in log space.
double pushforward_prob(const StructureBackend& backend, const StructureInstance& x,
                        const SequenceModel& model, std::uint64_t bound);

// Property machinery.  In singleton mode a serialization's property is the
// serialization itself, so P(o|x) = q(a|x) and the fiber intersection is a
// single sequence.  Custom mode supplies a property function and optionally
// an exact per-property normalizer; absent that, P(o|x) is computed by
// enumeration as the q-mass of the property class.
struct PropertyView {
  enum class Mode { Singleton, Custom };
  Mode mode = Mode::Singleton;
  std::function<std::uint64_t(const Serialization&)> property_of;
  std::function<double(const StructureInstance&, std::uint64_t)> exact_normalizer;
};

// P(o|x) for a singleton property (o given as the witnessing serialization).
double property_normalizer(const StructureBackend& backend, const StructureInstance& x,
                           const Serialization& o, const SamplerConfig& cfg);

// P(o|x) for a custom property key.
double property_normalizer(const StructureBackend& backend, const StructureInstance& x,
                           std::uint64_t o, const PropertyView& view,
                           const SamplerConfig& cfg, std::uint64_t bound);

// [sum over a in X^-1(x) ∩ O^-1(o) of P_model(a)] / P(o|x).
double frac_prob(const StructureBackend& backend, const StructureInstance& x,
                 const Serialization& o, const SequenceModel& model,
                 const SamplerConfig& cfg);
double frac_prob(const StructureBackend& backend, const StructureInstance& x,
                 std::uint64_t o, const PropertyView& view, const SequenceModel& model,
                 const SamplerConfig& cfg, std::uint64_t bound);

struct RecoveryEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t draws = 0;
};

// Monte Carlo recovery of the push-forward probability: draws m
// serializations of x and averages P_model(a) / q(a|x), with q taken from
// the sampler's recorded path probability.  Never divides by zero: q is a
// product of strictly positive normalized masses.
RecoveryEstimate recover_density(const StructureBackend& backend,
                                 const StructureInstance& x, const SequenceModel& model,
                                 std::size_t m, const SamplerConfig& cfg, Philox& rng);

}  // namespace seriate
