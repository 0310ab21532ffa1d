#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "seriate/errors.hpp"
#include "seriate/lexicon.hpp"
#include "seriate/state.hpp"

namespace seriate {

// Sampling measure mu on (state, symbol) pairs, strictly positive.
//
//   uniform      — weight 1 for every candidate regardless of state.
//   table        — explicit positive weights per (state, symbol).
//   biased-front — per-serialization branch: with probability front_fraction
//                  all input features are serialized before any output
//                  element, otherwise sampling interleaves uniformly.  At the
//                  (state, symbol) level it is uniform; the branch logic
//                  lives in the sampler.
class SamplingMeasure {
public:
  enum class Kind { Uniform, Table, BiasedFront };

  static SamplingMeasure uniform() { return SamplingMeasure(Kind::Uniform); }

  static SamplingMeasure biased_front(double front_fraction, double feature_drop_prob = 0.0) {
    if (!(front_fraction > 0.0 && front_fraction <= 1.0))
      throw Error("front_fraction must lie in (0, 1]");
    if (!(feature_drop_prob >= 0.0 && feature_drop_prob < 1.0))
      throw Error("feature_drop_prob must lie in [0, 1)");
    SamplingMeasure m(Kind::BiasedFront);
    m.front_fraction_ = front_fraction;
    m.feature_drop_prob_ = feature_drop_prob;
    return m;
  }

  static SamplingMeasure table() { return SamplingMeasure(Kind::Table); }

  void set_weight(const StateKey& state, SymbolId symbol, double weight) {
    if (kind_ != Kind::Table) throw Error("weights only apply to table measures");
    if (!(weight > 0.0) || !std::isfinite(weight))
      throw Error("measure weights must be strictly positive and finite");
    weights_[{state, symbol}] = weight;
  }

  Kind kind() const { return kind_; }
  double front_fraction() const { return front_fraction_; }
  double feature_drop_prob() const { return feature_drop_prob_; }

  double weight(const StateKey& state, SymbolId symbol) const {
    switch (kind_) {
      case Kind::Uniform:
      case Kind::BiasedFront:
        return 1.0;
      case Kind::Table: {
        const auto it = weights_.find({state, symbol});
        if (it == weights_.end())
          throw MissingWeight("no weight for (state, symbol " +
                              std::to_string(symbol) + ")");
        return it->second;
      }
    }
    return 1.0;
  }

private:
  explicit SamplingMeasure(Kind kind) : kind_(kind) {}

  Kind kind_;
  double front_fraction_ = 0.0;
  double feature_drop_prob_ = 0.0;
  std::map<std::pair<StateKey, SymbolId>, double> weights_;
};

inline double measure_weight(const SamplingMeasure& mu, const StateKey& state,
                             SymbolId symbol) {
  return mu.weight(state, symbol);
}

}  // namespace seriate
