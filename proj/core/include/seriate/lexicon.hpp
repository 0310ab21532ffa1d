#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "seriate/errors.hpp"

namespace seriate {

using SymbolId = std::uint32_t;

// Reserved end-of-sequence symbol, present in every alphabet, value-free.
inline constexpr const char* kEos = "eos";

// Finite symbol set of a structure backend.  Symbol ids are dense indices in
// declaration order; that order is also the canonical iteration order used by
// the sampler's cumulative-weight inversion.
class Alphabet {
public:
  Alphabet() { add(kEos, false); }

  SymbolId add(const std::string& name, bool value_carrying) {
    if (index_.contains(name)) throw DuplicateName(name);
    const SymbolId id = static_cast<SymbolId>(names_.size());
    index_.emplace(name, id);
    names_.push_back(name);
    value_carrying_.push_back(value_carrying);
    return id;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  SymbolId id(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw UnknownSymbol(name);
    return it->second;
  }

  const std::string& name(SymbolId id) const { return names_.at(id); }
  bool value_carrying(SymbolId id) const { return value_carrying_.at(id); }
  std::size_t size() const { return names_.size(); }
  SymbolId eos() const { return 0; }

private:
  std::vector<std::string> names_;
  std::vector<bool> value_carrying_;
  std::unordered_map<std::string, SymbolId> index_;
};

// One token of a serialization: a categorical symbol, optionally paired with
// a real value.  Value presence must match the symbol's declaration; the
// embedding layer maps value-free symbols to exactly zero.
struct LexiconElement {
  SymbolId symbol = 0;
  std::optional<double> value;

  static LexiconElement categorical(SymbolId sym) { return {sym, std::nullopt}; }

  static LexiconElement valued(SymbolId sym, double v) {
    if (!std::isfinite(v)) throw Error("lexicon element value must be finite");
    return {sym, v};
  }

  friend bool operator==(const LexiconElement& a, const LexiconElement& b) {
    if (a.symbol != b.symbol) return false;
    if (a.value.has_value() != b.value.has_value()) return false;
    // Bit-exact value identity; state machinery never compares approximately.
    if (a.value)
      return std::bit_cast<std::uint64_t>(*a.value) ==
             std::bit_cast<std::uint64_t>(*b.value);
    return true;
  }

  // Canonical order: symbol id, then value bit pattern as sign-magnitude
  // ordered doubles (total order; matches numeric order for finite values of
  // the same sign, which is all the sampler needs for determinism).
  friend bool operator<(const LexiconElement& a, const LexiconElement& b) {
    if (a.symbol != b.symbol) return a.symbol < b.symbol;
    const double av = a.value.value_or(0.0), bv = b.value.value_or(0.0);
    if (av != bv) return av < bv;
    return std::bit_cast<std::uint64_t>(av) < std::bit_cast<std::uint64_t>(bv);
  }
};

// A complete serialization: terminates with `eos` exactly once, at the last
// position.  step_log_probs, when present, holds the per-step log masses
// recorded by the sampler; their sum is log q(a|x).
struct Serialization {
  std::vector<LexiconElement> elements;
  std::optional<std::vector<double>> step_log_probs;

  std::size_t size() const { return elements.size(); }

  double path_log_prob() const {
    if (!step_log_probs) throw Error("serialization carries no step log probs");
    double total = 0.0;
    for (double lp : *step_log_probs) total += lp;
    return total;
  }

  friend bool operator==(const Serialization& a, const Serialization& b) {
    return a.elements == b.elements;
  }
};

// Validates the eos invariant against an alphabet; returns the index of the
// first violation, or nullopt when well formed.
inline std::optional<std::size_t> eos_violation(const Serialization& a,
                                                const Alphabet& alphabet) {
  if (a.elements.empty()) return 0;
  for (std::size_t i = 0; i + 1 < a.elements.size(); ++i)
    if (a.elements[i].symbol == alphabet.eos()) return i;
  if (a.elements.back().symbol != alphabet.eos()) return a.elements.size() - 1;
  return std::nullopt;
}

}  // namespace seriate
