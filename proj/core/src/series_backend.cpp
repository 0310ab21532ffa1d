#include "seriate/series_backend.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "byte_reader.hpp"

namespace seriate {

namespace {

constexpr std::uint8_t kOpen = 0;
constexpr std::uint8_t kDone = 1;

using Entries = std::vector<std::pair<SymbolId, double>>;  // sorted by symbol

struct DecodedState {
  std::uint8_t phase = kOpen;
  Entries features;
  std::vector<Entries> sealed;
  Entries open_column;
};

void write_entries(ByteWriter& w, const Entries& entries) {
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [sym, value] : entries) {
    w.u32(sym);
    w.f64_bits(value);
  }
}

Entries read_entries(ByteReader& r) {
  Entries entries(r.u32());
  for (auto& [sym, value] : entries) {
    sym = r.u32();
    value = r.f64_bits();
  }
  return entries;
}

DecodedState decode(const std::string& payload) {
  DecodedState s;
  ByteReader r(payload);
  s.phase = r.u8();
  s.features = read_entries(r);
  s.sealed.resize(r.u32());
  for (auto& col : s.sealed) col = read_entries(r);
  s.open_column = read_entries(r);
  return s;
}

std::string encode(const DecodedState& s) {
  std::string payload;
  ByteWriter w(payload);
  w.u8(s.phase);
  write_entries(w, s.features);
  w.u32(static_cast<std::uint32_t>(s.sealed.size()));
  for (const auto& col : s.sealed) write_entries(w, col);
  write_entries(w, s.open_column);
  return payload;
}

bool insert_entry(Entries& entries, SymbolId sym, double value) {
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), sym,
      [](const auto& e, SymbolId s) { return e.first < s; });
  if (it != entries.end() && it->first == sym) return false;
  entries.insert(it, {sym, value});
  return true;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

Alphabet series_alphabet(const std::vector<std::string>& variables,
                         const std::vector<std::string>& features) {
  Alphabet alphabet;
  alphabet.add("AdvanceTime", false);
  for (const auto& v : variables) alphabet.add("AddTS(" + v + ")", true);
  for (const auto& f : features) alphabet.add("AddFeature(" + f + ")", true);
  return alphabet;
}

SeriesBackend::SeriesBackend(std::vector<std::string> variables,
                             std::vector<std::string> features)
    : variables_(std::move(variables)), features_(std::move(features)) {
  if (variables_.empty()) throw Error("series backend needs at least one variable");
  std::sort(variables_.begin(), variables_.end());
  std::sort(features_.begin(), features_.end());
  alphabet_ = series_alphabet(variables_, features_);
  advance_ = alphabet_.id("AdvanceTime");
  for (const auto& v : variables_) variable_syms_.push_back(alphabet_.id("AddTS(" + v + ")"));
  for (const auto& f : features_)
    feature_syms_.push_back(alphabet_.id("AddFeature(" + f + ")"));
}

const SeriesInstance& SeriesBackend::get_series(const StructureInstance& x) const {
  const auto* series = std::get_if<SeriesInstance>(&x);
  if (!series) throw BackendMismatch("instance is not a series");
  return *series;
}

StateKey SeriesBackend::initial_state() const {
  return {StructureKind::Series, encode(DecodedState{})};
}

StateKey SeriesBackend::transition_impl(const StateKey& state,
                                        const LexiconElement& element) const {
  DecodedState s = decode(state.payload);
  if (s.phase == kDone) throw MalformedSerialization(0, "element after eos");
  const SymbolId sym = element.symbol;

  if (sym == alphabet_.eos() || sym == advance_) {
    if (s.open_column.size() != variables_.size())
      throw MalformedSerialization(
          0, std::string(sym == advance_ ? "AdvanceTime" : "eos") +
                 " before the column completed");
    if (sym == advance_) {
      s.sealed.push_back(std::move(s.open_column));
      s.open_column.clear();
    } else {
      s.sealed.push_back(std::move(s.open_column));
      s.open_column.clear();
      s.phase = kDone;
    }
  } else if (std::binary_search(variable_syms_.begin(), variable_syms_.end(), sym)) {
    if (!insert_entry(s.open_column, sym, *element.value))
      throw MalformedSerialization(0, "variable repeated within a time step: " +
                                          alphabet_.name(sym));
  } else {
    if (!insert_entry(s.features, sym, *element.value))
      throw MalformedSerialization(0, "input feature repeated: " + alphabet_.name(sym));
  }
  return {StructureKind::Series, encode(s)};
}

StructureInstance SeriesBackend::deserialize(const Serialization& a) const {
  if (const auto bad = eos_violation(a, alphabet_))
    throw MalformedSerialization(*bad, "eos must appear exactly once, at the end");

  std::map<std::string, double> features;
  std::vector<std::map<SymbolId, double>> columns(1);
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    const auto& element = a.elements[i];
    const SymbolId sym = element.symbol;
    if (sym == alphabet_.eos() || sym == advance_) {
      if (columns.back().size() != variables_.size())
        throw MalformedSerialization(i, "time step advanced before all variables were set");
      if (sym == advance_) columns.emplace_back();
    } else if (std::binary_search(variable_syms_.begin(), variable_syms_.end(), sym)) {
      if (!columns.back().emplace(sym, *element.value).second)
        throw MalformedSerialization(i, "variable repeated within a time step: " +
                                            alphabet_.name(sym));
    } else {
      const std::string& name = alphabet_.name(sym);
      // strip "AddFeature(" ... ")"
      const std::string feature = name.substr(11, name.size() - 12);
      if (!features.emplace(feature, *element.value).second)
        throw MalformedSerialization(i, "input feature repeated: " + name);
    }
  }

  SeriesInstance out;
  out.input_features = std::move(features);
  out.variables = variables_;
  out.values.assign(variables_.size(), std::vector<double>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t i = 0; i < variables_.size(); ++i)
      out.values[i][j] = columns[j].at(variable_syms_[i]);
  return out;
}

double SeriesBackend::count_serializations(const StructureInstance& x) const {
  const auto& series = get_series(x);
  series.validate();
  const std::size_t k = variables_.size();
  const std::size_t l = series.num_steps();
  const std::size_t d = series.input_features.size();
  // (k!)^l within-column orders; features interleave anywhere before eos:
  // (N+d)! / N! placements into the length-N column skeleton.
  double count = 1.0;
  for (std::size_t j = 0; j < l; ++j) count *= factorial(k);
  const std::size_t skeleton = k * l + (l - 1);
  for (std::size_t i = skeleton + 1; i <= skeleton + d; ++i)
    count *= static_cast<double>(i);
  return count;
}

namespace {

struct SeriesWalk {
  // Emission progress against a concrete instance.
  std::vector<bool> feature_done;
  std::vector<bool> var_done;
  std::size_t column = 0;
};

}  // namespace

std::vector<Serialization> SeriesBackend::enumerate_serializations(
    const StructureInstance& x, std::uint64_t bound) const {
  const auto& series = get_series(x);
  const double count = count_serializations(x);
  if (count > static_cast<double>(bound)) throw EnumerationTooLarge(count, true);
  if (series.variables != variables_)
    throw BackendMismatch("series variables differ from the backend schema");

  std::vector<std::pair<SymbolId, double>> feats;
  for (const auto& [name, value] : series.input_features)
    feats.emplace_back(alphabet_.id("AddFeature(" + name + ")"), value);

  const std::size_t k = variables_.size();
  const std::size_t l = series.num_steps();

  std::vector<Serialization> out;
  std::vector<LexiconElement> seq;
  SeriesWalk walk;
  walk.feature_done.assign(feats.size(), false);
  walk.var_done.assign(k, false);

  const auto rec = [&](const auto& self) -> void {
    const bool column_full =
        std::all_of(walk.var_done.begin(), walk.var_done.end(), [](bool b) { return b; });
    const bool features_full = std::all_of(walk.feature_done.begin(),
                                           walk.feature_done.end(), [](bool b) { return b; });

    if (column_full && walk.column + 1 == l && features_full) {
      seq.push_back(LexiconElement::categorical(alphabet_.eos()));
      out.push_back(Serialization{seq, std::nullopt});
      seq.pop_back();
      return;
    }
    for (std::size_t f = 0; f < feats.size(); ++f) {
      if (walk.feature_done[f]) continue;
      walk.feature_done[f] = true;
      seq.push_back(LexiconElement::valued(feats[f].first, feats[f].second));
      self(self);
      seq.pop_back();
      walk.feature_done[f] = false;
    }
    if (!column_full) {
      for (std::size_t v = 0; v < k; ++v) {
        if (walk.var_done[v]) continue;
        walk.var_done[v] = true;
        seq.push_back(
            LexiconElement::valued(variable_syms_[v], series.values[v][walk.column]));
        self(self);
        seq.pop_back();
        walk.var_done[v] = false;
      }
    } else if (walk.column + 1 < l) {
      seq.push_back(LexiconElement::categorical(advance_));
      walk.var_done.assign(k, false);
      ++walk.column;
      self(self);
      --walk.column;
      walk.var_done.assign(k, true);
      seq.pop_back();
    }
  };
  rec(rec);
  return out;
}

std::vector<LexiconElement> SeriesBackend::candidate_next_elements(
    const StructureInstance& x, const StateKey&,
    std::span<const LexiconElement> prefix) const {
  const auto& series = get_series(x);
  if (series.variables != variables_)
    throw BackendMismatch("series variables differ from the backend schema");
  const std::size_t k = variables_.size();
  const std::size_t l = series.num_steps();

  std::map<SymbolId, double> available_features;
  for (const auto& [name, value] : series.input_features)
    available_features.emplace(alphabet_.id("AddFeature(" + name + ")"), value);

  std::map<SymbolId, double> remaining_features = available_features;
  std::vector<bool> var_done(k, false);
  std::size_t column = 0;

  const auto var_index = [&](SymbolId sym) -> std::size_t {
    const auto it = std::lower_bound(variable_syms_.begin(), variable_syms_.end(), sym);
    return static_cast<std::size_t>(it - variable_syms_.begin());
  };

  for (std::size_t pos = 0; pos < prefix.size(); ++pos) {
    const auto& element = prefix[pos];
    const SymbolId sym = element.symbol;
    if (sym == alphabet_.eos()) throw DeadEnd("prefix already terminated");
    if (sym == advance_) {
      const bool full = std::all_of(var_done.begin(), var_done.end(), [](bool b) { return b; });
      if (!full || column + 1 >= l)
        throw DeadEnd("AdvanceTime not admissible at element " + std::to_string(pos));
      var_done.assign(k, false);
      ++column;
    } else if (std::binary_search(variable_syms_.begin(), variable_syms_.end(), sym)) {
      const std::size_t v = var_index(sym);
      if (var_done[v]) throw DeadEnd("variable repeated within a time step");
      if (!element.value || !same_bits(*element.value, series.values[v][column]))
        throw DeadEnd("series value mismatch at element " + std::to_string(pos));
      var_done[v] = true;
    } else {
      const auto it = remaining_features.find(sym);
      if (it == remaining_features.end()) throw DeadEnd("feature not available");
      if (!element.value || !same_bits(*element.value, it->second))
        throw DeadEnd("feature value mismatch at element " + std::to_string(pos));
      remaining_features.erase(it);
    }
  }

  const bool column_full =
      std::all_of(var_done.begin(), var_done.end(), [](bool b) { return b; });
  std::vector<LexiconElement> candidates;
  if (!column_full) {
    for (std::size_t v = 0; v < k; ++v)
      if (!var_done[v])
        candidates.push_back(
            LexiconElement::valued(variable_syms_[v], series.values[v][column]));
  } else if (column + 1 < l) {
    candidates.push_back(LexiconElement::categorical(advance_));
  } else if (remaining_features.empty()) {
    candidates.push_back(LexiconElement::categorical(alphabet_.eos()));
  }
  for (const auto& [sym, value] : remaining_features)
    candidates.push_back(LexiconElement::valued(sym, value));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<SymbolId> SeriesBackend::front_symbols() const { return feature_syms_; }

StructureInstance SeriesBackend::drop_features(
    const StructureInstance& x, const std::vector<SymbolId>& dropped) const {
  SeriesInstance out = get_series(x);
  for (SymbolId sym : dropped) {
    const std::string& name = alphabet_.name(sym);
    out.input_features.erase(name.substr(11, name.size() - 12));
  }
  return out;
}

}  // namespace seriate
