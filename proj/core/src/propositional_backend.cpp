#include "seriate/propositional_backend.hpp"

#include <algorithm>
#include <bit>

#include "byte_reader.hpp"

namespace seriate {

namespace {

constexpr std::uint8_t kOpen = 0;
constexpr std::uint8_t kDone = 1;
constexpr std::uint8_t kNumericTag = 0;
constexpr std::uint8_t kCategoricalTag = 1;

struct CompletedEntry {
  SymbolId name = 0;
  std::uint8_t tag = kNumericTag;
  double numeric = 0.0;
  SymbolId value_sym = 0;
};

struct DecodedState {
  std::uint8_t phase = kOpen;
  std::optional<SymbolId> pending;
  std::vector<CompletedEntry> completed;  // sorted by name symbol
};

DecodedState decode(const std::string& payload) {
  DecodedState s;
  ByteReader r(payload);
  s.phase = r.u8();
  if (r.u8()) s.pending = r.u32();
  s.completed.resize(r.u32());
  for (auto& e : s.completed) {
    e.name = r.u32();
    e.tag = r.u8();
    if (e.tag == kNumericTag)
      e.numeric = r.f64_bits();
    else
      e.value_sym = r.u32();
  }
  return s;
}

std::string encode(const DecodedState& s) {
  std::string payload;
  ByteWriter w(payload);
  w.u8(s.phase);
  w.u8(s.pending ? 1 : 0);
  if (s.pending) w.u32(*s.pending);
  w.u32(static_cast<std::uint32_t>(s.completed.size()));
  for (const auto& e : s.completed) {
    w.u32(e.name);
    w.u8(e.tag);
    if (e.tag == kNumericTag)
      w.f64_bits(e.numeric);
    else
      w.u32(e.value_sym);
  }
  return payload;
}

bool insert_completed(std::vector<CompletedEntry>& entries, CompletedEntry e) {
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), e.name,
      [](const CompletedEntry& a, SymbolId name) { return a.name < name; });
  if (it != entries.end() && it->name == e.name) return false;
  entries.insert(it, std::move(e));
  return true;
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

PropositionalBackend::PropositionalBackend(
    std::vector<std::string> numeric_names,
    std::map<std::string, std::set<std::string>> categorical_domains,
    std::vector<std::string> label_classes, std::string label_name)
    : numeric_names_(std::move(numeric_names)),
      categorical_domains_(std::move(categorical_domains)),
      label_classes_(std::move(label_classes)),
      label_name_(std::move(label_name)) {
  std::sort(numeric_names_.begin(), numeric_names_.end());
  std::sort(label_classes_.begin(), label_classes_.end());

  // Feature names first, then the label name, then all value tokens.  Every
  // name shares one namespace; Alphabet::add rejects collisions.  Numeric
  // feature names are the value-carrying symbols.
  for (const auto& name : numeric_names_) numeric_syms_.insert(alphabet_.add(name, true));
  for (const auto& [name, domain] : categorical_domains_)
    categorical_name_syms_.insert(alphabet_.add(name, false));
  has_label_ = !label_classes_.empty();
  if (has_label_) label_sym_ = alphabet_.add(label_name_, false);
  for (const auto& [name, domain] : categorical_domains_) {
    auto& syms = domain_syms_[alphabet_.id(name)];
    for (const auto& value : domain) syms.insert(alphabet_.add(value, false));
  }
  if (has_label_) {
    auto& syms = domain_syms_[label_sym_];
    for (const auto& cls : label_classes_) syms.insert(alphabet_.add(cls, false));
  }
}

const PropositionalInstance& PropositionalBackend::get_record(
    const StructureInstance& x) const {
  const auto* record = std::get_if<PropositionalInstance>(&x);
  if (!record) throw BackendMismatch("instance is not a propositional record");
  return *record;
}

StateKey PropositionalBackend::initial_state() const {
  return {StructureKind::Propositional, encode(DecodedState{})};
}

StateKey PropositionalBackend::transition_impl(const StateKey& state,
                                               const LexiconElement& element) const {
  DecodedState s = decode(state.payload);
  if (s.phase == kDone) throw MalformedSerialization(0, "element after eos");
  const SymbolId sym = element.symbol;

  if (sym == alphabet_.eos()) {
    if (s.pending)
      throw MalformedSerialization(0, "eos in the middle of a categorical pair");
    s.phase = kDone;
    return {StructureKind::Propositional, encode(s)};
  }

  if (s.pending) {
    const auto domain = domain_syms_.find(*s.pending);
    if (domain == domain_syms_.end() || !domain->second.contains(sym))
      throw MalformedSerialization(0, alphabet_.name(sym) + " is not a value of " +
                                          alphabet_.name(*s.pending));
    CompletedEntry e;
    e.name = *s.pending;
    e.tag = kCategoricalTag;
    e.value_sym = sym;
    insert_completed(s.completed, std::move(e));
    s.pending.reset();
    return {StructureKind::Propositional, encode(s)};
  }

  const auto already = std::any_of(
      s.completed.begin(), s.completed.end(),
      [&](const CompletedEntry& e) { return e.name == sym; });
  if (already)
    throw MalformedSerialization(0, "feature repeated: " + alphabet_.name(sym));

  if (is_numeric_name(sym)) {
    CompletedEntry e;
    e.name = sym;
    e.tag = kNumericTag;
    e.numeric = *element.value;
    insert_completed(s.completed, std::move(e));
  } else if (categorical_name_syms_.contains(sym) || (has_label_ && sym == label_sym_)) {
    s.pending = sym;
  } else {
    throw MalformedSerialization(0, alphabet_.name(sym) +
                                        " cannot start a feature (it is a value token)");
  }
  return {StructureKind::Propositional, encode(s)};
}

StructureInstance PropositionalBackend::deserialize(const Serialization& a) const {
  if (const auto bad = eos_violation(a, alphabet_))
    throw MalformedSerialization(*bad, "eos must appear exactly once, at the end");

  PropositionalInstance out;
  std::optional<SymbolId> pending;
  for (std::size_t i = 0; i + 1 < a.elements.size(); ++i) {
    const auto& element = a.elements[i];
    const SymbolId sym = element.symbol;
    if (pending) {
      const auto domain = domain_syms_.find(*pending);
      if (domain == domain_syms_.end() || !domain->second.contains(sym))
        throw MalformedSerialization(i, alphabet_.name(sym) + " is not a value of " +
                                            alphabet_.name(*pending));
      if (has_label_ && *pending == label_sym_)
        out.label = alphabet_.name(sym);
      else
        out.categorical_features.emplace(alphabet_.name(*pending), alphabet_.name(sym));
      pending.reset();
      continue;
    }
    if (is_numeric_name(sym)) {
      if (!out.numeric_features.emplace(alphabet_.name(sym), *element.value).second)
        throw MalformedSerialization(i, "feature repeated: " + alphabet_.name(sym));
    } else if (categorical_name_syms_.contains(sym)) {
      if (out.categorical_features.contains(alphabet_.name(sym)))
        throw MalformedSerialization(i, "feature repeated: " + alphabet_.name(sym));
      pending = sym;
    } else if (has_label_ && sym == label_sym_) {
      if (out.label) throw MalformedSerialization(i, "label repeated");
      pending = sym;
    } else {
      throw MalformedSerialization(i, alphabet_.name(sym) +
                                          " cannot start a feature (it is a value token)");
    }
  }
  if (pending)
    throw MalformedSerialization(a.elements.size() - 1,
                                 "eos in the middle of a categorical pair");
  return out;
}

namespace {

// A feature block: the elements a single feature contributes, kept atomic.
struct Block {
  std::vector<LexiconElement> elements;
};

}  // namespace

double PropositionalBackend::count_serializations(const StructureInstance& x) const {
  const auto& record = get_record(x);
  const std::size_t blocks = record.numeric_features.size() +
                             record.categorical_features.size() +
                             (record.label ? 1 : 0);
  return factorial(blocks);
}

std::vector<Serialization> PropositionalBackend::enumerate_serializations(
    const StructureInstance& x, std::uint64_t bound) const {
  const auto& record = get_record(x);
  const double count = count_serializations(x);
  if (count > static_cast<double>(bound)) throw EnumerationTooLarge(count, true);

  std::vector<Block> blocks;
  for (const auto& [name, value] : record.numeric_features)
    blocks.push_back({{LexiconElement::valued(alphabet_.id(name), value)}});
  for (const auto& [name, value] : record.categorical_features)
    blocks.push_back({{LexiconElement::categorical(alphabet_.id(name)),
                       LexiconElement::categorical(alphabet_.id(value))}});
  if (record.label)
    blocks.push_back({{LexiconElement::categorical(label_sym_),
                       LexiconElement::categorical(alphabet_.id(*record.label))}});

  std::vector<std::size_t> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Serialization> out;
  do {
    Serialization a;
    for (std::size_t i : order)
      a.elements.insert(a.elements.end(), blocks[i].elements.begin(),
                        blocks[i].elements.end());
    a.elements.push_back(LexiconElement::categorical(alphabet_.eos()));
    out.push_back(std::move(a));
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

std::vector<LexiconElement> PropositionalBackend::candidate_next_elements(
    const StructureInstance& x, const StateKey&,
    std::span<const LexiconElement> prefix) const {
  const auto& record = get_record(x);

  std::map<SymbolId, LexiconElement> remaining;  // name symbol -> opening element
  std::map<SymbolId, SymbolId> pair_value;       // name symbol -> value symbol
  for (const auto& [name, value] : record.numeric_features)
    remaining.emplace(alphabet_.id(name), LexiconElement::valued(alphabet_.id(name), value));
  for (const auto& [name, value] : record.categorical_features) {
    const SymbolId name_sym = alphabet_.id(name);
    remaining.emplace(name_sym, LexiconElement::categorical(name_sym));
    pair_value.emplace(name_sym, alphabet_.id(value));
  }
  if (record.label) {
    remaining.emplace(label_sym_, LexiconElement::categorical(label_sym_));
    pair_value.emplace(label_sym_, alphabet_.id(*record.label));
  }

  std::optional<SymbolId> pending;
  for (std::size_t pos = 0; pos < prefix.size(); ++pos) {
    const auto& element = prefix[pos];
    if (element.symbol == alphabet_.eos()) throw DeadEnd("prefix already terminated");
    if (pending) {
      if (element.symbol != pair_value.at(*pending))
        throw DeadEnd("pair value mismatch at element " + std::to_string(pos));
      pending.reset();
      continue;
    }
    const auto it = remaining.find(element.symbol);
    if (it == remaining.end())
      throw DeadEnd("feature not available at element " + std::to_string(pos));
    if (it->second.value) {
      if (!element.value || !same_bits(*element.value, *it->second.value))
        throw DeadEnd("numeric value mismatch at element " + std::to_string(pos));
    } else {
      pending = element.symbol;
    }
    remaining.erase(it);
  }

  std::vector<LexiconElement> candidates;
  if (pending) {
    candidates.push_back(LexiconElement::categorical(pair_value.at(*pending)));
  } else if (remaining.empty()) {
    candidates.push_back(LexiconElement::categorical(alphabet_.eos()));
  } else {
    for (const auto& [sym, element] : remaining) candidates.push_back(element);
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<SymbolId> PropositionalBackend::front_symbols() const {
  // Everything that can appear while the feature block is open: feature name
  // symbols and categorical value tokens — but never the label pair.
  std::vector<SymbolId> syms(numeric_syms_.begin(), numeric_syms_.end());
  for (SymbolId name : categorical_name_syms_) {
    syms.push_back(name);
    const auto& domain = domain_syms_.at(name);
    syms.insert(syms.end(), domain.begin(), domain.end());
  }
  std::sort(syms.begin(), syms.end());
  return syms;
}

std::vector<SymbolId> PropositionalBackend::droppable_feature_symbols() const {
  std::vector<SymbolId> syms(numeric_syms_.begin(), numeric_syms_.end());
  syms.insert(syms.end(), categorical_name_syms_.begin(), categorical_name_syms_.end());
  std::sort(syms.begin(), syms.end());
  return syms;
}

StructureInstance PropositionalBackend::drop_features(
    const StructureInstance& x, const std::vector<SymbolId>& dropped) const {
  PropositionalInstance out = get_record(x);
  for (SymbolId sym : dropped) {
    out.numeric_features.erase(alphabet_.name(sym));
    out.categorical_features.erase(alphabet_.name(sym));
  }
  return out;
}

}  // namespace seriate
