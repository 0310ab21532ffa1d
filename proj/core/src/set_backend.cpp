#include "seriate/set_backend.hpp"

#include <algorithm>

#include "byte_reader.hpp"

namespace seriate {

namespace {
constexpr std::uint8_t kOpen = 0;
constexpr std::uint8_t kDone = 1;
}  // namespace

SetBackend::SetBackend(std::vector<std::string> universe) {
  std::sort(universe.begin(), universe.end());
  for (const auto& sym : universe) alphabet_.add(sym, false);
}

StateKey SetBackend::initial_state() const {
  std::string payload;
  ByteWriter w(payload);
  w.u8(kOpen);
  w.u32(0);
  return {StructureKind::Set, std::move(payload)};
}

StateKey SetBackend::transition_impl(const StateKey& state,
                                     const LexiconElement& element) const {
  ByteReader r(state.payload);
  const std::uint8_t phase = r.u8();
  const std::uint32_t n = r.u32();
  std::vector<SymbolId> members(n);
  for (auto& m : members) m = r.u32();
  if (phase == kDone)
    throw MalformedSerialization(0, "element after eos");

  std::string payload;
  ByteWriter w(payload);
  if (element.symbol == alphabet_.eos()) {
    w.u8(kDone);
  } else {
    if (std::binary_search(members.begin(), members.end(), element.symbol))
      throw MalformedSerialization(0, "duplicate set element " +
                                          alphabet_.name(element.symbol));
    members.insert(std::upper_bound(members.begin(), members.end(), element.symbol),
                   element.symbol);
    w.u8(kOpen);
  }
  w.u32(static_cast<std::uint32_t>(members.size()));
  for (SymbolId m : members) w.u32(m);
  return {StructureKind::Set, std::move(payload)};
}

StructureInstance SetBackend::deserialize(const Serialization& a) const {
  if (const auto bad = eos_violation(a, alphabet_))
    throw MalformedSerialization(*bad, "eos must appear exactly once, at the end");
  std::vector<std::string> elems;
  for (std::size_t i = 0; i + 1 < a.elements.size(); ++i) {
    const auto& name = alphabet_.name(a.elements[i].symbol);
    if (std::find(elems.begin(), elems.end(), name) != elems.end())
      throw MalformedSerialization(i, "duplicate set element " + name);
    elems.push_back(name);
  }
  return SetInstance::of(std::move(elems));
}

double SetBackend::count_serializations(const StructureInstance& x) const {
  const auto& set = std::get<SetInstance>(x);
  double count = 1.0;
  for (std::size_t i = 2; i <= set.elements.size(); ++i) count *= static_cast<double>(i);
  return count;
}

std::vector<Serialization> SetBackend::enumerate_serializations(
    const StructureInstance& x, std::uint64_t bound) const {
  const auto& set = std::get<SetInstance>(x);
  const double count = count_serializations(x);
  if (count > static_cast<double>(bound)) throw EnumerationTooLarge(count, true);

  std::vector<SymbolId> ids;
  ids.reserve(set.elements.size());
  for (const auto& name : set.elements) ids.push_back(alphabet_.id(name));
  std::sort(ids.begin(), ids.end());

  std::vector<Serialization> out;
  do {
    Serialization a;
    a.elements.reserve(ids.size() + 1);
    for (SymbolId id : ids) a.elements.push_back(LexiconElement::categorical(id));
    a.elements.push_back(LexiconElement::categorical(alphabet_.eos()));
    out.push_back(std::move(a));
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

std::vector<LexiconElement> SetBackend::candidate_next_elements(
    const StructureInstance& x, const StateKey&,
    std::span<const LexiconElement> prefix) const {
  const auto& set = std::get<SetInstance>(x);
  std::vector<SymbolId> remaining;
  remaining.reserve(set.elements.size());
  for (const auto& name : set.elements) remaining.push_back(alphabet_.id(name));
  std::sort(remaining.begin(), remaining.end());

  for (const auto& element : prefix) {
    if (element.symbol == alphabet_.eos())
      throw DeadEnd("prefix already terminated");
    const auto it = std::find(remaining.begin(), remaining.end(), element.symbol);
    if (it == remaining.end())
      throw DeadEnd("prefix element " + alphabet_.name(element.symbol) +
                    " not available in the set");
    remaining.erase(it);
  }

  std::vector<LexiconElement> candidates;
  if (remaining.empty()) {
    candidates.push_back(LexiconElement::categorical(alphabet_.eos()));
  } else {
    candidates.reserve(remaining.size());
    for (SymbolId id : remaining) candidates.push_back(LexiconElement::categorical(id));
  }
  return candidates;
}

}  // namespace seriate
