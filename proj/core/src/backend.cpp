#include "seriate/backend.hpp"

namespace seriate {

const char* to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::Set: return "set";
    case StructureKind::OrderedTree: return "ordered-tree";
    case StructureKind::UnorderedTree: return "unordered-tree";
    case StructureKind::Series: return "series";
    case StructureKind::Propositional: return "propositional";
  }
  return "?";
}

StateKey transition(const StructureBackend& backend, const StateKey& state,
                    const LexiconElement& element) {
  if (state.tag != backend.kind())
    throw BackendMismatch(std::string("state belongs to a ") + to_string(state.tag) +
                          " backend, not " + to_string(backend.kind()));
  if (element.symbol >= backend.alphabet().size())
    throw UnknownSymbol("id " + std::to_string(element.symbol));
  if (element.value.has_value() != backend.alphabet().value_carrying(element.symbol))
    throw Error("element value presence contradicts the alphabet declaration for " +
                backend.alphabet().name(element.symbol));
  return backend.transition_impl(state, element);
}

std::vector<StateKey> replay_states(const StructureBackend& backend,
                                    const Serialization& a) {
  std::vector<StateKey> states;
  states.reserve(a.elements.size() + 1);
  states.push_back(backend.initial_state());
  for (const auto& element : a.elements)
    states.push_back(transition(backend, states.back(), element));
  return states;
}

SamplingMeasure default_measure(const StructureBackend& backend, MeasureMode mode) {
  if (mode == MeasureMode::Conditional && !backend.front_symbols().empty())
    return SamplingMeasure::biased_front(0.5);
  return SamplingMeasure::uniform();
}

}  // namespace seriate
