#include <cmath>

#include "doctest.h"
#include "testutil.hpp"

using namespace seriate;
using namespace testutil;

TEST_CASE("alphabet basics") {
  Alphabet a;
  CHECK(a.size() == 1);
  CHECK(a.name(a.eos()) == "eos");
  CHECK_FALSE(a.value_carrying(a.eos()));
  const SymbolId x = a.add("x", true);
  CHECK(a.id("x") == x);
  CHECK(a.value_carrying(x));
  CHECK_THROWS_AS(a.add("x", false), DuplicateName);
  CHECK_THROWS_AS(a.id("missing"), UnknownSymbol);
}

TEST_CASE("lexicon element invariants") {
  CHECK_THROWS_AS(LexiconElement::valued(1, std::nan("")), Error);
  const LexiconElement a = LexiconElement::valued(1, 0.5);
  const LexiconElement b = LexiconElement::valued(1, 0.5);
  const LexiconElement c = LexiconElement::valued(1, 0.5 + 1e-17);
  CHECK(a == b);
  CHECK(a == c);  // same double after rounding
  CHECK_FALSE(a == LexiconElement::valued(1, 0.25));
  CHECK(LexiconElement::categorical(0) < LexiconElement::categorical(1));
  CHECK(LexiconElement::valued(1, -1.0) < LexiconElement::valued(1, 2.0));
}

TEST_CASE("serialization eos validation") {
  SetBackend backend({"A", "B"});
  const auto& al = backend.alphabet();
  CHECK_FALSE(eos_violation(seq_of(al, {"A", "eos"}), al).has_value());
  CHECK(eos_violation(seq_of(al, {"A"}), al).has_value());
  CHECK(eos_violation(seq_of(al, {"eos", "A", "eos"}), al).has_value());
  CHECK(eos_violation(Serialization{}, al).has_value());
}

TEST_CASE("set transition: single step from the initial state") {
  SetBackend backend({"A", "B", "C"});
  const StateKey s0 = backend.initial_state();
  const StateKey s1 =
      transition(backend, s0, LexiconElement::categorical(backend.alphabet().id("A")));
  CHECK_FALSE(s0 == s1);
  // Same multiset, same state.
  const StateKey s1_again =
      transition(backend, s0, LexiconElement::categorical(backend.alphabet().id("A")));
  CHECK(s1 == s1_again);
}

TEST_CASE("set transition commutes over element order") {
  SetBackend backend({"A", "B", "C"});
  const auto& al = backend.alphabet();
  const StateKey s0 = backend.initial_state();
  const auto B = LexiconElement::categorical(al.id("B"));
  const auto C = LexiconElement::categorical(al.id("C"));
  CHECK(transition(backend, transition(backend, s0, B), C) ==
        transition(backend, transition(backend, s0, C), B));
}

TEST_CASE("ordered-tree transition distinguishes sibling orders") {
  // Enumerate the states of all 2-leaf ordered trees and assert distinctness.
  TreeBackend backend({"A", "B", "C"}, true);
  const auto& al = backend.alphabet();
  for (const std::string& first : {"B", "C"}) {
    for (const std::string& second : {"B", "C"}) {
      if (first == second) continue;
      const auto states_fwd =
          replay_states(backend, seq_of(al, {"A", "(", first, second, ")", "eos"}));
      const auto states_rev =
          replay_states(backend, seq_of(al, {"A", "(", second, first, ")", "eos"}));
      CHECK_FALSE(states_fwd[4] == states_rev[4]);  // after both siblings
    }
  }
}

TEST_CASE("transition rejects foreign states and symbols") {
  SetBackend set_backend({"A"});
  TreeBackend tree_backend({"A"}, false);
  const StateKey tree_state = tree_backend.initial_state();
  CHECK_THROWS_AS(
      transition(set_backend, tree_state, LexiconElement::categorical(0)),
      BackendMismatch);
  CHECK_THROWS_AS(transition(set_backend, set_backend.initial_state(),
                             LexiconElement::categorical(99)),
                  UnknownSymbol);
}

TEST_CASE("replay_states shape and prefix agreement") {
  SetBackend backend({"A", "B"});
  const auto& al = backend.alphabet();
  const auto empty = replay_states(backend, Serialization{});
  CHECK(empty.size() == 1);
  CHECK(empty[0] == backend.initial_state());

  const auto ab = replay_states(backend, seq_of(al, {"A", "B", "eos"}));
  const auto ba = replay_states(backend, seq_of(al, {"B", "A", "eos"}));
  CHECK(ab.size() == 4);
  CHECK(ab[2] == ba[2]);       // both encode {A,B}
  CHECK_FALSE(ab[1] == ba[1]);
}

TEST_CASE("tree replay: state before a sibling encodes parent path and seen sibling") {
  TreeBackend backend({"A", "B", "C", "D"}, false);
  const auto& al = backend.alphabet();
  const auto with_c = replay_states(backend, seq_of(al, {"A", "(", "B", "C", ")", "eos"}));
  const auto with_d = replay_states(backend, seq_of(al, {"A", "(", "B", "D", ")", "eos"}));
  // After [A,(,B] the state does not depend on the upcoming sibling...
  CHECK(with_c[3] == with_d[3]);
  // ...but it does encode B: a different first sibling gives a different state.
  const auto with_cb = replay_states(backend, seq_of(al, {"A", "(", "C", "B", ")", "eos"}));
  CHECK_FALSE(with_c[3] == with_cb[3]);
}

TEST_CASE("measure_weight") {
  SetBackend backend({"A", "B"});
  const StateKey s = backend.initial_state();
  const SymbolId A = backend.alphabet().id("A");
  const SymbolId B = backend.alphabet().id("B");

  CHECK(measure_weight(SamplingMeasure::uniform(), s, A) == 1.0);

  SamplingMeasure table = SamplingMeasure::table();
  table.set_weight(s, A, 2.0);
  CHECK(measure_weight(table, s, A) == 2.0);
  CHECK_THROWS_AS(measure_weight(table, s, B), MissingWeight);

  CHECK_THROWS_AS(table.set_weight(s, B, 0.0), Error);  // strictly positive
  CHECK_THROWS_AS(SamplingMeasure::biased_front(0.0), Error);
}

TEST_CASE("state sufficiency: equal states imply equal candidate sets") {
  // Within each enumerable instance, group equal-length prefixes by replayed
  // state and require identical next-element sets (from the enumeration).
  Philox rng(11);
  SetBackend sets({"A", "B", "C", "D"});
  TreeBackend trees({"A", "B"}, false);

  const auto check_instance = [](const StructureBackend& backend,
                                 const StructureInstance& x) {
    const auto fiber = backend.enumerate_serializations(x, 100000);
    // prefix length -> state -> set of next elements
    std::map<std::pair<std::size_t, StateKey>, std::set<std::string>> by_state;
    for (const auto& a : fiber) {
      const auto states = replay_states(backend, a);
      for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        std::string key;
        ByteWriter w(key);
        w.u32(a.elements[t].symbol);
        if (a.elements[t].value) w.f64_bits(*a.elements[t].value);
        by_state[{t, states[t]}].insert(key);
      }
    }
    // Recompute per prefix and compare against the grouped union: every
    // prefix replaying to the same state must see the same candidates.
    for (const auto& a : fiber) {
      const auto states = replay_states(backend, a);
      for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        std::vector<LexiconElement> prefix(a.elements.begin(),
                                           a.elements.begin() + static_cast<std::ptrdiff_t>(t));
        const auto candidates = backend.candidate_next_elements(x, states[t], prefix);
        std::set<std::string> got;
        for (const auto& e : candidates) {
          std::string key;
          ByteWriter w(key);
          w.u32(e.symbol);
          if (e.value) w.f64_bits(*e.value);
          got.insert(key);
        }
        CHECK(got == by_state.at({t, states[t]}));
      }
    }
  };

  for (int i = 0; i < 10; ++i) check_instance(sets, random_set(rng, {"A", "B", "C", "D"}, 4));
  for (int i = 0; i < 10; ++i) check_instance(trees, random_tree(rng, {"A", "B"}, 5, false));
}
