// Acceptance suite: one criterion per section, one PASS/FAIL line each,
// nonzero exit when anything fails.  Thresholds are pinned in code; the suite
// drives the library and (for the determinism criterion) the CLI binary named
// by the SERIATE_CLI environment variable.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "seriate/checkpoint.hpp"
#include "seriate/datagen.hpp"
#include "seriate/dataio.hpp"
#include "seriate/density.hpp"
#include "seriate/propositional_backend.hpp"
#include "seriate/series_backend.hpp"
#include "seriate/set_backend.hpp"
#include "seriate/train.hpp"
#include "seriate/tree_backend.hpp"

namespace fs = std::filesystem;
using namespace seriate;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
  void note(const std::string& message) {
    if (ok && detail.empty()) detail = message;
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// shared helpers

std::string ordering_key(const Serialization& a) {
  std::string key;
  for (const auto& e : a.elements) {
    key += std::to_string(e.symbol);
    if (e.value) key += ":" + format_double(*e.value);
    key += ",";
  }
  return key;
}

double total_variation(const std::map<std::string, double>& p,
                       const std::map<std::string, double>& q) {
  std::set<std::string> keys;
  for (const auto& [k, v] : p) keys.insert(k);
  for (const auto& [k, v] : q) keys.insert(k);
  double tv = 0.0;
  for (const auto& k : keys) {
    const double pv = p.contains(k) ? p.at(k) : 0.0;
    const double qv = q.contains(k) ? q.at(k) : 0.0;
    tv += std::abs(pv - qv);
  }
  return tv / 2.0;
}

SetInstance random_set(Philox& rng, const std::vector<std::string>& universe,
                       std::size_t max_size) {
  const std::size_t size = rng.below(std::min(max_size, universe.size()) + 1);
  std::vector<std::string> pool = universe;
  std::vector<std::string> chosen;
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t pick = rng.below(pool.size());
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return SetInstance::of(std::move(chosen));
}

SeriesInstance random_series(Philox& rng, std::size_t k, std::size_t l, std::size_t d) {
  SeriesInstance s;
  for (std::size_t i = 0; i < k; ++i) s.variables.push_back("v" + std::to_string(i + 1));
  s.values.assign(k, std::vector<double>(l));
  for (auto& row : s.values)
    for (auto& v : row) v = 2.0 * rng.uniform() - 1.0;
  for (std::size_t i = 0; i < d; ++i)
    s.input_features["x" + std::to_string(i + 1)] = 2.0 * rng.uniform() - 1.0;
  return s;
}

PropositionalInstance random_record(Philox& rng, std::size_t numeric,
                                    std::size_t categorical, bool labeled) {
  PropositionalInstance r;
  for (std::size_t i = 0; i < numeric; ++i)
    r.numeric_features["n" + std::to_string(i + 1)] = 2.0 * rng.uniform() - 1.0;
  for (std::size_t i = 0; i < categorical; ++i)
    r.categorical_features["c" + std::to_string(i + 1)] =
        rng.below(2) == 0 ? "c" + std::to_string(i + 1) + "_lo"
                          : "c" + std::to_string(i + 1) + "_hi";
  if (labeled) r.label = rng.below(2) == 0 ? "cls_a" : "cls_b";
  return r;
}

BackendSchema record_schema(std::size_t numeric, std::size_t categorical, bool labeled) {
  BackendSchema schema;
  schema.kind = StructureKind::Propositional;
  for (std::size_t i = 0; i < numeric; ++i)
    schema.numeric_names.push_back("n" + std::to_string(i + 1));
  for (std::size_t i = 0; i < categorical; ++i)
    schema.categorical_domains["c" + std::to_string(i + 1)] = {
        "c" + std::to_string(i + 1) + "_lo", "c" + std::to_string(i + 1) + "_hi"};
  if (labeled) schema.label_classes = {"cls_a", "cls_b"};
  return schema;
}

// All unordered labeled trees with exactly n nodes over the label set;
// children kept in canonical (sorted-encoding) order so every tree appears
// once.
std::vector<TreeNode> all_trees(std::size_t n, const std::vector<std::string>& labels,
                                const TreeBackend& canon) {
  static std::map<std::size_t, std::vector<TreeNode>> cache;
  const auto hit = cache.find(n);
  if (hit != cache.end()) return hit->second;

  std::vector<TreeNode> result;
  if (n == 1) {
    for (const auto& label : labels) result.push_back(TreeNode{label, {}});
  } else {
    // Child multisets: combinations of smaller trees with total size n-1,
    // non-decreasing in canonical encoding to avoid duplicates.
    std::vector<TreeNode> pool;  // all trees with < n nodes
    std::vector<std::size_t> pool_sizes;
    for (std::size_t moves = 1; moves < n; ++moves)
      for (const auto& tree : all_trees(moves, labels, canon)) {
        pool.push_back(tree);
        pool_sizes.push_back(moves);
      }
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return canon.encode_subtree(pool[a]) < canon.encode_subtree(pool[b]);
    });

    std::vector<std::size_t> chosen;
    const auto rec = [&](std::size_t min_index, std::size_t remaining,
                         const auto& self) -> void {
      if (remaining == 0) {
        for (const auto& label : labels) {
          TreeNode node{label, {}};
          for (std::size_t idx : chosen) node.children.push_back(pool[order[idx]]);
          result.push_back(std::move(node));
        }
        return;
      }
      for (std::size_t i = min_index; i < order.size(); ++i) {
        if (pool_sizes[order[i]] > remaining) continue;
        chosen.push_back(i);
        self(i, remaining - pool_sizes[order[i]], self);
        chosen.pop_back();
      }
    };
    rec(0, n - 1, rec);
  }
  cache[n] = result;
  return result;
}

// ---------------------------------------------------------------------------
// criterion 1: sampler correctness on sets

void criterion_sampler_sets(Check& check) {
  const std::vector<std::string> universe{"A", "B", "C", "D", "E", "F"};
  Philox rng(1001);
  for (std::size_t n = 2; n <= 6; ++n) {
    SetBackend backend(universe);
    const SetInstance x =
        SetInstance::of({universe.begin(), universe.begin() + static_cast<long>(n)});
    double log_uniform = 0.0;
    std::size_t orderings = 1;
    for (std::size_t i = 2; i <= n; ++i) {
      log_uniform -= std::log(static_cast<double>(i));
      orderings *= i;
    }
    // 1e5 draws as stated; n = 6 runs at 5e5 because the expected TV of a
    // *perfect* sampler over 720 cells at 1e5 draws is ~0.034 (see the
    // decisions ledger note on criterion 1).
    const std::size_t draws = n == 6 ? 500000 : 100000;

    SamplerConfig cfg;
    cfg.mode = SamplerConfig::Mode::Streaming;
    std::map<std::string, double> freq;
    const double unit = 1.0 / static_cast<double>(draws);
    for (std::size_t i = 0; i < draws; ++i) {
      const Serialization a = sample_serialization(backend, x, cfg, rng);
      check.require(std::abs(a.path_log_prob() - log_uniform) < 1e-12,
                    "path log probability deviates from -log(n!) at n=" +
                        std::to_string(n));
      freq[ordering_key(a)] += unit;
    }
    check.require(freq.size() == orderings,
                  "not all orderings reached at n=" + std::to_string(n));
    double tv = 0.0;
    const double uniform = 1.0 / static_cast<double>(orderings);
    for (const auto& [key, f] : freq) tv += std::abs(f - uniform);
    tv += uniform * static_cast<double>(orderings - freq.size());
    tv /= 2.0;
    check.require(tv < 0.02, "TV from uniform is " + fmt(tv) + " at n=" +
                                 std::to_string(n) + " (" + std::to_string(draws) +
                                 " draws)");
    if (n == 6) check.note("n=6 TV " + fmt(tv) + " at 500000 draws");
  }
}

// ---------------------------------------------------------------------------
// criterion 2: streaming == enumerating

void criterion_streaming_enumerating(Check& check) {
  Philox rng(2002);
  const std::size_t draws = 100000;
  const std::uint64_t fiber_cap = 64;

  const auto compare = [&](const StructureBackend& backend, const StructureInstance& x,
                           const std::string& tag) {
    std::map<std::string, double> freq_enum, freq_stream;
    const double unit = 1.0 / static_cast<double>(draws);
    SamplerConfig enum_cfg, stream_cfg;
    enum_cfg.mode = SamplerConfig::Mode::Enumerating;
    stream_cfg.mode = SamplerConfig::Mode::Streaming;
    for (std::size_t i = 0; i < draws; ++i)
      freq_enum[ordering_key(sample_serialization(backend, x, enum_cfg, rng))] += unit;
    for (std::size_t i = 0; i < draws; ++i)
      freq_stream[ordering_key(sample_serialization(backend, x, stream_cfg, rng))] += unit;
    const double tv = total_variation(freq_enum, freq_stream);
    check.require(tv < 0.02, tag + ": two-sample TV " + fmt(tv));
  };

  const std::vector<std::string> universe{"A", "B", "C", "D"};
  SetBackend sets(universe);
  for (int i = 0; i < 20; ++i) {
    SetInstance x = random_set(rng, universe, 4);
    while (sets.count_serializations(x) > fiber_cap) x = random_set(rng, universe, 4);
    compare(sets, x, "set");
  }

  for (const bool ordered : {false, true}) {
    TreeBackend trees({"A", "B"}, ordered);
    for (int i = 0; i < 20; ++i) {
      TreeInstance x = generate_random_trees({"A", "B"}, 1, 6, rng, ordered).front();
      while (trees.count_serializations(x) > fiber_cap)
        x = generate_random_trees({"A", "B"}, 1, 6, rng, ordered).front();
      compare(trees, x, ordered ? "ordered-tree" : "unordered-tree");
    }
  }

  for (int i = 0; i < 20; ++i) {
    const std::size_t k = 1 + rng.below(2);
    const std::size_t l = 1 + rng.below(2);
    const std::size_t d = rng.below(2);
    SeriesInstance x = random_series(rng, k, l, d);
    SeriesBackend backend(x.variables, [&] {
      std::vector<std::string> names;
      for (const auto& [name, v] : x.input_features) names.push_back(name);
      return names;
    }());
    if (backend.count_serializations(x) > fiber_cap) {
      --i;
      continue;
    }
    compare(backend, x, "series");
  }

  const auto prop = make_backend(record_schema(2, 1, true));
  for (int i = 0; i < 20; ++i) {
    const PropositionalInstance x = random_record(rng, 2, 1, true);
    compare(*prop, x, "propositional");  // 4 blocks -> fiber 24
  }
}

// ---------------------------------------------------------------------------
// criterion 3: round trip on 1000 instances per backend

void criterion_round_trip(Check& check) {
  Philox rng(3003);
  SamplerConfig cfg;
  std::size_t failures = 0;

  const std::vector<std::string> universe{"A", "B", "C", "D", "E"};
  SetBackend sets(universe);
  for (int i = 0; i < 1000; ++i) {
    const SetInstance x = random_set(rng, universe, 5);
    if (!(std::get<SetInstance>(sets.deserialize(
              sample_serialization(sets, x, cfg, rng))) == x))
      ++failures;
  }

  for (const bool ordered : {false, true}) {
    TreeBackend trees({"A", "B", "C"}, ordered);
    for (int i = 0; i < 1000; ++i) {
      const TreeInstance x =
          generate_random_trees({"A", "B", "C"}, 1, 10, rng, ordered).front();
      if (!(std::get<TreeInstance>(trees.deserialize(
                sample_serialization(trees, x, cfg, rng))) == x))
        ++failures;
    }
  }

  for (int i = 0; i < 1000; ++i) {
    const SeriesInstance x = random_series(rng, 1 + rng.below(3), 1 + rng.below(4),
                                           rng.below(3));
    SeriesBackend backend(x.variables, [&] {
      std::vector<std::string> names;
      for (const auto& [name, v] : x.input_features) names.push_back(name);
      return names;
    }());
    if (!(std::get<SeriesInstance>(backend.deserialize(
              sample_serialization(backend, x, cfg, rng))) == x))
      ++failures;
  }

  const auto prop = make_backend(record_schema(3, 2, true));
  for (int i = 0; i < 1000; ++i) {
    const PropositionalInstance x = random_record(rng, 3, 2, rng.below(2) == 0);
    if (!(std::get<PropositionalInstance>(prop->deserialize(
              sample_serialization(*prop, x, cfg, rng))) == x))
      ++failures;
  }

  check.require(failures == 0, std::to_string(failures) + " round-trip failures");
}

// ---------------------------------------------------------------------------
// criterion 4: state soundness

// Test-local normal forms: independent re-derivations of "the partial
// structure built so far", order-normalized exactly where the structure's
// invariances demand it.  They share no code with the backends' state
// encodings.
namespace normal_forms {

std::string set_nf(const Alphabet& al, std::span<const LexiconElement> prefix) {
  std::vector<std::string> symbols;
  bool done = false;
  for (const auto& e : prefix) {
    if (e.symbol == al.eos())
      done = true;
    else
      symbols.push_back(al.name(e.symbol));
  }
  std::sort(symbols.begin(), symbols.end());
  std::string nf = done ? "!" : "?";
  for (const auto& s : symbols) nf += s + ",";
  return nf;
}

std::string tree_nf(const Alphabet& al, std::span<const LexiconElement> prefix,
                    bool ordered) {
  struct Level {
    std::string parent;
    std::vector<std::string> completed;
    std::string pending;  // empty: none
  };
  const auto subtree = [&](const std::string& label, std::vector<std::string> children) {
    if (!ordered) std::sort(children.begin(), children.end());
    std::string nf = label + "[";
    for (const auto& c : children) nf += c + ",";
    return nf + "]";
  };

  std::vector<Level> stack{{"<top>", {}, ""}};
  bool done = false;
  for (const auto& e : prefix) {
    const std::string& name = al.name(e.symbol);
    if (name == "(") {
      Level child{stack.back().pending, {}, ""};
      stack.back().pending.clear();
      stack.push_back(std::move(child));
    } else if (name == ")") {
      Level top = std::move(stack.back());
      stack.pop_back();
      if (!top.pending.empty()) top.completed.push_back(subtree(top.pending, {}));
      stack.back().completed.push_back(subtree(top.parent, std::move(top.completed)));
    } else if (name == "eos") {
      Level& top = stack.back();
      if (!top.pending.empty()) {
        top.completed.push_back(subtree(top.pending, {}));
        top.pending.clear();
      }
      done = true;
    } else {
      Level& top = stack.back();
      if (!top.pending.empty()) top.completed.push_back(subtree(top.pending, {}));
      top.pending = name;
    }
  }
  std::string nf = done ? "!" : "?";
  for (const auto& level : stack) {
    auto completed = level.completed;
    if (!ordered) std::sort(completed.begin(), completed.end());
    nf += "{" + level.parent + ":";
    for (const auto& c : completed) nf += c + ",";
    nf += "^" + level.pending + "}";
  }
  return nf;
}

std::string series_nf(const Alphabet& al, std::span<const LexiconElement> prefix) {
  std::vector<std::string> features;
  std::vector<std::vector<std::string>> columns(1);
  bool done = false;
  for (const auto& e : prefix) {
    const std::string& name = al.name(e.symbol);
    if (name == "AdvanceTime") {
      columns.emplace_back();
    } else if (name == "eos") {
      done = true;
    } else if (name.starts_with("AddFeature(")) {
      features.push_back(name + "=" + format_double(*e.value));
    } else {
      columns.back().push_back(name + "=" + format_double(*e.value));
    }
  }
  std::sort(features.begin(), features.end());
  std::string nf = done ? "!" : "?";
  for (const auto& f : features) nf += f + ",";
  for (auto& column : columns) {
    std::sort(column.begin(), column.end());
    nf += "|";
    for (const auto& entry : column) nf += entry + ",";
  }
  return nf;
}

std::string record_nf(const Alphabet& al, std::span<const LexiconElement> prefix) {
  std::vector<std::string> completed;
  std::string pending;
  bool done = false;
  for (const auto& e : prefix) {
    const std::string& name = al.name(e.symbol);
    if (e.value) {
      completed.push_back(name + "=" + format_double(*e.value));
    } else if (name == "eos") {
      done = true;
    } else if (!pending.empty()) {
      completed.push_back(pending + "=" + name);
      pending.clear();
    } else {
      pending = name;
    }
  }
  std::sort(completed.begin(), completed.end());
  std::string nf = done ? "!" : "?";
  for (const auto& c : completed) nf += c + ",";
  return nf + "^" + pending;
}

}  // namespace normal_forms

void criterion_state_soundness(Check& check) {
  std::size_t instances_checked = 0;

  // Two brute-force relations bound the StateKey partition from both sides.
  //
  //   * Sufficiency (pure oracle): prefixes sharing a StateKey must admit
  //     identical continuation sets in EVERY instance of the family.  A
  //     coarser-than-allowed state fails this immediately.
  //   * No over-splitting: prefixes that are equivalent under the structure's
  //     invariances — decided by independent test-local normal-form parsers,
  //     not by the backends — must share a StateKey byte for byte.
  //
  // Family-wide continuation equality alone cannot drive the second
  // direction: at the family's size boundary, genuinely inequivalent
  // prefixes can be forced to identical continuations everywhere (e.g. two
  // tree prefixes whose committed-leaf/pending roles are swapped, both about
  // to close; the separating instance needs one node more than the bound).
  // The suite therefore also requires that any same-witness state split is
  // justified by a normal-form difference, which the NF => state check below
  // enforces.
  struct PrefixRecord {
    std::size_t length = 0;
    StateKey state{StructureKind::Set, ""};
    std::string normal_form;
    // (instance index, canonical continuation-set string) per instance in
    // which the prefix occurs, in instance order.
    std::vector<std::pair<std::size_t, std::string>> witness;
  };

  using NormalForm =
      std::function<std::string(const Alphabet&, std::span<const LexiconElement>)>;

  const auto check_family = [&](const StructureBackend& backend,
                                const std::vector<StructureInstance>& family,
                                const NormalForm& normal_form, const std::string& tag) {
    std::map<std::string, PrefixRecord> prefixes;

    for (std::size_t idx = 0; idx < family.size(); ++idx) {
      const auto fiber = backend.enumerate_serializations(family[idx], 1000000);
      ++instances_checked;

      // Per-instance continuation sets, keyed by prefix content.
      std::map<std::string, std::pair<PrefixRecord*, std::set<std::string>>> local;
      for (const auto& a : fiber) {
        const auto states = replay_states(backend, a);
        std::string prefix_key;
        for (std::size_t t = 0; t < a.elements.size(); ++t) {
          std::string suffix_key;
          for (std::size_t u = t; u < a.elements.size(); ++u)
            suffix_key += ordering_key(Serialization{{a.elements[u]}, std::nullopt});
          auto [it, fresh] = local.try_emplace(prefix_key, nullptr,
                                               std::set<std::string>{});
          if (fresh) {
            auto [global, inserted] = prefixes.try_emplace(
                prefix_key,
                PrefixRecord{t, states[t],
                             normal_form(backend.alphabet(),
                                         std::span(a.elements.data(), t)),
                             {}});
            if (!inserted)
              check.require(global->second.state == states[t],
                            tag + ": one prefix replayed to two states");
            it->second.first = &global->second;
          }
          it->second.second.insert(suffix_key);
          prefix_key += ordering_key(Serialization{{a.elements[t]}, std::nullopt});
        }
      }
      for (auto& [key, entry] : local) {
        std::string joined;
        for (const auto& c : entry.second) joined += c + ";";
        entry.first->witness.emplace_back(idx, std::move(joined));
      }

      // Constraint matrix equals brute force on the whole fiber.
      const auto fast = build_constraint_matrix(backend, fiber);
      ConstraintMatrix slow;
      slow.batch_size = fiber.size();
      std::vector<std::vector<StateKey>> states;
      for (const auto& a : fiber) states.push_back(replay_states(backend, a));
      for (std::uint32_t j = 0; j < fiber.size(); ++j)
        for (std::uint32_t k = j + 1; k < fiber.size(); ++k)
          for (std::uint32_t t = 0;
               t < std::min(states[j].size(), states[k].size()); ++t)
            if (states[j][t] == states[k][t]) slow.entries.push_back({j, k, t});
      std::sort(slow.entries.begin(), slow.entries.end(),
                [](const ConstraintEntry& a, const ConstraintEntry& b) {
                  if (a.t != b.t) return a.t < b.t;
                  if (a.j != b.j) return a.j < b.j;
                  return a.k < b.k;
                });
      check.require(fast.entries == slow.entries,
                    tag + ": constraint matrix disagrees with the pairwise brute force");
    }

    // (a) equal normal form => equal StateKey (no over-splitting);
    // (b) equal StateKey => equal witness and equal normal form (sufficiency
    //     and no over-merging).
    std::map<std::string, std::set<std::string>> nf_to_states;
    std::map<std::string, std::set<std::string>> state_to_witnesses;
    std::map<std::string, std::set<std::string>> state_to_nfs;
    for (const auto& [key, record] : prefixes) {
      std::string witness_id = std::to_string(record.length) + "#";
      for (const auto& [idx, conts] : record.witness)
        witness_id += std::to_string(idx) + ":" + conts + "|";
      std::string state_id = std::to_string(record.length) + "#";
      state_id += record.state.payload;
      nf_to_states[std::to_string(record.length) + "#" + record.normal_form]
          .insert(state_id);
      state_to_witnesses[state_id].insert(witness_id);
      state_to_nfs[state_id].insert(record.normal_form);
    }
    for (const auto& [nf, states] : nf_to_states)
      check.require(states.size() == 1,
                    tag + ": equivalent prefixes mapped to different StateKeys");
    for (const auto& [state, witnesses] : state_to_witnesses)
      check.require(witnesses.size() == 1,
                    tag + ": one StateKey covers prefixes with different continuations");
    for (const auto& [state, nfs] : state_to_nfs)
      check.require(nfs.size() == 1,
                    tag + ": one StateKey covers non-equivalent prefixes");
  };

  // Sets: all subsets of a 5-symbol universe, as one family.
  const std::vector<std::string> universe{"A", "B", "C", "D", "E"};
  SetBackend sets(universe);
  {
    std::vector<StructureInstance> family;
    for (int mask = 0; mask < 32; ++mask) {
      std::vector<std::string> elems;
      for (int b = 0; b < 5; ++b)
        if (mask & (1 << b)) elems.push_back(universe[static_cast<std::size_t>(b)]);
      family.push_back(SetInstance::of(std::move(elems)));
    }
    check_family(sets, family, normal_forms::set_nf, "set");
  }

  // Unordered trees: every labeled tree with up to 6 nodes over {A, B}.
  TreeBackend trees({"A", "B"}, false);
  {
    std::vector<StructureInstance> family;
    for (std::size_t n = 1; n <= 6; ++n)
      for (const auto& root : all_trees(n, {"A", "B"}, trees))
        family.push_back(TreeInstance{root, false});
    check_family(trees, family,
                 [](const Alphabet& al, std::span<const LexiconElement> prefix) {
                   return normal_forms::tree_nf(al, prefix, false);
                 },
                 "unordered-tree");
  }

  // Series: k <= 2, l <= 3, d <= 2, three seeded value draws per shape; one
  // family per variable count (the variable set fixes the backend).
  Philox rng(4004);
  for (std::size_t k = 1; k <= 2; ++k) {
    std::vector<StructureInstance> family;
    for (std::size_t l = 1; l <= 3; ++l)
      for (std::size_t d = 0; d <= 2; ++d)
        for (int seed_draw = 0; seed_draw < 3; ++seed_draw)
          family.push_back(random_series(rng, k, l, d));
    SeriesBackend backend(std::get<SeriesInstance>(family.front()).variables,
                          {"x1", "x2"});
    check_family(backend, family, normal_forms::series_nf, "series");
  }

  // Propositional: up to 4 features plus optional label, one family.
  {
    std::vector<StructureInstance> family;
    for (std::size_t numeric = 0; numeric <= 2; ++numeric)
      for (std::size_t categorical = 0; categorical <= 2; ++categorical)
        for (const bool labeled : {false, true}) {
          if (numeric + categorical == 0 && !labeled) continue;
          for (int seed_draw = 0; seed_draw < 2; ++seed_draw)
            family.push_back(random_record(rng, numeric, categorical, labeled));
        }
    const auto backend = make_backend(record_schema(2, 2, true));
    check_family(*backend, family, normal_forms::record_nf, "propositional");
  }

  check.note(std::to_string(instances_checked) + " instances");
}

// ---------------------------------------------------------------------------
// criterion 5: Eq. 2 o-independence and oracle consistency

void criterion_o_independence(Check& check) {
  SamplerConfig cfg;
  cfg.mode = SamplerConfig::Mode::Enumerating;

  // Duplicated instances make the target frequencies non-uniform.
  SetBackend sets({"A", "B", "C"});
  Dataset set_data;
  set_data.push_back({SetInstance::of({"A", "B"}), std::nullopt});
  set_data.push_back({SetInstance::of({"A", "B"}), std::nullopt});
  set_data.push_back({SetInstance::of({"A", "B", "C"}), std::nullopt});
  set_data.push_back({SetInstance::of({"C"}), std::nullopt});

  Philox rng(5005);
  const auto run_on = [&](const StructureBackend& backend, const Dataset& data) {
    const TabularSeqModel oracle = build_tabular_oracle(backend, data, cfg, 100000);
    std::map<std::string, std::size_t> counts;
    for (const auto& entry : data) ++counts[ordering_key(
        backend.enumerate_serializations(entry.instance, 100000).front())];

    for (const auto& entry : data) {
      const double freq =
          static_cast<double>(counts.at(ordering_key(
              backend.enumerate_serializations(entry.instance, 100000).front()))) /
          static_cast<double>(data.size());
      const double push = pushforward_prob(backend, entry.instance, oracle, 100000);
      check.require(std::abs(push - freq) < 1e-12,
                    "pushforward != instance frequency (" + fmt(push) + " vs " +
                        fmt(freq) + ")");
      // frac_prob identical across every property o of x.
      const auto fiber = backend.enumerate_serializations(entry.instance, 100000);
      for (const auto& o : fiber) {
        const double fp = frac_prob(backend, entry.instance, o, oracle, cfg);
        check.require(std::abs(fp - push) < 1e-12,
                      "frac_prob varies across properties (" + fmt(fp) + " vs " +
                          fmt(push) + ")");
      }
      // Recovery equals the pushforward exactly, draw by draw.
      const auto est = recover_density(backend, entry.instance, oracle, 16, cfg, rng);
      check.require(std::abs(est.estimate - push) < 1e-12,
                    "recovery deviates from the pushforward");
      check.require(est.stderr_ < 1e-12, "oracle recovery has nonzero variance");
    }
  };

  run_on(sets, set_data);

  // A value-carrying backend exercises the same identities.
  Philox value_rng(5105);
  Dataset series_data;
  series_data.push_back({random_series(value_rng, 2, 2, 1), std::nullopt});
  series_data.push_back({random_series(value_rng, 2, 2, 1), std::nullopt});
  const SeriesInstance& first = std::get<SeriesInstance>(series_data[0].instance);
  SeriesBackend series(first.variables, {"x1"});
  run_on(series, series_data);
}

// ---------------------------------------------------------------------------
// criterion 6: gradient exactness

void criterion_gradients(Check& check) {
  Philox rng(6006);
  SamplerConfig cfg;
  double worst = 0.0;

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t hidden = 2 + rng.below(7);   // H <= 8
    const std::size_t mixtures = 1 + rng.below(3); // m <= 3
    const double lambda = trial % 2 == 0 ? 0.0 : 0.25 + rng.uniform();

    std::vector<Serialization> batch;
    const Alphabet* alphabet = nullptr;
    ModelParams params;
    ConstraintMatrix constraints;

    static SetBackend sets({"A", "B", "C"});
    static SeriesBackend series({"v1"}, {"x1"});
    if (trial % 3 == 0) {
      const SeriesInstance x = random_series(rng, 1, 2, 1);  // T = 5
      batch.push_back(sample_serialization(series, x, cfg, rng));
      batch.push_back(sample_serialization(series, x, cfg, rng));
      constraints = build_constraint_matrix(series, batch);
      alphabet = &series.alphabet();
    } else {
      const SetInstance x = random_set(rng, {"A", "B", "C"}, 3);
      batch.push_back(sample_serialization(sets, x, cfg, rng));
      batch.push_back(sample_serialization(sets, x, cfg, rng));
      constraints = build_constraint_matrix(sets, batch);
      alphabet = &sets.alphabet();
    }
    params = ModelParams::init(hidden, alphabet->size(), mixtures, rng);

    Gradients grads = Gradients::zero_like(params);
    loss_grad(params, *alphabet, batch, constraints, lambda, grads);
    const Eigen::VectorXd analytic = grads.to_flat(params);

    const double h = 1e-5;
    Eigen::VectorXd flat = params.to_flat();
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      const double keep = flat(i);
      flat(i) = keep + h;
      params.from_flat(flat);
      const double up = loss(params, *alphabet, batch, constraints, lambda).total;
      flat(i) = keep - h;
      params.from_flat(flat);
      const double down = loss(params, *alphabet, batch, constraints, lambda).total;
      flat(i) = keep;
      params.from_flat(flat);
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic(i) - numeric) /
                         std::max({1.0, std::abs(analytic(i)), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  check.require(worst < 1e-4, "max relative gradient error " + fmt(worst));
  check.note("max relative error " + fmt(worst));
}

// ---------------------------------------------------------------------------
// criterion 7: memorization optimum

void criterion_memorization(Check& check) {
  SetBackend backend({"A", "B"});
  const auto& al = backend.alphabet();
  Dataset data{{SetInstance::of({"A", "B"}), std::nullopt}};

  TrainConfig cfg;
  cfg.hidden_dim = 16;
  cfg.learning_rate = 0.005;
  cfg.batch_instances = 4;
  cfg.serializations_per_instance = 16;
  cfg.max_steps = 2000;
  cfg.seed = 7;

  const TrainResult result = train(backend, data, nullptr, cfg);

  SamplerConfig sampler;
  const TabularSeqModel oracle = build_tabular_oracle(backend, data, sampler, 100);
  Serialization ab, ba;
  ab.elements = {LexiconElement::categorical(al.id("A")),
                 LexiconElement::categorical(al.id("B")),
                 LexiconElement::categorical(al.eos())};
  ba.elements = {ab.elements[1], ab.elements[0], ab.elements[2]};
  const double optimum = -oracle.log_prob(ab);

  const double nll_ab = sequence_nll(result.params, al, ab);
  const double nll_ba = sequence_nll(result.params, al, ba);
  check.require(std::abs(nll_ab - optimum) < 0.05,
                "NLL([A,B,eos]) off the optimum by " + fmt(std::abs(nll_ab - optimum)));
  check.require(std::abs(nll_ba - optimum) < 0.05,
                "NLL([B,A,eos]) off the optimum by " + fmt(std::abs(nll_ba - optimum)));
  check.note("|nll - log 2| = " + fmt(std::max(std::abs(nll_ab - optimum),
                                               std::abs(nll_ba - optimum))));
}

// ---------------------------------------------------------------------------
// criterion 8: regularizer effect

void criterion_regularizer_effect(Check& check) {
  // Regularizer is exactly zero on an empty constraint matrix.
  ConstraintMatrix empty;
  check.require(regularizer({}, empty) == 0.0, "empty C gives nonzero regularizer");

  SetBackend backend({"A", "B", "C"});
  const auto& al = backend.alphabet();
  Dataset data{{SetInstance::of({"A", "B", "C"}), std::nullopt}};

  const auto mean_distance = [&](const ModelParams& params) {
    const auto fiber =
        backend.enumerate_serializations(SetInstance::of({"A", "B", "C"}), 100);
    const auto constraints = build_constraint_matrix(backend, fiber);
    std::vector<Eigen::MatrixXd> hiddens;
    for (const auto& a : fiber) hiddens.push_back(forward(params, al, a).hidden);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& entry : constraints.entries) {
      if (entry.t == 0) continue;
      total += (hiddens[entry.j].col(entry.t).normalized() -
                hiddens[entry.k].col(entry.t).normalized())
                   .norm();
      ++count;
    }
    return total / static_cast<double>(count);
  };

  TrainConfig cfg;
  cfg.hidden_dim = 12;
  cfg.max_steps = 500;
  cfg.batch_instances = 1;
  cfg.serializations_per_instance = 4;
  cfg.learning_rate = 0.01;
  cfg.seed = 17;
  TrainConfig with_reg = cfg;
  with_reg.lambda = 1.0;

  const double plain = mean_distance(train(backend, data, nullptr, cfg).params);
  const double regularized =
      mean_distance(train(backend, data, nullptr, with_reg).params);
  check.require(regularized < plain,
                "constrained distance " + fmt(regularized) + " not below " + fmt(plain));
  check.note("mean distance " + fmt(regularized) + " (lambda=1) vs " + fmt(plain) +
             " (lambda=0)");
}

// ---------------------------------------------------------------------------
// criterion 9: overfitting resistance, randomized vs canonical order

void criterion_overfitting(Check& check) {
  // Class-dependent Gaussian-ish features; 60 train and 60 test records.
  const std::size_t features = 6;
  Philox gen(9009);
  const auto make_record = [&](bool positive) {
    PropositionalInstance r;
    for (std::size_t i = 0; i < features; ++i) {
      double v = 0.0;
      for (int draws = 0; draws < 4; ++draws) v += gen.uniform() - 0.5;  // ~N(0, .29)
      const double shift = (i % 2 == 0) == positive ? 0.6 : -0.6;
      r.numeric_features["n" + std::to_string(i + 1)] = v + shift;
    }
    r.label = positive ? "cls_a" : "cls_b";
    return r;
  };
  Dataset train_data, test_data;
  for (int i = 0; i < 30; ++i) {
    train_data.push_back({make_record(true), std::nullopt});
    train_data.push_back({make_record(false), std::nullopt});
    test_data.push_back({make_record(true), std::nullopt});
    test_data.push_back({make_record(false), std::nullopt});
  }

  BackendSchema schema = record_schema(features, 0, true);
  // Keep the schema aligned with make_record's feature names.
  schema.numeric_names.clear();
  for (std::size_t i = 0; i < features; ++i)
    schema.numeric_names.push_back("n" + std::to_string(i + 1));
  const auto backend = make_backend(schema);

  const auto gap_at_5000 = [&](bool canonical) {
    TrainConfig cfg;
    cfg.hidden_dim = 48;
    cfg.mixture_components = 2;
    cfg.learning_rate = 0.002;
    cfg.batch_instances = 8;
    cfg.serializations_per_instance = 2;
    cfg.max_steps = 5000;
    cfg.seed = 29;
    cfg.sampler.canonical_order = canonical;

    const TrainResult result = train(*backend, train_data, nullptr, cfg);
    const auto nll_on = [&](const Dataset& data, std::uint64_t stream) {
      return dataset_nll(*backend, result.params, data, cfg.sampler, cfg, stream);
    };
    const double train_nll = nll_on(train_data, 1);
    const double test_nll = nll_on(test_data, 2);
    return test_nll - train_nll;
  };

  const double randomized_gap = gap_at_5000(false);
  const double canonical_gap = gap_at_5000(true);
  check.require(randomized_gap < canonical_gap,
                "randomized gap " + fmt(randomized_gap) + " not below canonical gap " +
                    fmt(canonical_gap));
  check.note("gap " + fmt(randomized_gap) + " (randomized) vs " + fmt(canonical_gap) +
             " (canonical)");
}

// ---------------------------------------------------------------------------
// criterion 10: Van der Pol generator

void criterion_vdp(Check& check) {
  VdpParams harmonic;
  harmonic.y1_0 = 1.0;
  harmonic.k = 1.0;
  harmonic.mu_y2 = 0.0;
  harmonic.mu_y3 = 0.0;
  harmonic.length = 21;
  harmonic.step_size = 0.1;
  const VdpTrajectory traj = integrate_vdp(harmonic);
  double drift = 0.0;
  for (const auto& state : traj.states) {
    const double amplitude =
        std::sqrt(state[0] * state[0] + state[3] * state[3]);
    drift = std::max(drift, std::abs(amplitude - 1.0));
  }
  check.require(drift < 1e-6, "amplitude drift " + fmt(drift));

  VdpParams coarse;
  coarse.y1_0 = 0.5;
  coarse.y2_0 = -0.3;
  coarse.y3_0 = 0.2;
  coarse.dy1_0 = 0.1;
  coarse.dy2_0 = 0.4;
  coarse.dy3_0 = -0.2;
  coarse.k = 3.0;
  coarse.mu_y2 = 2.5;
  coarse.mu_y3 = 3.5;
  coarse.length = 11;
  coarse.step_size = 0.1;
  VdpParams half = coarse;
  half.step_size = 0.05;
  half.length = 21;
  VdpParams reference = coarse;
  reference.step_size = 0.0125;
  reference.length = 81;

  const auto tc = integrate_vdp(coarse);
  const auto th = integrate_vdp(half);
  const auto tr = integrate_vdp(reference);
  double err_coarse = 0.0, err_half = 0.0;
  for (std::size_t i = 0; i < coarse.length; ++i)
    for (int dim = 0; dim < 3; ++dim) {
      err_coarse =
          std::max(err_coarse, std::abs(tc.states[i][dim] - tr.states[8 * i][dim]));
      err_half =
          std::max(err_half, std::abs(th.states[2 * i][dim] - tr.states[8 * i][dim]));
    }
  const double ratio = err_coarse / err_half;
  check.require(ratio > 8.0 && ratio < 32.0,
                "step-halving error ratio " + fmt(ratio) + " outside [8, 32]");
  check.note("drift " + fmt(drift) + ", halving ratio " + fmt(ratio));
}

// ---------------------------------------------------------------------------
// criterion 11: CLI determinism

std::string cli_path() {
  if (const char* env = std::getenv("SERIATE_CLI")) return env;
  return "./tools/seriate";
}

int run_cli(const std::string& args) {
  const std::string command = cli_path() + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(command.c_str()));
}

void criterion_cli_determinism(Check& check) {
  const fs::path dir = fs::temp_directory_path() / "seriate_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto same_bytes = [&](const fs::path& a, const fs::path& b) {
    return read_file(a) == read_file(b);
  };

  // Shared tiny dataset for train/recover/eval.
  Dataset labeled;
  for (const std::string& other : {"B", "C", "D"}) {
    labeled.push_back({SetInstance::of({"A", other}), "has_A"});
    labeled.push_back({SetInstance::of({other}), "no_A"});
  }
  const fs::path labeled_path = dir / "labeled.jsonl";
  write_dataset(labeled_path, labeled);

  for (const std::string run : {"x", "y"}) {
    const fs::path sub = dir / run;
    fs::create_directories(sub);
    check.require(run_cli("gen --kind tree --count 40 --max-nodes 8 --labels A,B,C "
                          "--seed 5 --out " +
                          (sub / "trees.jsonl").string()) == 0,
                  "gen tree failed");
    check.require(run_cli("gen --kind vdp --count 10 --length 6 --seed 5 --out " +
                          (sub / "vdp.jsonl").string()) == 0,
                  "gen vdp failed");
    check.require(run_cli("serialize --data " + (sub / "trees.jsonl").string() +
                          " --samples-per-instance 3 --seed 9 --out " +
                          (sub / "corpus.jsonl").string()) == 0,
                  "serialize failed");
    check.require(run_cli("train --data " + (sub / "trees.jsonl").string() +
                          " --hidden-dim 8 --max-steps 25 --batch-instances 2 --seed 3"
                          " --checkpoint-out " + (sub / "gen.ckpt").string() +
                          " --metrics-out " + (sub / "gen.csv").string()) == 0,
                  "generative train failed");
    check.require(run_cli("train --objective discriminative --data " +
                          labeled_path.string() +
                          " --hidden-dim 8 --max-steps 25 --batch-instances 2 --seed 3"
                          " --checkpoint-out " + (sub / "disc.ckpt").string() +
                          " --metrics-out " + (sub / "disc.csv").string()) == 0,
                  "discriminative train failed");
    check.require(run_cli("recover --scorer oracle --data " + labeled_path.string() +
                          " --m 16 --exact-bound 64 --seed 11 --out " +
                          (sub / "recover_oracle.jsonl").string()) == 0,
                  "oracle recover failed");
    check.require(run_cli("recover --checkpoint " + (sub / "gen.ckpt").string() +
                          " --data " + (sub / "trees.jsonl").string() +
                          " --m 8 --seed 11 --out " +
                          (sub / "recover_model.jsonl").string()) == 0,
                  "model recover failed");
    check.require(run_cli("eval --checkpoint " + (sub / "disc.ckpt").string() +
                          " --data " + labeled_path.string() + " --r 4 --seed 13 --out " +
                          (sub / "eval.csv").string()) == 0,
                  "eval failed");
  }

  for (const std::string file :
       {"trees.jsonl", "vdp.jsonl", "corpus.jsonl", "gen.ckpt", "gen.csv", "disc.ckpt",
        "disc.csv", "recover_oracle.jsonl", "recover_model.jsonl", "eval.csv"}) {
    check.require(same_bytes(dir / "x" / file, dir / "y" / file),
                  file + " differs between identical runs");
  }
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no stated budget
  std::function<void(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "sampler correctness on sets (q = 1/n!, TV < 0.02)", 60.0,
       criterion_sampler_sets},
      {2, "streaming == enumerating (TV < 0.02, 1e5 draws)", 300.0,
       criterion_streaming_enumerating},
      {3, "round trip on 1000 instances per backend", 0.0, criterion_round_trip},
      {4, "state soundness and constraint-matrix exactness", 0.0,
       criterion_state_soundness},
      {5, "Eq. 2 o-independence and oracle consistency (1e-12)", 0.0,
       criterion_o_independence},
      {6, "gradient exactness vs central differences (< 1e-4)", 120.0,
       criterion_gradients},
      {7, "memorization reaches the tabular-oracle optimum (0.05 nats)", 0.0,
       criterion_memorization},
      {8, "regularizer pulls constrained states together; empty C gives 0", 0.0,
       criterion_regularizer_effect},
      {9, "randomized ordering shrinks the train/test gap", 900.0,
       criterion_overfitting},
      {10, "Van der Pol generator (drift < 1e-6, 4th-order ratio)", 0.0, criterion_vdp},
      {11, "CLI determinism: byte-identical outputs", 0.0, criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!only.empty() && !only.contains(criterion.id)) continue;
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criterion.budget_seconds > 0.0)
      check.require(seconds < criterion.budget_seconds,
                    "runtime " + fmt(seconds) + "s over budget " +
                        fmt(criterion.budget_seconds) + "s");
    std::cout << (check.ok ? "PASS" : "FAIL") << " criterion " << criterion.id << ": "
              << criterion.name << " [" << fmt(seconds) << "s]"
              << (check.detail.empty() ? "" : " — " + check.detail) << "\n";
    if (!check.ok) ++failures;
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
