#include "seriate/tree_backend.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "byte_reader.hpp"

namespace seriate {

namespace {

constexpr std::uint8_t kEmpty = 0;
constexpr std::uint8_t kOpen = 1;
constexpr std::uint8_t kDone = 2;
constexpr std::uint32_t kRootSentinel = 0xFFFFFFFFu;

// One open level of the traversal: the label whose children are being
// listed, the canonical encodings of completed sibling subtrees, and the
// label of the node whose subtree has not started yet.
struct Frame {
  std::uint32_t parent = kRootSentinel;
  std::vector<std::string> siblings;
  std::optional<std::uint32_t> pending;
};

std::string encode_completed(std::uint32_t label, const std::vector<std::string>& children) {
  std::string out;
  ByteWriter w(out);
  w.u32(label);
  w.u32(static_cast<std::uint32_t>(children.size()));
  for (const auto& c : children) w.bytes(c);
  return out;
}

std::string encode_leaf(std::uint32_t label) { return encode_completed(label, {}); }

struct DecodedState {
  std::uint8_t phase = kEmpty;
  std::vector<Frame> stack;
  std::string done_root;
};

DecodedState decode(const std::string& payload) {
  DecodedState s;
  ByteReader r(payload);
  s.phase = r.u8();
  if (s.phase == kDone) {
    s.done_root = r.bytes();
    return s;
  }
  if (s.phase == kEmpty) return s;
  const std::uint32_t frames = r.u32();
  s.stack.resize(frames);
  for (auto& f : s.stack) {
    f.parent = r.u32();
    const std::uint32_t n = r.u32();
    f.siblings.resize(n);
    for (auto& sib : f.siblings) sib = r.bytes();
    if (r.u8()) f.pending = r.u32();
  }
  return s;
}

std::string encode(const DecodedState& s) {
  std::string payload;
  ByteWriter w(payload);
  w.u8(s.phase);
  if (s.phase == kDone) {
    w.bytes(s.done_root);
    return payload;
  }
  if (s.phase == kEmpty) return payload;
  w.u32(static_cast<std::uint32_t>(s.stack.size()));
  for (const auto& f : s.stack) {
    w.u32(f.parent);
    w.u32(static_cast<std::uint32_t>(f.siblings.size()));
    for (const auto& sib : f.siblings) w.bytes(sib);
    w.u8(f.pending ? 1 : 0);
    if (f.pending) w.u32(*f.pending);
  }
  return payload;
}

void add_sibling(Frame& f, std::string enc, bool ordered) {
  if (ordered) {
    f.siblings.push_back(std::move(enc));
  } else {
    f.siblings.insert(std::upper_bound(f.siblings.begin(), f.siblings.end(), enc),
                      std::move(enc));
  }
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

TreeBackend::TreeBackend(std::vector<std::string> labels, bool ordered)
    : ordered_(ordered) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (const auto& label : labels) alphabet_.add(label, false);
  open_ = alphabet_.add("(", false);
  close_ = alphabet_.add(")", false);
}

const TreeInstance& TreeBackend::get_tree(const StructureInstance& x) const {
  const auto* tree = std::get_if<TreeInstance>(&x);
  if (!tree) throw BackendMismatch("instance is not a tree");
  if (tree->ordered != ordered_)
    throw BackendMismatch("tree orderedness does not match the backend");
  return *tree;
}

std::string TreeBackend::encode_subtree(const TreeNode& node) const {
  std::vector<std::string> children;
  children.reserve(node.children.size());
  for (const auto& c : node.children) children.push_back(encode_subtree(c));
  if (!ordered_) std::sort(children.begin(), children.end());
  return encode_completed(alphabet_.id(node.label), children);
}

StateKey TreeBackend::initial_state() const {
  DecodedState s;
  s.phase = kEmpty;
  return {kind(), encode(s)};
}

StateKey TreeBackend::transition_impl(const StateKey& state,
                                      const LexiconElement& element) const {
  DecodedState s = decode(state.payload);
  const SymbolId sym = element.symbol;

  if (s.phase == kDone) throw MalformedSerialization(0, "element after eos");

  if (sym == alphabet_.eos()) {
    if (s.phase == kEmpty) throw MalformedSerialization(0, "empty tree");
    if (s.stack.size() != 1)
      throw MalformedSerialization(0, "eos with unclosed parenthesis");
    Frame& root = s.stack.back();
    std::string enc;
    if (root.pending) {
      if (!root.siblings.empty())
        throw MalformedSerialization(0, "multiple roots");
      enc = encode_leaf(*root.pending);
    } else if (root.siblings.size() == 1) {
      enc = root.siblings.front();
    } else {
      throw MalformedSerialization(0, "eos before the root subtree completed");
    }
    DecodedState done;
    done.phase = kDone;
    done.done_root = std::move(enc);
    return {kind(), encode(done)};
  }

  if (sym == open_) {
    if (s.phase == kEmpty || !s.stack.back().pending)
      throw MalformedSerialization(0, "'(' without a node to attach children to");
    Frame child;
    child.parent = *s.stack.back().pending;
    s.stack.back().pending.reset();
    s.stack.push_back(std::move(child));
    return {kind(), encode(s)};
  }

  if (sym == close_) {
    if (s.phase == kEmpty || s.stack.size() < 2)
      throw MalformedSerialization(0, "unmatched ')'");
    Frame& top = s.stack.back();
    if (top.pending) {
      add_sibling(top, encode_leaf(*top.pending), ordered_);
      top.pending.reset();
    }
    if (top.siblings.empty())
      throw MalformedSerialization(0, "empty child list");
    std::string enc = encode_completed(top.parent, top.siblings);
    s.stack.pop_back();
    add_sibling(s.stack.back(), std::move(enc), ordered_);
    return {kind(), encode(s)};
  }

  // Node label.
  if (s.phase == kEmpty) {
    s.phase = kOpen;
    Frame root;
    root.pending = sym;
    s.stack.push_back(std::move(root));
    return {kind(), encode(s)};
  }
  Frame& top = s.stack.back();
  if (top.pending) {
    add_sibling(top, encode_leaf(*top.pending), ordered_);
    top.pending.reset();
  } else if (s.stack.size() == 1 && !top.siblings.empty()) {
    throw MalformedSerialization(0, "multiple roots");
  }
  top.pending = sym;
  return {kind(), encode(s)};
}

namespace {

// Deserialization mirror of the transition logic, building real nodes.
struct BuildFrame {
  std::string parent;
  std::vector<TreeNode> children;
  std::optional<std::string> pending;
};

void canonicalize(TreeNode& node, const TreeBackend& backend) {
  for (auto& c : node.children) canonicalize(c, backend);
  std::stable_sort(node.children.begin(), node.children.end(),
                   [&](const TreeNode& a, const TreeNode& b) {
                     return backend.encode_subtree(a) < backend.encode_subtree(b);
                   });
}

}  // namespace

StructureInstance TreeBackend::deserialize(const Serialization& a) const {
  if (const auto bad = eos_violation(a, alphabet_))
    throw MalformedSerialization(*bad, "eos must appear exactly once, at the end");

  std::vector<BuildFrame> stack;
  stack.push_back(BuildFrame{});
  for (std::size_t i = 0; i + 1 < a.elements.size(); ++i) {
    const SymbolId sym = a.elements[i].symbol;
    if (sym == open_) {
      if (!stack.back().pending)
        throw MalformedSerialization(i, "'(' without a node to attach children to");
      BuildFrame child;
      child.parent = *stack.back().pending;
      stack.back().pending.reset();
      stack.push_back(std::move(child));
    } else if (sym == close_) {
      if (stack.size() < 2) throw MalformedSerialization(i, "unmatched ')'");
      BuildFrame top = std::move(stack.back());
      stack.pop_back();
      if (top.pending) top.children.push_back(TreeNode{*top.pending, {}});
      if (top.children.empty()) throw MalformedSerialization(i, "empty child list");
      stack.back().children.push_back(TreeNode{top.parent, std::move(top.children)});
    } else {
      BuildFrame& top = stack.back();
      if (top.pending) {
        top.children.push_back(TreeNode{*top.pending, {}});
        top.pending.reset();
      } else if (stack.size() == 1 && !top.children.empty()) {
        throw MalformedSerialization(i, "multiple roots");
      }
      top.pending = alphabet_.name(sym);
    }
  }

  const std::size_t eos_pos = a.elements.size() - 1;
  if (stack.size() != 1)
    throw MalformedSerialization(eos_pos, "eos with unclosed parenthesis");
  BuildFrame& root = stack.back();
  if (root.pending) {
    if (!root.children.empty()) throw MalformedSerialization(eos_pos, "multiple roots");
    root.children.push_back(TreeNode{*root.pending, {}});
  }
  if (root.children.size() != 1)
    throw MalformedSerialization(eos_pos, "serialization holds no tree");

  TreeInstance tree{std::move(root.children.front()), ordered_};
  if (!ordered_) canonicalize(tree.root, *this);
  return tree;
}

double TreeBackend::count_serializations(const StructureInstance& x) const {
  if (ordered_) {
    get_tree(x);
    return 1.0;
  }
  const auto count = [&](const TreeNode& node, const auto& self) -> double {
    if (node.children.empty()) return 1.0;
    std::map<std::string, std::size_t> groups;
    double product = 1.0;
    for (const auto& c : node.children) {
      ++groups[encode_subtree(c)];
      product *= self(c, self);
    }
    double arrangements = factorial(node.children.size());
    for (const auto& [enc, mult] : groups) arrangements /= factorial(mult);
    return arrangements * product;
  };
  return count(get_tree(x).root, count);
}

std::vector<Serialization> TreeBackend::enumerate_serializations(
    const StructureInstance& x, std::uint64_t bound) const {
  const auto& tree = get_tree(x);
  const double count = count_serializations(x);
  if (count > static_cast<double>(bound)) throw EnumerationTooLarge(count, true);

  using Seq = std::vector<LexiconElement>;
  const auto expand = [&](const TreeNode& node, const auto& self) -> std::vector<Seq> {
    const LexiconElement label = LexiconElement::categorical(alphabet_.id(node.label));
    if (node.children.empty()) return {Seq{label}};

    // Distinct arrangements of the child multiset, keyed by canonical
    // encoding; identical subtrees are interchangeable so one representative
    // node per key suffices.
    std::vector<std::pair<std::string, const TreeNode*>> keyed;
    keyed.reserve(node.children.size());
    for (const auto& c : node.children) keyed.emplace_back(encode_subtree(c), &c);
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::vector<const TreeNode*>> arrangements;
    if (ordered_) {
      std::vector<const TreeNode*> as_is;
      for (const auto& c : node.children) as_is.push_back(&c);
      arrangements.push_back(std::move(as_is));
    } else {
      std::vector<std::string> keys;
      for (const auto& [k, _] : keyed) keys.push_back(k);
      std::map<std::string, const TreeNode*> rep;
      for (const auto& [k, n] : keyed) rep.emplace(k, n);
      do {
        std::vector<const TreeNode*> arr;
        for (const auto& k : keys) arr.push_back(rep.at(k));
        arrangements.push_back(std::move(arr));
      } while (std::next_permutation(keys.begin(), keys.end()));
    }

    std::vector<Seq> out;
    for (const auto& arr : arrangements) {
      std::vector<Seq> partials{Seq{label, LexiconElement::categorical(open_)}};
      for (const TreeNode* child : arr) {
        const std::vector<Seq> child_seqs = self(*child, self);
        std::vector<Seq> next;
        next.reserve(partials.size() * child_seqs.size());
        for (const auto& p : partials)
          for (const auto& cs : child_seqs) {
            Seq joined = p;
            joined.insert(joined.end(), cs.begin(), cs.end());
            next.push_back(std::move(joined));
          }
        partials = std::move(next);
      }
      for (auto& p : partials) {
        p.push_back(LexiconElement::categorical(close_));
        out.push_back(std::move(p));
      }
    }
    return out;
  };

  std::vector<Serialization> result;
  for (auto& seq : expand(tree.root, expand)) {
    seq.push_back(LexiconElement::categorical(alphabet_.eos()));
    result.push_back(Serialization{std::move(seq), std::nullopt});
  }
  return result;
}

namespace {

// Prefix-matching configurations.  Duplicate sibling labels with distinct
// subtrees make the mapping from prefix to tree positions ambiguous, so the
// matcher carries a set of configurations and branches at '(' over the
// distinct matching child groups.
struct MatchFrame {
  const TreeNode* parent = nullptr;  // nullptr: virtual level holding the root
  // Remaining children grouped by canonical encoding.  For ordered trees the
  // group order is consumption order and every count is 1.
  std::vector<std::pair<const TreeNode*, int>> remaining;
  std::optional<SymbolId> pending;
};

struct MatchConfig {
  std::vector<MatchFrame> stack;
};

std::string config_signature(const TreeBackend& backend, const MatchConfig& cfg) {
  std::string sig;
  ByteWriter w(sig);
  w.u32(static_cast<std::uint32_t>(cfg.stack.size()));
  for (const auto& f : cfg.stack) {
    w.u32(f.pending ? *f.pending + 1 : 0);
    w.u32(static_cast<std::uint32_t>(f.remaining.size()));
    for (const auto& [node, count] : f.remaining) {
      w.bytes(backend.encode_subtree(*node));
      w.u32(static_cast<std::uint32_t>(count));
    }
  }
  return sig;
}

}  // namespace

std::vector<LexiconElement> TreeBackend::candidate_next_elements(
    const StructureInstance& x, const StateKey&,
    std::span<const LexiconElement> prefix) const {
  const auto& tree = get_tree(x);

  const auto group_children = [&](const TreeNode& node) {
    std::vector<std::pair<const TreeNode*, int>> groups;
    if (ordered_) {
      for (const auto& c : node.children) groups.emplace_back(&c, 1);
      return groups;
    }
    std::map<std::string, std::pair<const TreeNode*, int>> by_enc;
    for (const auto& c : node.children) {
      auto [it, fresh] = by_enc.try_emplace(encode_subtree(c), &c, 0);
      ++it->second.second;
    }
    for (auto& [enc, g] : by_enc) groups.push_back(g);
    return groups;
  };

  const auto label_id = [&](const TreeNode* node) { return alphabet_.id(node->label); };

  // Groups reachable for the next match; ordered trees only expose the front.
  const auto visible = [&](const MatchFrame& f) {
    std::span<const std::pair<const TreeNode*, int>> all(f.remaining);
    return ordered_ && !f.remaining.empty() ? all.first(1) : all;
  };

  MatchConfig start;
  {
    MatchFrame top;
    top.remaining.emplace_back(&tree.root, 1);
    start.stack.push_back(std::move(top));
  }
  std::vector<MatchConfig> configs{std::move(start)};

  // Resolves a pending label as a completed leaf, in place.  Returns false if
  // no matching remaining leaf exists.
  const auto resolve_leaf = [&](MatchFrame& f) -> bool {
    if (!f.pending) return true;
    auto vis = visible(f);
    for (std::size_t i = 0; i < vis.size(); ++i) {
      const auto& [node, count] = vis[i];
      if (node->children.empty() && label_id(node) == *f.pending) {
        auto it = f.remaining.begin() + static_cast<std::ptrdiff_t>(
                                            &vis[i] - f.remaining.data());
        if (--it->second == 0) f.remaining.erase(it);
        f.pending.reset();
        return true;
      }
    }
    return false;
  };

  for (std::size_t pos = 0; pos < prefix.size(); ++pos) {
    const SymbolId sym = prefix[pos].symbol;
    if (sym == alphabet_.eos()) throw DeadEnd("prefix already terminated");

    std::vector<MatchConfig> next;
    std::set<std::string> seen;
    const auto keep = [&](MatchConfig cfg) {
      auto sig = config_signature(*this, cfg);
      if (seen.insert(std::move(sig)).second) next.push_back(std::move(cfg));
    };

    for (auto& cfg : configs) {
      MatchFrame& top = cfg.stack.back();
      if (sym == open_) {
        if (!top.pending) continue;
        const SymbolId want = *top.pending;
        const auto vis = visible(top);
        for (std::size_t i = 0; i < vis.size(); ++i) {
          const auto& [node, count] = vis[i];
          if (label_id(node) != want || node->children.empty()) continue;
          MatchConfig branched = cfg;
          MatchFrame& btop = branched.stack.back();
          auto it = btop.remaining.begin() + static_cast<std::ptrdiff_t>(
                                                 &vis[i] - top.remaining.data());
          const TreeNode* descend = it->first;
          if (--it->second == 0) btop.remaining.erase(it);
          btop.pending.reset();
          MatchFrame child;
          child.parent = descend;
          child.remaining = group_children(*descend);
          branched.stack.push_back(std::move(child));
          keep(std::move(branched));
        }
      } else if (sym == close_) {
        if (cfg.stack.size() < 2) continue;
        MatchConfig advanced = std::move(cfg);
        MatchFrame& atop = advanced.stack.back();
        if (!resolve_leaf(atop)) continue;
        if (!atop.remaining.empty()) continue;
        advanced.stack.pop_back();
        keep(std::move(advanced));
      } else {
        MatchConfig advanced = std::move(cfg);
        MatchFrame& atop = advanced.stack.back();
        if (!resolve_leaf(atop)) continue;
        bool matchable = false;
        for (const auto& [node, count] : visible(atop))
          if (label_id(node) == sym) matchable = true;
        if (!matchable) continue;
        atop.pending = sym;
        keep(std::move(advanced));
      }
    }
    configs = std::move(next);
    if (configs.empty())
      throw DeadEnd("prefix extends to no serialization (element " +
                    std::to_string(pos) + ")");
  }

  std::set<LexiconElement> candidates;
  for (const auto& cfg : configs) {
    const MatchFrame& top = cfg.stack.back();
    if (top.pending) {
      for (const auto& [node, count] : visible(top))
        if (label_id(node) == *top.pending && !node->children.empty())
          candidates.insert(LexiconElement::categorical(open_));
      MatchFrame after = top;
      if (resolve_leaf(after)) {
        if (!after.remaining.empty()) {
          for (const auto& [node, count] : visible(after))
            candidates.insert(LexiconElement::categorical(label_id(node)));
        } else if (cfg.stack.size() > 1) {
          candidates.insert(LexiconElement::categorical(close_));
        } else {
          candidates.insert(LexiconElement::categorical(alphabet_.eos()));
        }
      }
    } else if (!top.remaining.empty()) {
      for (const auto& [node, count] : visible(top))
        candidates.insert(LexiconElement::categorical(label_id(node)));
    } else if (cfg.stack.size() > 1) {
      candidates.insert(LexiconElement::categorical(close_));
    } else {
      candidates.insert(LexiconElement::categorical(alphabet_.eos()));
    }
  }
  return {candidates.begin(), candidates.end()};
}

}  // namespace seriate
