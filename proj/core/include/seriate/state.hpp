#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <string>

namespace seriate {

enum class StructureKind : std::uint8_t {
  Set = 0,
  OrderedTree = 1,
  UnorderedTree = 2,
  Series = 3,
  Propositional = 4,
};

const char* to_string(StructureKind kind);

// Canonical, hashable encoding of a partial serialization's state.  Two
// partial serializations that are equivalent under the backend's invariances
// produce byte-identical payloads; payloads are length-prefixed and
// order-normalized where order invariance demands it, so StateKeys serve
// directly as hash-table keys.  Real values are encoded by their exact bit
// pattern — states differ if any stored value differs in any bit.
struct StateKey {
  StructureKind tag;
  std::string payload;

  friend bool operator==(const StateKey& a, const StateKey& b) {
    return a.tag == b.tag && a.payload == b.payload;
  }
  friend bool operator<(const StateKey& a, const StateKey& b) {
    if (a.tag != b.tag) return a.tag < b.tag;
    return a.payload < b.payload;
  }
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& key) const {
    const std::size_t h = std::hash<std::string>{}(key.payload);
    return h ^ (static_cast<std::size_t>(key.tag) * 0x9E3779B97F4A7C15ull);
  }
};

// Little-endian byte appender for canonical state payloads.
class ByteWriter {
public:
  explicit ByteWriter(std::string& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void f64_bits(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }

  // Length-prefixed nested payload.
  void bytes(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }

private:
  std::string& out_;
};

}  // namespace seriate
