#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "seriate/errors.hpp"

namespace seriate {

// Counterpart of ByteWriter for decoding state payloads inside backends.
class ByteReader {
public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    const auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  double f64_bits() {
    const auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return std::bit_cast<double>(v);
  }

  std::string bytes() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }

  bool done() const { return pos_ == data_.size(); }

private:
  std::string_view take(std::size_t n) {
    if (pos_ + n > data_.size())
      throw InternalInconsistency("truncated state payload");
    const auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace seriate
