#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "bfa/errors.hpp"

namespace bfa {

// An n-bit outcome/syndrome string. Bit i belongs to qubit i, qubit 0 being
// the least significant bit. The textual form prints the highest qubit
// first, so width 5, value 0b01001 renders as "01001".
struct BitString {
  static constexpr int kMaxWidth = 24;

  std::uint32_t value = 0;
  int width = 0;

  BitString() = default;

  BitString(std::uint32_t value_, int width_) : value(value_), width(width_) {
    if (width < 1 || width > kMaxWidth)
      throw ContractError("bitstring width " + std::to_string(width) +
                          " outside [1, " + std::to_string(kMaxWidth) + "]");
    if (width < 32 && (value >> width) != 0)
      throw ContractError("value " + std::to_string(value) +
                          " does not fit in " + std::to_string(width) + " bits");
  }

  bool bit(int i) const { return (value >> i) & 1u; }

  std::string str() const {
    std::string out(static_cast<std::size_t>(width), '0');
    for (int i = 0; i < width; ++i)
      if (bit(i)) out[static_cast<std::size_t>(width - 1 - i)] = '1';
    return out;
  }

  static BitString parse(std::string_view text) {
    if (text.empty() || text.size() > kMaxWidth)
      throw ContractError("bitstring text length " + std::to_string(text.size()) +
                          " outside [1, " + std::to_string(kMaxWidth) + "]");
    std::uint32_t v = 0;
    for (char c : text) {
      if (c != '0' && c != '1')
        throw ContractError("bitstring text contains non-binary character");
      v = (v << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return BitString(v, static_cast<int>(text.size()));
  }

  friend bool operator==(const BitString&, const BitString&) = default;
};

inline void require_same_width(const BitString& a, const BitString& b) {
  if (a.width != b.width)
    throw ContractError("bitstring width mismatch: " + std::to_string(a.width) +
                        " vs " + std::to_string(b.width));
}

inline BitString operator^(const BitString& a, const BitString& b) {
  require_same_width(a, b);
  return BitString(a.value ^ b.value, a.width);
}

// Parity of the bitwise AND, i.e. the GF(2) inner product. Gives the sign
// (-1)^{a.b} appearing in the Walsh spectrum of syndrome-form matrices.
inline int dot_parity(const BitString& a, const BitString& b) {
  require_same_width(a, b);
  return std::popcount(a.value & b.value) & 1;
}

inline int parity_u32(std::uint32_t v) { return std::popcount(v) & 1; }

// Number of positions j where bits j and j+1 are both set, with qubits
// adjacent on a linear chain. Used as the exponent in correlation boosting.
inline int adjacent_pair_count(const BitString& s) {
  return std::popcount(s.value & (s.value >> 1) &
                       ((1u << (s.width - 1)) - 1u));
}

inline int adjacent_pair_count_u32(std::uint32_t value, int width) {
  return std::popcount(value & (value >> 1) & ((1u << (width - 1)) - 1u));
}

}  // namespace bfa
