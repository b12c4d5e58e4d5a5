//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xnornet/tensor.hpp"

namespace xnornet {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t n) noexcept { return (n + kWordBits - 1) / kWordBits; }

/// A {+1, -1}^n vector, LSB-first: element i lives in bit (i % 64) of word
/// (i / 64); bit 1 is +1, bit 0 is -1. Bits past n in the last word are 0.
/// This layout is also the on-disk layout of binarized filters.
class PackedBits {
 public:
  PackedBits() = default;

  /// Adopts `words`; throws unless there are words_for(n) of them and the
  /// pad bits are clear.
  static PackedBits from_words(std::size_t n, std::vector<Word> words);

  std::size_t size() const noexcept { return n_; }
  std::span<const Word> words() const noexcept { return words_; }

  bool bit(std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1u; }
  Real value(std::size_t i) const noexcept { return bit(i) ? Real{1} : Real{-1}; }

  std::vector<Real> unpack() const;

  /// Elementwise negation, still canonical.
  PackedBits complement() const;

  friend bool operator==(const PackedBits&, const PackedBits&) = default;

 private:
  PackedBits(std::size_t n, std::vector<Word> words) : n_(n), words_(std::move(words)) {}

  std::size_t n_ = 0;
  std::vector<Word> words_;
};

/// Packs a vector whose every element is exactly +1 or -1. Throws otherwise.
PackedBits pack(std::span<const Real> signs);

/// Packs sign(values) (x >= 0 -> +1) without validating.
PackedBits pack_signs_of(std::span<const Real> values);

/// Mask with the low `n % 64` bits set (all ones when n is a multiple of 64).
constexpr Word tail_mask(std::size_t n) noexcept {
  const std::size_t rem = n % kWordBits;
  return rem == 0 ? ~Word{0} : (Word{1} << rem) - 1;
}

/// Integer +/-1 dot product of two canonical packed rows of logical length n.
/// XNOR turns the zero pad bits into ones, so they are subtracted once.
inline std::int64_t xnor_dot_words(const Word* a, const Word* b, std::size_t n) noexcept {
  const std::size_t words = words_for(n);
  std::int64_t matches = 0;
  for (std::size_t i = 0; i < words; ++i) matches += std::popcount(~(a[i] ^ b[i]));
  const auto pad = static_cast<std::int64_t>(words * kWordBits - n);
  return 2 * (matches - pad) - static_cast<std::int64_t>(n);
}

/// sum_i a_i b_i, exactly. Throws on length mismatch.
std::int64_t xnor_dot(const PackedBits& a, const PackedBits& b);

/// Row-wise pack; throws on ragged rows or non-sign entries.
std::vector<PackedBits> pack_rows(const std::vector<std::vector<Real>>& rows);

}  // namespace xnornet
