//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "xnornet/bitpack.hpp"

#include <string>

namespace xnornet {

PackedBits PackedBits::from_words(std::size_t n, std::vector<Word> words) {
  if (words.size() != words_for(n)) {
    throw std::invalid_argument("packed bits: expected " + std::to_string(words_for(n)) +
                                " words for n=" + std::to_string(n) + ", got " +
                                std::to_string(words.size()));
  }
  if (!words.empty() && (words.back() & ~tail_mask(n)) != 0) {
    throw std::invalid_argument("packed bits: pad bits beyond n=" + std::to_string(n) +
                                " are not zero");
  }
  return PackedBits(n, std::move(words));
}

std::vector<Real> PackedBits::unpack() const {
  std::vector<Real> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = value(i);
  return out;
}

PackedBits PackedBits::complement() const {
  std::vector<Word> words(words_.size());
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = ~words_[i];
  if (!words.empty()) words.back() &= tail_mask(n_);
  return PackedBits(n_, std::move(words));
}

PackedBits pack(std::span<const Real> signs) {
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] != Real{1} && signs[i] != Real{-1}) {
      throw std::invalid_argument("pack: element " + std::to_string(i) + " is " +
                                  std::to_string(signs[i]) + ", expected +1 or -1");
    }
  }
  return pack_signs_of(signs);
}

PackedBits pack_signs_of(std::span<const Real> values) {
  std::vector<Word> words(words_for(values.size()), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i / kWordBits] |= static_cast<Word>(values[i] >= Real{0}) << (i % kWordBits);
  }
  return PackedBits::from_words(values.size(), std::move(words));
}

std::int64_t xnor_dot(const PackedBits& a, const PackedBits& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("xnor_dot: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  return xnor_dot_words(a.words().data(), b.words().data(), a.size());
}

std::vector<PackedBits> pack_rows(const std::vector<std::vector<Real>>& rows) {
  std::vector<PackedBits> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) {
      throw std::invalid_argument("pack_rows: ragged rows (" + std::to_string(row.size()) + " vs " +
                                  std::to_string(rows.front().size()) + ")");
    }
    out.push_back(pack(row));
  }
  return out;
}

}  // namespace xnornet
