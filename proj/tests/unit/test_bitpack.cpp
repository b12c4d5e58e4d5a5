//
// Copyright 2026 The xnornet Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "support.hpp"
#include "xnornet/bitpack.hpp"

using namespace xnornet;

namespace {

std::vector<Real> random_sign_vector(std::size_t n, std::mt19937_64& rng) {
  std::vector<Real> v(n);
  for (auto& x : v) x = (rng() & 1u) ? Real{1} : Real{-1};
  return v;
}

}  // namespace

TEST_CASE("pack examples") {
  const PackedBits p = pack(std::vector<Real>{1, -1, 1});
  REQUIRE(p.words().size() == 1);
  CHECK(p.words()[0] == 0b101u);

  const PackedBits ones = pack(std::vector<Real>(64, 1));
  REQUIRE(ones.words().size() == 1);
  CHECK(ones.words()[0] == ~Word{0});

  const PackedBits neg = pack(std::vector<Real>(65, -1));
  REQUIRE(neg.words().size() == 2);
  CHECK(neg.words()[0] == 0);
  CHECK(neg.words()[1] == 0);

  CHECK_THROWS_AS(pack(std::vector<Real>{1, 0.5f}), std::invalid_argument);
  CHECK_THROWS_AS(pack(std::vector<Real>{0}), std::invalid_argument);
}

TEST_CASE("pad bits stay canonical") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 63u, 64u, 65u, 127u, 128u, 200u}) {
    const PackedBits p = pack(random_sign_vector(n, rng));
    CHECK(p.words().size() == words_for(n));
    CHECK((p.words().back() & ~tail_mask(n)) == 0);
    const PackedBits c = p.complement();
    CHECK((c.words().back() & ~tail_mask(n)) == 0);
  }
  CHECK_THROWS(PackedBits::from_words(3, {0b1000u}));
  CHECK_THROWS(PackedBits::from_words(3, {0u, 0u}));
  CHECK(PackedBits::from_words(3, {0b101u}) == pack(std::vector<Real>{1, -1, 1}));
}

TEST_CASE("xnor_dot examples") {
  const PackedBits a = pack(std::vector<Real>{1, 1, -1});
  const PackedBits b = pack(std::vector<Real>{1, -1, -1});
  CHECK(xnor_dot(a, b) == 1);
  std::mt19937_64 rng(4);
  for (std::size_t n : {1u, 7u, 64u, 65u, 1000u}) {
    const PackedBits p = pack(random_sign_vector(n, rng));
    CHECK(xnor_dot(p, p) == static_cast<std::int64_t>(n));
    CHECK(xnor_dot(p, p.complement()) == -static_cast<std::int64_t>(n));
  }
  CHECK_THROWS_AS(xnor_dot(a, pack(std::vector<Real>{1, 1})), std::invalid_argument);
}

TEST_CASE("xnor_dot equals the integer dot product") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 4096;
    const auto x = random_sign_vector(n, rng);
    const auto y = random_sign_vector(n, rng);
    std::int64_t dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += static_cast<std::int64_t>(x[i] * y[i]);
    const PackedBits a = pack(x), b = pack(y);
    const std::int64_t got = xnor_dot(a, b);
    REQUIRE(got == dot);
    CHECK(xnor_dot(b, a) == got);
    CHECK(std::abs(got) <= static_cast<std::int64_t>(n));
    CHECK((got - static_cast<std::int64_t>(n)) % 2 == 0);
  }
}

TEST_CASE("pack and unpack round trip") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_sign_vector(1 + rng() % 300, rng);
    CHECK(pack(v).unpack() == v);
  }
  CHECK(pack_signs_of(std::vector<Real>{0.0f, -2.0f, 3.0f}) == pack(std::vector<Real>{1, -1, 1}));
}

TEST_CASE("pack_rows") {
  const auto rows = pack_rows({{1, -1, 1}, {-1, -1, 1}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size() == 3);
  CHECK(rows[1].size() == 3);
  CHECK(pack_rows({}).empty());
  CHECK_THROWS(pack_rows({{1, 0, 1}}));
  CHECK_THROWS(pack_rows({{1, 1}, {1}}));
}
