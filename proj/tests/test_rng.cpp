#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "recount/rng.hpp"

using recount::Philox;

// Reference outputs generated with numpy.random.Philox (4x64, 10 rounds)
// for the same counter/key blocks.
TEST_CASE("philox known answers") {
  SUBCASE("zero counter, zero key") {
    Philox rng({0, 0, 0, 0}, {0, 0});
    const std::array<std::uint64_t, 8> expected = {
        0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
        0x907d7a052fd5b4dcULL, 0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
        0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL};
    for (std::uint64_t want : expected) CHECK(rng.next_u64() == want);
  }
  SUBCASE("all-ones counter and key") {
    Philox rng({0xffffffffffffffffULL, 0xffffffffffffffffULL,
                0xffffffffffffffffULL, 0xffffffffffffffffULL},
               {0xffffffffffffffffULL, 0xffffffffffffffffULL});
    const std::array<std::uint64_t, 8> expected = {
        0x44b7493d1acfc229ULL, 0x6636af8e997921ddULL, 0x3f73e132b5b3780eULL,
        0x605644dde03b01b1ULL, 0x6d46cc0e71f0be7eULL, 0x924ea1693f9a8bc0ULL,
        0xfdc35f0198c91181ULL, 0xb4a311f17aa6568dULL};
    for (std::uint64_t want : expected) CHECK(rng.next_u64() == want);
  }
  SUBCASE("mixed counter and key") {
    Philox rng({0x0123456789abcdefULL, 0, 0, 0},
               {0xdeadbeefcafebabeULL, 0x0f0e0d0c0b0a0908ULL});
    const std::array<std::uint64_t, 8> expected = {
        0x0106dfd6e91da453ULL, 0xed5692c26173283cULL, 0x4702ce80b74a0aabULL,
        0xda44109a62538783ULL, 0xd0495359901e60d5ULL, 0x56774dedeaa92228ULL,
        0x9d712685b5281d4fULL, 0x7116f6244f960d78ULL};
    for (std::uint64_t want : expected) CHECK(rng.next_u64() == want);
  }
  SUBCASE("counter carry across word 0") {
    Philox rng({0xfffffffffffffffeULL, 5, 0, 0}, {42, 7});
    const std::array<std::uint64_t, 12> expected = {
        0x112e223ea5bb14f8ULL, 0xf5abf4a794fb4daeULL, 0xaa42883fbfb2eebeULL,
        0x2711692b7663c328ULL, 0x21004fb909811bb5ULL, 0xd81106b10e2a6b8aULL,
        0x2d2b618891b3d44aULL, 0x1e49c38183ce79e9ULL, 0xefe5a53f8ad4f1b0ULL,
        0xbc47823a0129a5b4ULL, 0x1534c3741ed82baeULL, 0x03bfc00908ee6a41ULL};
    for (std::uint64_t want : expected) CHECK(rng.next_u64() == want);
  }
  SUBCASE("seed/stream/substream constructor matches the raw layout") {
    Philox by_spec(123, 456, 7);
    Philox raw({0, 7, 0, 0}, {123, 456});
    CHECK(by_spec.next_u64() == 0x588ad73b61b8b2a1ULL);
    raw.next_u64();
    for (int i = 1; i < 8; ++i) CHECK(by_spec.next_u64() == raw.next_u64());
  }
}

TEST_CASE("identical spec gives identical sequences, different substreams differ") {
  Philox a(99, 1, 5), b(99, 1, 5), c(99, 1, 6);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform doubles live in [0,1) with the right mean") {
  Philox rng(7, 0);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("next_below is unbiased over a small modulus") {
  Philox rng(11, 0);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.next_below(7)];
  for (int c : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("normal and binomial moments") {
  Philox rng(13, 0);
  const int n = 200000;
  double sum = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    double z = rng.next_normal();
    sum += z;
    ss += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(ss / n - 1.0) < 0.02);

  double bsum = 0;
  const int bn = 20000;
  for (int i = 0; i < bn; ++i) {
    bsum += static_cast<double>(rng.next_binomial(100, 0.3));
  }
  CHECK(std::fabs(bsum / bn - 30.0) < 0.2);
}

TEST_CASE("beta moments") {
  Philox rng(17, 0);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += rng.next_beta(2.0, 5.0);
  CHECK(std::fabs(sum / n - 2.0 / 7.0) < 0.005);
}

TEST_CASE("shuffle is deterministic per spec and covers permutations") {
  std::vector<int> v1 = {1, 2, 3, 4, 5};
  std::vector<int> v2 = v1;
  Philox a(21, 0), b(21, 0);
  recount::shuffle(std::span<int>(v1), a);
  recount::shuffle(std::span<int>(v2), b);
  CHECK(v1 == v2);
}
