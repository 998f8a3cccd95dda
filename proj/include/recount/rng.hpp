#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace recount {

// Identifies one reproducible draw sequence: identical (seed, stream)
// yields the identical sequence on every platform.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Philox4x64-10 counter-based generator (Salmon et al., SC'11), the
// same variant numpy exposes. key = (seed, stream); the counter word 0
// advances per block and word 1 carries the substream, so replicate i
// of a simulation can draw from Philox(seed, stream, i) independently
// of execution order.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);
  explicit Philox(RngSpec spec, std::uint64_t substream = 0)
      : Philox(spec.seed, spec.stream, substream) {}
  // Raw counter/key construction; the known-answer tests use this.
  Philox(std::array<std::uint64_t, 4> counter, std::array<std::uint64_t, 2> key);

  std::uint64_t next_u64();
  // Uniform on [0,1), 53-bit resolution.
  double next_double();
  // Uniform integer on [0, n); n > 0. Unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n);

  double next_normal(double mu = 0.0, double sigma = 1.0);
  double next_lognormal(double log_mu, double log_sigma);
  std::uint64_t next_binomial(std::uint64_t n, double p);
  double next_gamma(double shape);
  double next_beta(double a, double b);

 private:
  void refill();

  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> buffer_;
  int buffer_pos_;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> values, Philox& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace recount
