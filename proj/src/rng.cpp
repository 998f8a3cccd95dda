#include "recount/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace recount {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(product >> 64);
  return static_cast<std::uint64_t>(product);
}

inline void philox_round(std::array<std::uint64_t, 4>& ctr,
                         const std::array<std::uint64_t, 2>& key) {
  std::uint64_t hi0, hi1;
  std::uint64_t lo0 = mulhilo(kMult0, ctr[0], hi0);
  std::uint64_t lo1 = mulhilo(kMult1, ctr[2], hi1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<std::uint64_t, 4> philox10(std::array<std::uint64_t, 4> ctr,
                                             std::array<std::uint64_t, 2> key) {
  philox_round(ctr, key);
  for (int round = 1; round < 10; ++round) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    philox_round(ctr, key);
  }
  return ctr;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
    : counter_{0, substream, 0, 0}, key_{seed, stream}, buffer_{}, buffer_pos_(4) {}

Philox::Philox(std::array<std::uint64_t, 4> counter, std::array<std::uint64_t, 2> key)
    : counter_(counter), key_(key), buffer_{}, buffer_pos_(4) {}

void Philox::refill() {
  // Counter advances before the block is produced, matching the numpy
  // Philox stepping so the generator is externally verifiable.
  if (++counter_[0] == 0) {
    if (++counter_[1] == 0) {
      if (++counter_[2] == 0) {
        ++counter_[3];
      }
    }
  }
  buffer_ = philox10(counter_, key_);
  buffer_pos_ = 0;
}

std::uint64_t Philox::next_u64() {
  if (buffer_pos_ == 4) refill();
  return buffer_[buffer_pos_++];
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Philox::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Philox::next_normal(double mu, double sigma) {
  double u1 = 1.0 - next_double();  // (0, 1]; log is finite
  double u2 = next_double();
  double radius = std::sqrt(-2.0 * std::log(u1));
  return mu + sigma * radius * std::cos(2.0 * std::numbers::pi * u2);
}

double Philox::next_lognormal(double log_mu, double log_sigma) {
  return std::exp(next_normal(log_mu, log_sigma));
}

std::uint64_t Philox::next_binomial(std::uint64_t n, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::uint64_t count = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (next_double() < p) ++count;
  }
  return count;
}

double Philox::next_gamma(double shape) {
  if (shape <= 0.0) throw std::invalid_argument("next_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = 1.0 - next_double();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = 1.0 - next_double();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double Philox::next_beta(double a, double b) {
  double ga = next_gamma(a);
  double gb = next_gamma(b);
  return ga / (ga + gb);
}

}  // namespace recount
