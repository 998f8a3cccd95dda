#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "recount/correlation.hpp"
#include "recount/rng.hpp"

namespace recount {

enum class TestMethod { ks_two_sample, perm_rstar, subsample_mean };

struct NormalFit {
  double mu = 0;
  double sigma = 0;
};

struct TestResult {
  TestMethod method = TestMethod::ks_two_sample;
  double statistic = 0;  // D, observed r*, or observed mean
  double p_value = 0;    // primary p; see each test for its definition
  // Monte Carlo tail proportion, reported alongside the fitted p.
  std::optional<double> p_empirical;
  std::optional<double> p_two_sided;
  std::optional<double> p_analytic;  // finite-population normal approximation
  std::size_t n1 = 0, n2 = 0;
  std::size_t replicates = 0;        // 0 for analytic tests
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> stream;
  std::optional<NormalFit> null_fit;
};

// Asymptotic two-sample Kolmogorov-Smirnov probability
//   Q(lambda) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)
// with lambda = D * (sqrt(ne) + 0.12 + 0.11/sqrt(ne)), ne = n1*n2/(n1+n2).
double ks_asymptotic_p(double d, std::size_t n1, std::size_t n2);

// D = sup |ECDF1 - ECDF2|; p from ks_asymptotic_p.
TestResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

// Permutation test for r*: shuffles r_1998 against delta_pct
// `replicates` times, fits a normal to the replicate correlations and
// reports the one-sided upper-tail p under that fit as p_value; the raw
// tail proportion (>= observed) lands in p_empirical and a two-sided
// fitted p in p_two_sided. Replicate i draws from Philox(seed, stream, i+1),
// so the result is independent of thread count.
// `replicate_stats`, when non-null, receives all replicate correlations
// in replicate order.
TestResult perm_test_rstar(std::span<const GeoAggregate> aggregates,
                           std::size_t replicates, RngSpec rng,
                           unsigned threads = 0,
                           std::vector<double>* replicate_stats = nullptr);

// Draws `replicates` uniform subsets of `subset_size` and reports the
// proportion of subset means >= observed_mean as p_value. p_analytic
// carries the finite-population normal approximation, which resolves
// tails far beyond Monte Carlo reach.
TestResult subsample_mean_test(std::span<const double> values,
                               std::size_t subset_size, double observed_mean,
                               std::size_t replicates, RngSpec rng,
                               std::vector<double>* replicate_means = nullptr);

// Adjusted Fisher-Pearson standardized third moment,
//   G1 = g1 * sqrt(n(n-1)) / (n-2).
// Throws UndefinedError for n < 3 or constant input.
double skewness(std::span<const double> xs);

struct NormalFitResult {
  double mu = 0;
  std::optional<double> sigma;  // nullopt when the sample is constant
};

// Sample mean and n-1 standard deviation; n >= 2 required.
NormalFitResult normal_fit(std::span<const double> xs);

}  // namespace recount
