#include "recount/stats_tests.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "recount/errors.hpp"

namespace recount {

namespace {

double upper_tail_normal(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double mean_of(std::span<const double> xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

unsigned resolve_threads(unsigned requested, std::size_t work_items) {
  unsigned n = requested != 0 ? requested : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  return static_cast<unsigned>(
      std::min<std::size_t>(n, std::max<std::size_t>(work_items, 1)));
}

}  // namespace

double ks_asymptotic_p(double d, std::size_t n1, std::size_t n2) {
  if (n1 == 0 || n2 == 0) {
    throw ValidationError("ks_asymptotic_p: empty sample");
  }
  if (d <= 0.0) return 1.0;
  double ne = static_cast<double>(n1) * static_cast<double>(n2) /
              static_cast<double>(n1 + n2);
  double sqrt_ne = std::sqrt(ne);
  double lambda = d * (sqrt_ne + 0.12 + 0.11 / sqrt_ne);
  double lambda2 = lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  bool converged = false;
  for (int j = 1; j <= 200; ++j) {
    double term = sign * std::exp(-2.0 * static_cast<double>(j) *
                                  static_cast<double>(j) * lambda2);
    sum += term;
    if (std::fabs(term) <= 1e-80 * std::fabs(sum)) {
      converged = true;
      break;
    }
    sign = -sign;
  }
  if (!converged) return 1.0;  // lambda so small the series is useless: p ~ 1
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) {
    throw ValidationError("ks_two_sample: both samples must be non-empty");
  }
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i < a.size() && j < b.size()) {
      v = std::min(a[i], b[j]);
    } else if (i < a.size()) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }

  TestResult result;
  result.method = TestMethod::ks_two_sample;
  result.statistic = d;
  result.n1 = a.size();
  result.n2 = b.size();
  result.p_value = ks_asymptotic_p(d, a.size(), b.size());
  return result;
}

TestResult perm_test_rstar(std::span<const GeoAggregate> aggregates,
                           std::size_t replicates, RngSpec rng, unsigned threads,
                           std::vector<double>* replicate_stats) {
  std::vector<double> delta, r98;
  for (const GeoAggregate& a : aggregates) {
    if (a.r_1998) {
      delta.push_back(a.delta_pct);
      r98.push_back(*a.r_1998);
    }
  }
  double observed = r_star(aggregates);  // throws when undefined
  if (replicates == 0) {
    throw ValidationError("perm_test_rstar: replicates must be positive");
  }

  std::vector<double> stats(replicates);
  const unsigned n_threads = resolve_threads(threads, replicates);
  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<double> perm(r98);
    for (std::size_t t = begin; t < end; ++t) {
      // substream t+1: the sequence is a function of the replicate
      // index alone, so any thread partition yields the same stats.
      Philox gen(rng.seed, rng.stream, t + 1);
      std::copy(r98.begin(), r98.end(), perm.begin());
      shuffle(std::span<double>(perm), gen);
      std::optional<double> r = try_pearson(delta, perm);
      stats[t] = r.value_or(0.0);
    }
  };
  if (n_threads <= 1) {
    worker(0, replicates);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (replicates + n_threads - 1) / n_threads;
    for (unsigned w = 0; w < n_threads; ++w) {
      std::size_t begin = static_cast<std::size_t>(w) * chunk;
      std::size_t end = std::min(replicates, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  std::size_t tail = 0;
  for (double r : stats) {
    if (r >= observed) ++tail;
  }
  double mu = mean_of(stats);
  double ss = 0;
  for (double r : stats) ss += (r - mu) * (r - mu);
  double sigma = replicates > 1
                     ? std::sqrt(ss / static_cast<double>(replicates - 1))
                     : 0.0;

  TestResult result;
  result.method = TestMethod::perm_rstar;
  result.statistic = observed;
  result.n1 = delta.size();
  result.replicates = replicates;
  result.seed = rng.seed;
  result.stream = rng.stream;
  result.p_empirical = static_cast<double>(tail) / static_cast<double>(replicates);
  if (sigma > 0.0) {
    double z = (observed - mu) / sigma;
    result.p_value = upper_tail_normal(z);
    result.p_two_sided = std::erfc(std::fabs(z) / std::sqrt(2.0));
    result.null_fit = NormalFit{mu, sigma};
  } else {
    result.p_value = *result.p_empirical;
  }
  if (replicate_stats != nullptr) *replicate_stats = std::move(stats);
  return result;
}

TestResult subsample_mean_test(std::span<const double> values,
                               std::size_t subset_size, double observed_mean,
                               std::size_t replicates, RngSpec rng,
                               std::vector<double>* replicate_means) {
  const std::size_t n = values.size();
  if (subset_size == 0 || subset_size > n) {
    throw ValidationError("subsample_mean_test: subset_size must be in [1, " +
                          std::to_string(n) + "], got " +
                          std::to_string(subset_size));
  }
  if (replicates == 0) {
    throw ValidationError("subsample_mean_test: replicates must be positive");
  }

  double mu = mean_of(values);
  double ss = 0;
  for (double v : values) ss += (v - mu) * (v - mu);
  double pop_var = ss / static_cast<double>(n);  // finite-population variance

  std::vector<double> means(replicates);
  std::vector<double> scratch(values.begin(), values.end());
  for (std::size_t t = 0; t < replicates; ++t) {
    Philox gen(rng.seed, rng.stream, t + 1);
    std::copy(values.begin(), values.end(), scratch.begin());
    // partial Fisher-Yates: the m selected values end up in front
    double sum = 0;
    for (std::size_t i = 0; i < subset_size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(gen.next_below(n - i));
      std::swap(scratch[i], scratch[j]);
      sum += scratch[i];
    }
    means[t] = sum / static_cast<double>(subset_size);
  }
  std::size_t tail = 0;
  for (double m : means) {
    if (m >= observed_mean) ++tail;
  }

  TestResult result;
  result.method = TestMethod::subsample_mean;
  result.statistic = observed_mean;
  result.n1 = n;
  result.n2 = subset_size;
  result.replicates = replicates;
  result.seed = rng.seed;
  result.stream = rng.stream;
  result.p_value = static_cast<double>(tail) / static_cast<double>(replicates);
  result.p_empirical = result.p_value;

  // Mean of subset means is mu; their variance follows the
  // without-replacement correction (N - m)/(N - 1).
  double se = n > 1 ? std::sqrt(pop_var / static_cast<double>(subset_size) *
                                (static_cast<double>(n - subset_size) /
                                 static_cast<double>(n - 1)))
                    : 0.0;
  if (se > 0.0) {
    result.p_analytic = upper_tail_normal((observed_mean - mu) / se);
    result.null_fit = NormalFit{mu, se};
  } else {
    result.p_analytic = observed_mean <= mu ? 1.0 : 0.0;
  }
  if (replicate_means != nullptr) *replicate_means = std::move(means);
  return result;
}

double skewness(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) {
    throw UndefinedError("skewness needs at least 3 values, got " +
                         std::to_string(n));
  }
  double mu = mean_of(xs);
  double m2 = 0, m3 = 0;
  for (double x : xs) {
    double d = x - mu;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  if (m2 <= 0.0) {
    throw UndefinedError("skewness undefined for a constant sample");
  }
  double g1 = m3 / std::pow(m2, 1.5);
  double nd = static_cast<double>(n);
  return g1 * std::sqrt(nd * (nd - 1.0)) / (nd - 2.0);
}

NormalFitResult normal_fit(std::span<const double> xs) {
  if (xs.size() < 2) {
    throw UndefinedError("normal_fit needs at least 2 values");
  }
  double mu = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  NormalFitResult fit;
  fit.mu = mu;
  if (ss > 0.0) {
    fit.sigma = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return fit;
}

}  // namespace recount
