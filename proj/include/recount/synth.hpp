#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recount/rng.hpp"
#include "recount/types.hpp"

namespace recount {

enum class SynthModel { honest, forced_linear };

// Two-component mixture for per-center s: an urban high-s component and
// a rural low-s component. The component is drawn per township, the
// center value around the component mean.
struct SMixture {
  double urban_weight = 0.45;
  double urban_mu = 0.55;
  double urban_sigma = 0.15;
  double rural_mu = 0.10;
  double rural_sigma = 0.06;
};

struct SynthConfig {
  std::size_t n_centers = 600;
  SynthModel model = SynthModel::honest;
  // Total votes per center ~ round(lognormal), clamped to [20, 50000].
  double size_log_mu = 5.99;  // median ~ 400 votes
  double size_log_sigma = 0.9;
  SMixture s_dist;
  double signer_si_prob = 0.95;
  // Per-center latent non-signer si propensity ~ Beta(a, b); this
  // heterogeneity is what makes k volatile where s is small.
  double nonsigner_si_alpha = 2.0;
  double nonsigner_si_beta = 5.0;
  // forced_linear: si := clamp(round(lambda * signatures + N(0, noise_sigma)), 0, total)
  double lambda = 1.0;
  double noise_sigma = 8.0;
  // E1998 ground truth: latent propensity plus N(0, drift_sigma) drift
  // on the vote share, turnout scaled by N(1, turnout_sigma).
  double drift_sigma = 0.03;
  double turnout_sigma = 0.08;
  double manual_fraction = 0.0;
  std::size_t centers_per_township = 12;
  std::size_t townships_per_county = 4;
  std::size_t counties_per_state = 4;
  std::uint64_t seed = 0;
};

struct SynthReport {
  std::size_t clamped_si = 0;   // forced-linear draws clipped into [0, total]
  double clamp_rate = 0;        // clamped_si / n_centers
};

struct SynthResult {
  Dataset dataset;
  SynthReport report;
};

// Deterministic in (config, seed): center i draws from
// Philox(seed, stream 0, substream i+1), so generation order is free.
SynthResult generate(const SynthConfig& cfg);

// --- Detector battery -------------------------------------------------------

enum class Detector { windowed_flatness, median_split_diff, rstar_perm };

struct DetectorParams {
  std::size_t window = 150;
  double flat_threshold = 0.9;  // min windowed r over the low-s quartile
  double alpha = 0.05;
  std::size_t perm_replicates = 100000;
  GeoLevel level = GeoLevel::township;
};

struct DetectorFlags {
  std::optional<bool> windowed_flatness;
  std::optional<bool> median_split_diff;
  std::optional<bool> rstar_perm;
  // raw statistics behind the flags
  std::optional<double> min_low_window_r;
  std::optional<double> split_diff;
  std::optional<double> rstar_p;
};

// Runs the requested detectors against one dataset. The permutation
// test draws from `rng` directly.
DetectorFlags evaluate_detectors(const Dataset& ds,
                                 const std::vector<Detector>& detectors,
                                 const DetectorParams& params, RngSpec rng);

struct PowerCell {
  SynthConfig config;
  std::size_t replicates = 0;
  // Flag fraction per detector; absent when a detector was not requested.
  std::map<Detector, double> power;
  std::map<Detector, std::size_t> evaluable;  // datasets where the detector was defined
};

// replicate j of cell c generates with seed = rng.seed + j and a
// fresh stream per cell, giving reproducible, order-independent cells.
std::vector<PowerCell> detector_power(const std::vector<SynthConfig>& grid,
                                      const std::vector<Detector>& detectors,
                                      std::size_t replicates_per_cell,
                                      RngSpec rng,
                                      const DetectorParams& params = {});

std::string_view detector_name(Detector d);
std::optional<Detector> parse_detector(std::string_view name);

}  // namespace recount
