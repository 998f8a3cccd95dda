#include "recount/synth.hpp"

#include <algorithm>
#include <cmath>

#include "recount/correlation.hpp"
#include "recount/errors.hpp"
#include "recount/stats_tests.hpp"

namespace recount {

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  return prefix + std::string(width > static_cast<int>(digits.size())
                                  ? width - digits.size()
                                  : 0,
                              '0') +
         digits;
}

}  // namespace

SynthResult generate(const SynthConfig& cfg) {
  if (cfg.n_centers == 0) {
    throw ValidationError("generate: n_centers must be >= 1");
  }
  if (cfg.lambda < 0.0) {
    throw ValidationError("generate: lambda must be >= 0");
  }
  if (cfg.signer_si_prob < 0.0 || cfg.signer_si_prob > 1.0) {
    throw ValidationError("generate: signer_si_prob must be in [0, 1]");
  }

  const std::size_t cpt = std::max<std::size_t>(cfg.centers_per_township, 1);
  const std::size_t tpc = std::max<std::size_t>(cfg.townships_per_county, 1);
  const std::size_t cps = std::max<std::size_t>(cfg.counties_per_state, 1);
  const std::size_t n_townships = (cfg.n_centers + cpt - 1) / cpt;

  // Township character (urban or rural) from per-township substreams.
  std::vector<bool> urban(n_townships);
  for (std::size_t t = 0; t < n_townships; ++t) {
    Philox rng(cfg.seed, 1, t + 1);
    urban[t] = rng.next_double() < cfg.s_dist.urban_weight;
  }

  SynthResult result;
  result.dataset.provenance = "synthetic";
  result.dataset.centers.reserve(cfg.n_centers);
  for (std::size_t i = 0; i < cfg.n_centers; ++i) {
    Philox rng(cfg.seed, 0, i + 1);
    const std::size_t township = i / cpt;
    const std::size_t county = township / tpc;
    const std::size_t state = county / cps;

    CenterRecord c;
    c.id.value = padded("C", i, 5);
    c.geo.state = padded("S", state, 2);
    c.geo.county = padded("Y", county, 3);
    c.geo.township = padded("T", township, 4);
    c.channel = rng.next_double() < cfg.manual_fraction ? Channel::manual
                                                        : Channel::computerized;

    double tv_raw = rng.next_lognormal(cfg.size_log_mu, cfg.size_log_sigma);
    auto total = static_cast<std::uint64_t>(
        std::clamp(std::round(tv_raw), 20.0, 50000.0));

    const SMixture& mix = cfg.s_dist;
    double s = urban[township] ? rng.next_normal(mix.urban_mu, mix.urban_sigma)
                               : rng.next_normal(mix.rural_mu, mix.rural_sigma);
    s = std::clamp(s, 0.0, 0.95);
    auto signatures = static_cast<std::uint64_t>(
        std::round(s * static_cast<double>(total)));
    c.signatures = signatures;

    double propensity_nonsigner = rng.next_beta(cfg.nonsigner_si_alpha,
                                                cfg.nonsigner_si_beta);
    std::uint64_t si =
        rng.next_binomial(signatures, cfg.signer_si_prob) +
        rng.next_binomial(total - signatures, propensity_nonsigner);

    // Latent si share drives the 1998 ground truth in both branches.
    double latent_share =
        (cfg.signer_si_prob * static_cast<double>(signatures) +
         propensity_nonsigner * static_cast<double>(total - signatures)) /
        static_cast<double>(total);

    if (cfg.model == SynthModel::forced_linear &&
        c.channel == Channel::computerized) {
      double forced = cfg.lambda * static_cast<double>(signatures) +
                      rng.next_normal(0.0, cfg.noise_sigma);
      double clamped = std::clamp(std::round(forced), 0.0,
                                  static_cast<double>(total));
      if (std::round(forced) != clamped) ++result.report.clamped_si;
      si = static_cast<std::uint64_t>(clamped);
    }
    c.tallies[EventId::rr2004] = EventTally{si, total - si, 0};

    double share98 = std::clamp(
        latent_share + rng.next_normal(0.0, cfg.drift_sigma), 0.01, 0.99);
    double turnout = std::max(0.2, rng.next_normal(1.0, cfg.turnout_sigma));
    auto total98 = static_cast<std::uint64_t>(
        std::max(10.0, std::round(static_cast<double>(total) * turnout)));
    std::uint64_t fav98 = rng.next_binomial(total98, share98);
    c.tallies[EventId::e1998] = EventTally{fav98, total98 - fav98, 0};

    c.rep_april2004 = static_cast<std::uint64_t>(
        std::round(1.4 * static_cast<double>(total)));
    double growth = std::max(0.0, rng.next_normal(0.149, 0.05));
    c.rep_july2004 = static_cast<std::uint64_t>(
        std::round(static_cast<double>(c.rep_april2004) * (1.0 + growth)));

    result.dataset.centers.push_back(std::move(c));
  }
  result.report.clamp_rate = static_cast<double>(result.report.clamped_si) /
                             static_cast<double>(cfg.n_centers);
  // Codes are generated in sorted order; make_dataset would agree.
  return result;
}

std::string_view detector_name(Detector d) {
  switch (d) {
    case Detector::windowed_flatness: return "windowed_flatness";
    case Detector::median_split_diff: return "median_split_diff";
    case Detector::rstar_perm: return "rstar_perm";
  }
  return "?";
}

std::optional<Detector> parse_detector(std::string_view name) {
  for (Detector d : {Detector::windowed_flatness, Detector::median_split_diff,
                     Detector::rstar_perm}) {
    if (detector_name(d) == name) return d;
  }
  return std::nullopt;
}

DetectorFlags evaluate_detectors(const Dataset& ds,
                                 const std::vector<Detector>& detectors,
                                 const DetectorParams& params, RngSpec rng) {
  DetectorFlags flags;
  auto wanted = [&](Detector d) {
    return std::find(detectors.begin(), detectors.end(), d) != detectors.end();
  };

  if (wanted(Detector::windowed_flatness)) {
    try {
      WindowedResult wr = windowed_correlation(ds, params.window, Scale::linear);
      auto it = wr.series.find(Channel::computerized);
      if (it != wr.series.end() && !it->second.points.empty()) {
        const auto& points = it->second.points;
        std::size_t low_count = std::max<std::size_t>(points.size() / 4, 1);
        double min_r = points[0].r;
        for (std::size_t p = 1; p < low_count; ++p) {
          min_r = std::min(min_r, points[p].r);
        }
        flags.min_low_window_r = min_r;
        flags.windowed_flatness = min_r > params.flat_threshold;
      }
    } catch (const UndefinedError&) {
    }
  }

  if (wanted(Detector::median_split_diff)) {
    try {
      MedianSplit split = median_split_rs(ds, EventId::rr2004);
      flags.split_diff = split.diff;
      flags.median_split_diff = split.diff <= 0.0;
    } catch (const UndefinedError&) {
    }
  }

  if (wanted(Detector::rstar_perm)) {
    try {
      GeoAggregatesResult aggs =
          geo_aggregates(ds, params.level, Channel::computerized);
      TestResult perm = perm_test_rstar(aggs.aggregates, params.perm_replicates,
                                        rng);
      flags.rstar_p = perm.p_value;
      flags.rstar_perm = perm.p_value < params.alpha;
    } catch (const UndefinedError&) {
    }
  }
  return flags;
}

std::vector<PowerCell> detector_power(const std::vector<SynthConfig>& grid,
                                      const std::vector<Detector>& detectors,
                                      std::size_t replicates_per_cell,
                                      RngSpec rng, const DetectorParams& params) {
  std::vector<PowerCell> cells;
  cells.reserve(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    PowerCell cell;
    cell.config = grid[c];
    cell.replicates = replicates_per_cell;
    std::map<Detector, std::size_t> flagged;
    for (Detector d : detectors) {
      flagged[d] = 0;
      cell.evaluable[d] = 0;
    }
    for (std::size_t j = 0; j < replicates_per_cell; ++j) {
      SynthConfig cfg = grid[c];
      cfg.seed = rng.seed + j;
      SynthResult synth = generate(cfg);
      RngSpec perm_rng{rng.seed + j, rng.stream + 1 + c};
      DetectorFlags flags =
          evaluate_detectors(synth.dataset, detectors, params, perm_rng);
      auto tally = [&](Detector d, const std::optional<bool>& flag) {
        if (!flag.has_value()) return;
        ++cell.evaluable[d];
        if (*flag) ++flagged[d];
      };
      tally(Detector::windowed_flatness, flags.windowed_flatness);
      tally(Detector::median_split_diff, flags.median_split_diff);
      tally(Detector::rstar_perm, flags.rstar_perm);
    }
    for (Detector d : detectors) {
      cell.power[d] = cell.evaluable[d] == 0
                          ? 0.0
                          : static_cast<double>(flagged[d]) /
                                static_cast<double>(cell.evaluable[d]);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace recount
