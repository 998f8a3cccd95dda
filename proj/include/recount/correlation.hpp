#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recount/types.hpp"

namespace recount {

// Sample moments, n-1 convention. The convention cancels in r; it is
// pinned here for anyone consuming the intermediates.
struct Moments {
  std::size_t n = 0;
  double mean_x = 0, mean_y = 0;
  double var_x = 0, var_y = 0;
  double cov = 0;
};

// Throws std::invalid_argument on length mismatch.
Moments moments(std::span<const double> xs, std::span<const double> ys);

// nullopt when n < 2 or either argument is constant.
std::optional<double> try_pearson(std::span<const double> xs,
                                  std::span<const double> ys);

// As try_pearson but throws UndefinedError instead of returning nullopt.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct PearsonLogResult {
  std::optional<double> r;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // pairs dropped because a value was <= 0
};

// Pearson over element-wise natural logs. Non-positive pairs are
// excluded pairwise and reported, never imputed.
PearsonLogResult pearson_log(std::span<const double> xs,
                             std::span<const double> ys);

// --- Table-1-style grid -------------------------------------------------

enum class ChannelGroup { manual, computerized, both };
enum class SStratum { le_split, gt_split, all };

enum class SplitKind { fixed, median };
struct SplitSpec {
  SplitKind kind = SplitKind::fixed;
  double split_point = 0.5;
};

struct Table1Cell {
  std::optional<double> r;  // pearson(signatures, si votes); undefined if n < 3 or constant
  std::size_t n = 0;
};

struct Table1 {
  SplitSpec split;
  std::size_t excluded_undefined_s = 0;
  Table1Cell& cell(ChannelGroup g, SStratum s);
  const Table1Cell& cell(ChannelGroup g, SStratum s) const;

  Table1Cell cells[3][3] = {};
};

Table1 table1(const Dataset& ds, double split = 0.5);

// --- Moving-window correlation series ------------------------------------

enum class Scale { linear, log };

struct WindowPoint {
  std::size_t start_index = 0;  // position in the s-sorted (filtered) sequence
  double mean_s = 0;
  double r = 0;
};

struct WindowSeries {
  std::size_t window = 150;
  Scale scale = Scale::linear;
  std::size_t n_centers = 0;   // length of the sequence the windows slide over
  std::size_t n_excluded = 0;  // log scale: centers dropped for non-positive values
  std::vector<WindowPoint> points;  // exactly n_centers - window + 1 entries
};

struct WindowedResult {
  std::map<Channel, WindowSeries> series;
  // Channels present in the data but with fewer centers than the window.
  std::vector<std::pair<Channel, std::size_t>> undefined_channels;
};

// Sorts each channel's centers ascending by s (ties broken by code) and
// computes pearson(signatures, si) over every length-`window` run.
WindowedResult windowed_correlation(const Dataset& ds, std::size_t window = 150,
                                    Scale scale = Scale::linear);

// --- Per-geography aggregates and the r* coupling ------------------------

struct GeoAggregate {
  GeoPath geo;  // fields below `level` are empty
  GeoLevel level = GeoLevel::township;
  std::size_t n_centers = 0;
  double mean_s = 0;
  double delta_pct = 0;  // pooled-tally percentage difference, RR vs 1998
  std::optional<double> r_1998;
  std::optional<double> r_si;
};

struct SkippedUnit {
  GeoPath geo;
  std::size_t n_centers = 0;
  std::string reason;
};

struct GeoAggregatesResult {
  std::vector<GeoAggregate> aggregates;
  std::vector<SkippedUnit> skipped;
};

// One aggregate per unit with >= 3 centers carrying RR2004 and E1998
// tallies with positive totals; smaller units are reported as skipped.
GeoAggregatesResult geo_aggregates(const Dataset& ds, GeoLevel level,
                                   std::optional<Channel> channel = std::nullopt);

// pearson over (delta_pct, r_1998) for aggregates with defined r_1998.
// Throws UndefinedError when fewer than 3 qualify or a side is constant.
double r_star(std::span<const GeoAggregate> aggregates);

// --- Median-split correlations (Table-2 style) ----------------------------

struct MedianSplit {
  SplitSpec split;      // kind = median, split_point = recomputed s-tilde
  double r_low = 0;     // pearson(s, %opposition) over s <= s-tilde
  double r_high = 0;    // over s > s-tilde
  double diff = 0;      // r_high - r_low
  std::size_t n_low = 0, n_high = 0;
};

// Computerized centers with defined s and the event's percentage.
MedianSplit median_split_rs(const Dataset& ds, EventId event);

}  // namespace recount
