#include "recount/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recount/errors.hpp"
#include "recount/metrics.hpp"

namespace recount {

Moments moments(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("moments: length mismatch (" +
                                std::to_string(xs.size()) + " vs " +
                                std::to_string(ys.size()) + ")");
  }
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  for (std::size_t i = 0; i < m.n; ++i) {
    m.mean_x += xs[i];
    m.mean_y += ys[i];
  }
  m.mean_x /= static_cast<double>(m.n);
  m.mean_y /= static_cast<double>(m.n);
  if (m.n < 2) return m;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    double dx = xs[i] - m.mean_x;
    double dy = ys[i] - m.mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  double denom = static_cast<double>(m.n - 1);
  m.var_x = sxx / denom;
  m.var_y = syy / denom;
  m.cov = sxy / denom;
  return m;
}

std::optional<double> try_pearson(std::span<const double> xs,
                                  std::span<const double> ys) {
  Moments m = moments(xs, ys);
  if (m.n < 2 || m.var_x <= 0.0 || m.var_y <= 0.0) return std::nullopt;
  double r = m.cov / std::sqrt(m.var_x * m.var_y);
  return std::clamp(r, -1.0, 1.0);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  std::optional<double> r = try_pearson(xs, ys);
  if (!r) {
    throw UndefinedError("pearson undefined: fewer than 2 points or constant input");
  }
  return *r;
}

PearsonLogResult pearson_log(std::span<const double> xs,
                             std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson_log: length mismatch");
  }
  PearsonLogResult result;
  std::vector<double> lx, ly;
  lx.reserve(xs.size());
  ly.reserve(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && ys[i] > 0.0) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    } else {
      ++result.n_excluded;
    }
  }
  result.n_used = lx.size();
  result.r = try_pearson(lx, ly);
  return result;
}

// --- table1 -----------------------------------------------------------------

Table1Cell& Table1::cell(ChannelGroup g, SStratum s) {
  return cells[static_cast<int>(g)][static_cast<int>(s)];
}

const Table1Cell& Table1::cell(ChannelGroup g, SStratum s) const {
  return cells[static_cast<int>(g)][static_cast<int>(s)];
}

Table1 table1(const Dataset& ds, double split) {
  struct Bucket {
    std::vector<double> sig, si;
  };
  Bucket buckets[3][3];

  Table1 out;
  out.split = SplitSpec{SplitKind::fixed, split};
  for (const CenterRecord& c : ds.centers) {
    const EventTally* rr = c.tally(EventId::rr2004);
    if (rr == nullptr) continue;
    std::optional<double> s = compute_s(c);
    if (!s) {
      ++out.excluded_undefined_s;
      continue;
    }
    SStratum stratum = (*s <= split) ? SStratum::le_split : SStratum::gt_split;
    ChannelGroup group = c.channel == Channel::manual ? ChannelGroup::manual
                                                      : ChannelGroup::computerized;
    double sig = static_cast<double>(c.signatures);
    double si = static_cast<double>(rr->favorable);
    for (ChannelGroup g : {group, ChannelGroup::both}) {
      for (SStratum st : {stratum, SStratum::all}) {
        Bucket& b = buckets[static_cast<int>(g)][static_cast<int>(st)];
        b.sig.push_back(sig);
        b.si.push_back(si);
      }
    }
  }
  for (int g = 0; g < 3; ++g) {
    for (int st = 0; st < 3; ++st) {
      const Bucket& b = buckets[g][st];
      Table1Cell& cell = out.cells[g][st];
      cell.n = b.sig.size();
      if (cell.n >= 3) cell.r = try_pearson(b.sig, b.si);
    }
  }
  return out;
}

// --- windowed correlation ----------------------------------------------------

namespace {

struct SeriesEntry {
  double s;
  double x;  // signatures (or log)
  double y;  // si votes (or log)
};

}  // namespace

WindowedResult windowed_correlation(const Dataset& ds, std::size_t window,
                                    Scale scale) {
  if (window < 2) {
    throw std::invalid_argument("windowed_correlation: window must be >= 2");
  }
  WindowedResult result;
  for (Channel channel : {Channel::computerized, Channel::manual}) {
    std::vector<const CenterRecord*> members;
    for (const CenterRecord& c : ds.centers) {
      if (c.channel == channel) members.push_back(&c);
    }
    if (members.empty()) continue;

    std::vector<std::pair<double, const CenterRecord*>> ordered;
    ordered.reserve(members.size());
    for (const CenterRecord* c : members) {
      if (std::optional<double> s = compute_s(*c)) ordered.emplace_back(*s, c);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return a.second->id < b.second->id;
              });

    WindowSeries series;
    series.window = window;
    series.scale = scale;
    std::vector<SeriesEntry> entries;
    entries.reserve(ordered.size());
    for (const auto& [s, c] : ordered) {
      double sig = static_cast<double>(c->signatures);
      double si = static_cast<double>(c->tally(EventId::rr2004)->favorable);
      if (scale == Scale::log) {
        if (sig <= 0.0 || si <= 0.0) {
          ++series.n_excluded;
          continue;
        }
        entries.push_back({s, std::log(sig), std::log(si)});
      } else {
        entries.push_back({s, sig, si});
      }
    }
    series.n_centers = entries.size();
    if (series.n_centers < window) {
      result.undefined_channels.emplace_back(channel, series.n_centers);
      continue;
    }

    const std::size_t n_points = series.n_centers - window + 1;
    series.points.resize(n_points);
    std::vector<double> xs(window), ys(window);
    for (std::size_t start = 0; start < n_points; ++start) {
      double s_sum = 0;
      for (std::size_t j = 0; j < window; ++j) {
        xs[j] = entries[start + j].x;
        ys[j] = entries[start + j].y;
        s_sum += entries[start + j].s;
      }
      std::optional<double> r = try_pearson(xs, ys);
      if (!r) {
        throw UndefinedError("windowed correlation undefined at window " +
                             std::to_string(start) + " of channel " +
                             std::string(channel_name(channel)) +
                             " (constant values)");
      }
      series.points[start] = {start, s_sum / static_cast<double>(window), *r};
    }
    result.series.emplace(channel, std::move(series));
  }
  return result;
}

// --- geo aggregates ------------------------------------------------------------

namespace {

GeoPath unit_key(const GeoPath& geo, GeoLevel level) {
  switch (level) {
    case GeoLevel::state: return GeoPath{geo.state, "", ""};
    case GeoLevel::county: return GeoPath{geo.state, geo.county, ""};
    case GeoLevel::township: return geo;
  }
  return geo;
}

}  // namespace

GeoAggregatesResult geo_aggregates(const Dataset& ds, GeoLevel level,
                                   std::optional<Channel> channel) {
  struct UnitData {
    std::vector<double> pct_rr, pct_98, sig, si, s;
    std::uint64_t fav_rr = 0, tot_rr = 0, fav_98 = 0, tot_98 = 0;
  };
  std::map<GeoPath, UnitData> units;

  for (const CenterRecord& c : ds.centers) {
    if (channel && c.channel != *channel) continue;
    const EventTally* rr = c.tally(EventId::rr2004);
    const EventTally* e98 = c.tally(EventId::e1998);
    if (rr == nullptr || rr->total() == 0) continue;
    if (e98 == nullptr || e98->total() == 0) continue;
    UnitData& unit = units[unit_key(c.geo, level)];
    unit.pct_rr.push_back(100.0 * static_cast<double>(rr->favorable) /
                          static_cast<double>(rr->total()));
    unit.pct_98.push_back(100.0 * static_cast<double>(e98->favorable) /
                          static_cast<double>(e98->total()));
    unit.sig.push_back(static_cast<double>(c.signatures));
    unit.si.push_back(static_cast<double>(rr->favorable));
    unit.s.push_back(static_cast<double>(c.signatures) /
                     static_cast<double>(rr->total()));
    unit.fav_rr += rr->favorable;
    unit.tot_rr += rr->total();
    unit.fav_98 += e98->favorable;
    unit.tot_98 += e98->total();
  }

  GeoAggregatesResult result;
  for (const auto& [geo, unit] : units) {
    std::size_t n = unit.pct_rr.size();
    if (n < 3) {
      result.skipped.push_back({geo, n, "fewer than 3 qualifying centers"});
      continue;
    }
    std::optional<double> r_1998 = try_pearson(unit.pct_rr, unit.pct_98);
    if (!r_1998) {
      result.skipped.push_back({geo, n, "r_1998 undefined (constant percentages)"});
      continue;
    }
    GeoAggregate agg;
    agg.geo = geo;
    agg.level = level;
    agg.n_centers = n;
    double s_sum = 0;
    for (double s : unit.s) s_sum += s;
    agg.mean_s = s_sum / static_cast<double>(n);
    // pooled tallies, not averaged center percentages
    agg.delta_pct = 100.0 * static_cast<double>(unit.fav_rr) /
                        static_cast<double>(unit.tot_rr) -
                    100.0 * static_cast<double>(unit.fav_98) /
                        static_cast<double>(unit.tot_98);
    agg.r_1998 = r_1998;
    agg.r_si = try_pearson(unit.sig, unit.si);
    result.aggregates.push_back(std::move(agg));
  }
  return result;
}

double r_star(std::span<const GeoAggregate> aggregates) {
  std::vector<double> delta, r98;
  for (const GeoAggregate& a : aggregates) {
    if (a.r_1998) {
      delta.push_back(a.delta_pct);
      r98.push_back(*a.r_1998);
    }
  }
  if (delta.size() < 3) {
    throw UndefinedError("r_star needs at least 3 aggregates with defined r_1998, got " +
                         std::to_string(delta.size()));
  }
  std::optional<double> r = try_pearson(delta, r98);
  if (!r) {
    throw UndefinedError("r_star undefined: constant delta_pct or r_1998");
  }
  return *r;
}

// --- median split ---------------------------------------------------------------

MedianSplit median_split_rs(const Dataset& ds, EventId event) {
  std::vector<std::pair<double, double>> pairs;  // (s, %opposition)
  for (const CenterRecord& c : ds.centers) {
    if (c.channel != Channel::computerized) continue;
    std::optional<double> s = compute_s(c);
    std::optional<double> pct = pct_opposition(c, event);
    if (s && pct) pairs.emplace_back(*s, *pct);
  }
  if (pairs.size() < 4) {
    throw UndefinedError("median_split_rs needs at least 4 computerized centers with "
                         "defined s and " + std::string(event_name(event)) +
                         " percentage, got " + std::to_string(pairs.size()));
  }
  std::vector<double> s_values;
  s_values.reserve(pairs.size());
  for (const auto& [s, pct] : pairs) s_values.push_back(s);
  std::sort(s_values.begin(), s_values.end());
  std::size_t n = s_values.size();
  double s_tilde = (n % 2 == 1)
                       ? s_values[n / 2]
                       : 0.5 * (s_values[n / 2 - 1] + s_values[n / 2]);

  std::vector<double> s_low, pct_low, s_high, pct_high;
  for (const auto& [s, pct] : pairs) {
    if (s <= s_tilde) {
      s_low.push_back(s);
      pct_low.push_back(pct);
    } else {
      s_high.push_back(s);
      pct_high.push_back(pct);
    }
  }
  std::optional<double> r_low = try_pearson(s_low, pct_low);
  std::optional<double> r_high = try_pearson(s_high, pct_high);
  if (!r_low || !r_high) {
    throw UndefinedError(std::string("median_split_rs: correlation undefined in the ") +
                         (!r_low ? "s <= median" : "s > median") + " stratum");
  }
  MedianSplit split;
  split.split = SplitSpec{SplitKind::median, s_tilde};
  split.r_low = *r_low;
  split.r_high = *r_high;
  split.diff = *r_high - *r_low;
  split.n_low = s_low.size();
  split.n_high = s_high.size();
  return split;
}

}  // namespace recount
