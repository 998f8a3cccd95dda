#include "recount/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "recount/errors.hpp"

namespace recount {

namespace {

double mean_of(std::span<const double> xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

std::optional<double> try_skewness(std::span<const double> xs) {
  if (xs.size() < 3) return std::nullopt;
  try {
    return skewness(xs);
  } catch (const UndefinedError&) {
    return std::nullopt;
  }
}

// Interpolated quantile over a sorted sample (type 7).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  double idx = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// k for an event: si/signatures for RR2004, otherwise the percentage
// route (%opposition / 100) / s, which reduces to the same thing for
// RR2004 when both are defined.
std::optional<double> k_for_event(const CenterRecord& c, EventId event) {
  if (event == EventId::rr2004) return compute_k(c);
  std::optional<double> s = compute_s(c);
  std::optional<double> pct = pct_opposition(c, event);
  if (!s || *s <= 0.0 || !pct) return std::nullopt;
  return (*pct / 100.0) / *s;
}

}  // namespace

AuditSummary hot_audit_report(const Dataset& ds, std::size_t replicates,
                              RngSpec rng,
                              std::optional<std::size_t> subset_size_override) {
  std::vector<double> s_selected, s_audited;
  std::uint64_t fav_rr = 0, tot_rr = 0, fav_98 = 0, tot_98 = 0;
  bool any_98 = false;
  for (const CenterRecord& c : ds.centers) {
    if (!c.selected_192) continue;
    std::optional<double> s = compute_s(c);
    if (!s) continue;
    s_selected.push_back(*s);
    if (!c.audited_26) continue;
    s_audited.push_back(*s);
    const EventTally* rr = c.tally(EventId::rr2004);
    fav_rr += rr->favorable;
    tot_rr += rr->total();
    if (const EventTally* e98 = c.tally(EventId::e1998); e98 && e98->total() > 0) {
      any_98 = true;
      fav_98 += e98->favorable;
      tot_98 += e98->total();
    }
  }
  if (s_selected.empty() || s_audited.empty()) {
    throw ValidationError("hot_audit_report: selected and audited groups must be non-empty");
  }

  AuditSummary summary;
  summary.n_selected = s_selected.size();
  summary.n_audited = s_audited.size();
  summary.mean_s_selected = mean_of(s_selected);
  summary.mean_s_audited = mean_of(s_audited);
  summary.skew_selected = try_skewness(s_selected);
  summary.skew_audited = try_skewness(s_audited);
  summary.mc = subsample_mean_test(
      s_selected, subset_size_override.value_or(s_audited.size()),
      summary.mean_s_audited, replicates, rng);
  summary.audited_pct_si =
      100.0 * static_cast<double>(fav_rr) / static_cast<double>(tot_rr);
  if (any_98 && tot_98 > 0) {
    summary.audited_delta_pct =
        summary.audited_pct_si -
        100.0 * static_cast<double>(fav_98) / static_cast<double>(tot_98);
  }
  return summary;
}

std::string stem_and_leaf(std::span<const double> values,
                          std::span<const double> back_to_back_with) {
  auto decompose = [](std::span<const double> xs,
                      std::map<long, std::vector<int>>& panel) {
    for (double x : xs) {
      if (x < 0.0) {
        throw ValidationError("stem_and_leaf: values must be non-negative");
      }
      long cents = static_cast<long>(std::floor(x * 100.0 + 1e-9));
      panel[cents / 10].push_back(static_cast<int>(cents % 10));
    }
    for (auto& [stem, leaves] : panel) std::sort(leaves.begin(), leaves.end());
  };

  std::map<long, std::vector<int>> right, left;
  decompose(values, right);
  decompose(back_to_back_with, left);
  if (right.empty() && left.empty()) return "";

  long stem_lo = std::numeric_limits<long>::max();
  long stem_hi = std::numeric_limits<long>::min();
  for (const auto* panel : {&right, &left}) {
    if (!panel->empty()) {
      stem_lo = std::min(stem_lo, panel->begin()->first);
      stem_hi = std::max(stem_hi, panel->rbegin()->first);
    }
  }

  std::size_t stem_width = std::to_string(stem_hi).size();
  std::size_t left_width = 0;
  const bool back_to_back = !back_to_back_with.empty();
  if (back_to_back) {
    for (const auto& [stem, leaves] : left) {
      left_width = std::max(left_width, leaves.size() * 2 - 1);
    }
  }

  std::string out;
  for (long stem = stem_lo; stem <= stem_hi; ++stem) {
    std::string line;
    if (back_to_back) {
      std::string mirrored;  // ascending toward the stem
      if (auto it = left.find(stem); it != left.end()) {
        for (auto leaf = it->second.rbegin(); leaf != it->second.rend(); ++leaf) {
          if (!mirrored.empty()) mirrored += ' ';
          mirrored += static_cast<char>('0' + *leaf);
        }
      }
      line += std::string(left_width - mirrored.size(), ' ') + mirrored;
      line += " | ";
    }
    std::string stem_str = std::to_string(stem);
    line += std::string(stem_width - stem_str.size(), ' ') + stem_str + " |";
    if (auto it = right.find(stem); it != right.end()) {
      for (int leaf : it->second) {
        line += ' ';
        line += static_cast<char>('0' + leaf);
      }
    }
    out += line + "\n";
  }
  return out;
}

BinSpec freedman_diaconis_bins(std::span<const double> pooled) {
  if (pooled.empty()) {
    throw ValidationError("freedman_diaconis_bins: empty sample");
  }
  std::vector<double> sorted(pooled.begin(), pooled.end());
  std::sort(sorted.begin(), sorted.end());
  double lo = sorted.front();
  double hi = sorted.back();
  double n = static_cast<double>(sorted.size());

  BinSpec spec;
  spec.lo = lo;
  if (hi == lo) {
    spec.width = 1.0;
    spec.lo = lo - 0.5;
    spec.n_bins = 1;
    return spec;
  }
  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double width = 2.0 * iqr / std::cbrt(n);
  if (width <= 0.0) {
    width = (hi - lo) / std::ceil(std::sqrt(n));
  }
  spec.width = width;
  spec.n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
  if (spec.n_bins == 0) spec.n_bins = 1;
  return spec;
}

Histogram histogram_fd(std::span<const double> values, double lo, double width,
                       std::size_t n_bins) {
  Histogram h;
  h.lo = lo;
  h.width = width;
  h.n = values.size();
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    auto bin = static_cast<long>(std::floor((v - lo) / width));
    bin = std::clamp<long>(bin, 0, static_cast<long>(n_bins) - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  h.densities.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    h.densities[b] = h.n == 0 ? 0.0
                              : static_cast<double>(h.counts[b]) /
                                    (static_cast<double>(h.n) * width);
  }
  return h;
}

County20Result county20_comparison(const Dataset& ds, EventId event,
                                   AuditVariable variable) {
  std::vector<double> var_in, var_out;
  double k_sum_in = 0, k_sum_out = 0, s_sum_in = 0, s_sum_out = 0;
  std::size_t n_in = 0, n_out = 0;
  for (const CenterRecord& c : ds.centers) {
    if (c.channel != Channel::computerized) continue;
    std::optional<double> k = k_for_event(c, event);
    std::optional<double> s = compute_s(c);
    if (!k || !s) continue;
    bool in20 = c.in_20_counties;
    (in20 ? k_sum_in : k_sum_out) += *k;
    (in20 ? s_sum_in : s_sum_out) += *s;
    ++(in20 ? n_in : n_out);
    double value = variable == AuditVariable::k ? *k : *s;
    (in20 ? var_in : var_out).push_back(value);
  }
  if (var_in.empty() || var_out.empty()) {
    throw ValidationError("county20_comparison: both the in-20 and out groups must be non-empty");
  }

  County20Result result;
  result.means.event = event;
  result.means.in20 = {k_sum_in / static_cast<double>(n_in),
                       s_sum_in / static_cast<double>(n_in), n_in};
  result.means.out = {k_sum_out / static_cast<double>(n_out),
                      s_sum_out / static_cast<double>(n_out), n_out};

  DistComparison& cmp = result.comparison;
  cmp.variable = variable;
  std::vector<double> pooled(var_in);
  pooled.insert(pooled.end(), var_out.begin(), var_out.end());
  BinSpec bins = freedman_diaconis_bins(pooled);
  cmp.histogram_in = histogram_fd(var_in, bins.lo, bins.width, bins.n_bins);
  cmp.histogram_out = histogram_fd(var_out, bins.lo, bins.width, bins.n_bins);
  cmp.ecdf_in = var_in;
  cmp.ecdf_out = var_out;
  std::sort(cmp.ecdf_in.begin(), cmp.ecdf_in.end());
  std::sort(cmp.ecdf_out.begin(), cmp.ecdf_out.end());
  cmp.ks = ks_two_sample(var_in, var_out);
  return result;
}

ColdAuditResult cold_audit_compare(const Dataset& ds) {
  std::vector<double> sig_all, si_all, sig_cold, si_cold;
  ColdAuditResult result;
  for (const CenterRecord& c : ds.centers) {
    if (c.channel != Channel::computerized) continue;
    if (c.selected_192 && c.cold_audited) ++result.n_common_with_hot;
    const EventTally* rr = c.tally(EventId::rr2004);
    if (rr == nullptr) continue;
    sig_all.push_back(static_cast<double>(c.signatures));
    si_all.push_back(static_cast<double>(rr->favorable));
    if (c.cold_audited) {
      sig_cold.push_back(sig_all.back());
      si_cold.push_back(si_all.back());
    }
  }
  result.n_universe = sig_all.size();
  result.n_sample = sig_cold.size();
  result.r_universe = pearson(sig_all, si_all);
  result.r_sample = pearson(sig_cold, si_cold);
  return result;
}

RepVariationResult rep_variation(const Dataset& ds, std::optional<Channel> channel,
                                 GroupFilter group, std::optional<Rect> rect) {
  RepVariationResult result;
  std::vector<double> xs, ys;
  for (const CenterRecord& c : ds.centers) {
    if (channel && c.channel != *channel) continue;
    if (group == GroupFilter::in20 && !c.in_20_counties) continue;
    if (group == GroupFilter::out20 && c.in_20_counties) continue;
    if (c.rep_april2004 == 0) {
      result.excluded.push_back({c.id.value, "rep_growth", "rep_april2004 = 0"});
      continue;
    }
    std::optional<double> delta = compute_delta(c);
    if (!delta) {
      result.excluded.push_back(
          {c.id.value, "delta", "missing RR2004 or E1998 percentage"});
      continue;
    }
    double growth = (static_cast<double>(c.rep_july2004) -
                     static_cast<double>(c.rep_april2004)) /
                    static_cast<double>(c.rep_april2004);
    result.points.push_back({c.id.value, *delta, growth, c.selected_192});
    xs.push_back(*delta);
    ys.push_back(growth);
  }

  Moments m = moments(xs, ys);
  if (m.n < 2 || m.var_x <= 0.0) {
    throw UndefinedError("rep_variation: least-squares fit needs >= 2 points with "
                         "varying delta_pct");
  }
  result.slope = m.cov / m.var_x;
  result.intercept = m.mean_y - result.slope * m.mean_x;

  if (rect) {
    RectReport report;
    report.rect = *rect;
    for (const RepPoint& p : result.points) {
      if (p.delta_pct >= rect->x_min && p.delta_pct <= rect->x_max &&
          p.rep_growth >= rect->y_min && p.rep_growth <= rect->y_max) {
        report.inside_codes.push_back(p.code);
        if (p.selected_192) report.any_selected_192 = true;
      }
    }
    result.rect = std::move(report);
  }
  return result;
}

}  // namespace recount
