#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recount/metrics.hpp"
#include "recount/stats_tests.hpp"
#include "recount/types.hpp"

namespace recount {

// Representativeness of the actually-audited centers within the
// selection draw.
struct AuditSummary {
  std::size_t n_selected = 0;
  std::size_t n_audited = 0;
  double mean_s_selected = 0;
  double mean_s_audited = 0;
  std::optional<double> skew_selected;
  std::optional<double> skew_audited;
  TestResult mc;  // subsample_mean_test of the audited mean
  double audited_pct_si = 0;             // pooled over audited centers
  std::optional<double> audited_delta_pct;  // pooled RR-vs-1998, when 1998 present
};

// subset_size_override replaces the Monte Carlo subset size (default:
// the audited-group size).
AuditSummary hot_audit_report(const Dataset& ds, std::size_t replicates,
                              RngSpec rng,
                              std::optional<std::size_t> subset_size_override = std::nullopt);

// Stems are floor(x/0.1), leaves floor of the next digit; right panel
// leaves ascend left-to-right, the optional left panel mirrors.
// Values must be >= 0.
std::string stem_and_leaf(std::span<const double> values,
                          std::span<const double> back_to_back_with = {});

// --- 20-county in/out comparison ------------------------------------------

enum class AuditVariable { k, s };

struct Histogram {
  double lo = 0;
  double width = 0;
  std::vector<std::size_t> counts;
  std::vector<double> densities;  // counts / (n * width); integrates to 1
  std::size_t n = 0;
};

struct GroupStats {
  double mean_k = 0;
  double mean_s = 0;
  std::size_t n = 0;
};

struct GroupMeans {
  GroupStats in20;
  GroupStats out;
  EventId event = EventId::rr2004;
};

struct DistComparison {
  AuditVariable variable = AuditVariable::k;
  Histogram histogram_in;
  Histogram histogram_out;   // same bins as histogram_in
  std::vector<double> ecdf_in;   // sorted sample; ECDF is i/n at values
  std::vector<double> ecdf_out;
  TestResult ks;
};

struct County20Result {
  DistComparison comparison;
  GroupMeans means;
};

// Computerized centers split by the in_20_counties flag. For events
// other than RR2004 the k variable is (%opposition(event)/100) / s.
County20Result county20_comparison(const Dataset& ds, EventId event,
                                   AuditVariable variable);

// --- Cold audit -----------------------------------------------------------

struct ColdAuditResult {
  double r_universe = 0;  // pearson(signatures, si), all computerized centers
  double r_sample = 0;    // same, cold-audited computerized centers
  std::size_t n_universe = 0;
  std::size_t n_sample = 0;
  std::size_t n_common_with_hot = 0;  // selected_192 && cold_audited
};

ColdAuditResult cold_audit_compare(const Dataset& ds);

// --- Registry (REP) variation ----------------------------------------------

enum class GroupFilter { all, in20, out20 };

struct Rect {
  double x_min = 0, x_max = 0;  // delta_pct axis
  double y_min = 0, y_max = 0;  // rep growth axis
};

struct RepPoint {
  std::string code;
  double delta_pct = 0;
  double rep_growth = 0;  // (rep_july - rep_april) / rep_april
  bool selected_192 = false;
};

struct RectReport {
  Rect rect;
  std::vector<std::string> inside_codes;
  bool any_selected_192 = false;
};

struct RepVariationResult {
  std::vector<RepPoint> points;
  double slope = 0;      // OLS of rep_growth on delta_pct
  double intercept = 0;
  std::vector<Exclusion> excluded;
  std::optional<RectReport> rect;
};

RepVariationResult rep_variation(const Dataset& ds,
                                 std::optional<Channel> channel = std::nullopt,
                                 GroupFilter group = GroupFilter::all,
                                 std::optional<Rect> rect = std::nullopt);

// Shared helpers ------------------------------------------------------------

// Freedman-Diaconis bin width on the pooled sample; both groups are
// binned identically so their densities are comparable.
Histogram histogram_fd(std::span<const double> values, double lo, double width,
                       std::size_t n_bins);
struct BinSpec {
  double lo = 0;
  double width = 0;
  std::size_t n_bins = 0;
};
BinSpec freedman_diaconis_bins(std::span<const double> pooled);

}  // namespace recount
