#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recount/types.hpp"

namespace recount {

// Derived per-center quantities.
//   k     = RR2004 si votes / signatures      (undefined when signatures = 0)
//   s     = signatures / RR2004 total votes   (undefined when total = 0)
//   k_max = 1 / s                             (undefined when s = 0)
struct CenterMetrics {
  std::optional<double> k;
  std::optional<double> s;
  std::optional<double> k_max;
  std::uint64_t total_votes = 0;  // RR2004 total
  std::map<EventId, double> pct_opposition;
  std::optional<double> delta_pct_1998_rr;
};

std::optional<double> compute_k(const CenterRecord& center);
std::optional<double> compute_s(const CenterRecord& center);
std::optional<double> compute_k_max(double s);
// pct_opposition(RR2004) - pct_opposition(E1998), percentage points.
std::optional<double> compute_delta(const CenterRecord& center);

CenterMetrics compute_metrics(const CenterRecord& center);

struct Exclusion {
  std::string code;
  std::string metric;
  std::string reason;
};

struct MetricsRow {
  CenterId id;
  Channel channel = Channel::computerized;
  CenterMetrics metrics;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  std::vector<Exclusion> exclusions;
};

MetricsTable metrics_table(const Dataset& ds);

// CSV export: code, channel, s, k, k_max, pct_opp_rr, pct_opp_1998,
// delta. Undefined metrics emit empty cells.
std::string metrics_csv(const MetricsTable& table);
void write_metrics_csv(const MetricsTable& table, const std::filesystem::path& path);

}  // namespace recount
