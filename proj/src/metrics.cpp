#include "recount/metrics.hpp"

#include <fstream>

#include "recount/csv.hpp"
#include "recount/errors.hpp"

namespace recount {

std::optional<double> compute_k(const CenterRecord& center) {
  const EventTally* rr = center.tally(EventId::rr2004);
  if (rr == nullptr || center.signatures == 0) return std::nullopt;
  return static_cast<double>(rr->favorable) /
         static_cast<double>(center.signatures);
}

std::optional<double> compute_s(const CenterRecord& center) {
  const EventTally* rr = center.tally(EventId::rr2004);
  if (rr == nullptr || rr->total() == 0) return std::nullopt;
  return static_cast<double>(center.signatures) /
         static_cast<double>(rr->total());
}

std::optional<double> compute_k_max(double s) {
  if (s <= 0.0) return std::nullopt;  // singular at s = 0
  return 1.0 / s;
}

std::optional<double> compute_delta(const CenterRecord& center) {
  std::optional<double> rr = pct_opposition(center, EventId::rr2004);
  std::optional<double> e98 = pct_opposition(center, EventId::e1998);
  if (!rr || !e98) return std::nullopt;
  return *rr - *e98;
}

CenterMetrics compute_metrics(const CenterRecord& center) {
  CenterMetrics m;
  m.k = compute_k(center);
  m.s = compute_s(center);
  if (m.s) m.k_max = compute_k_max(*m.s);
  if (const EventTally* rr = center.tally(EventId::rr2004)) {
    m.total_votes = rr->total();
  }
  for (EventId e : kAllEvents) {
    if (std::optional<double> pct = pct_opposition(center, e)) {
      m.pct_opposition.emplace(e, *pct);
    }
  }
  m.delta_pct_1998_rr = compute_delta(center);
  return m;
}

MetricsTable metrics_table(const Dataset& ds) {
  MetricsTable table;
  table.rows.reserve(ds.centers.size());
  for (const CenterRecord& c : ds.centers) {
    CenterMetrics m = compute_metrics(c);
    const std::string& code = c.id.value;
    const EventTally* rr = c.tally(EventId::rr2004);
    if (rr == nullptr) {
      table.exclusions.push_back({code, "k", "no RR2004 tally"});
      table.exclusions.push_back({code, "s", "no RR2004 tally"});
    } else {
      if (!m.k) table.exclusions.push_back({code, "k", "signatures = 0"});
      if (!m.s) {
        table.exclusions.push_back({code, "s", "RR2004 total votes = 0"});
      } else if (!m.k_max) {
        table.exclusions.push_back({code, "k_max", "s = 0"});
      }
    }
    if (!m.delta_pct_1998_rr) {
      table.exclusions.push_back(
          {code, "delta", "missing RR2004 or E1998 percentage"});
    }
    table.rows.push_back({c.id, c.channel, std::move(m)});
  }
  return table;
}

std::string metrics_csv(const MetricsTable& table) {
  std::string out = "code,channel,s,k,k_max,pct_opp_rr,pct_opp_1998,delta\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  for (const MetricsRow& row : table.rows) {
    const CenterMetrics& m = row.metrics;
    std::optional<double> rr_pct, e98_pct;
    if (auto it = m.pct_opposition.find(EventId::rr2004); it != m.pct_opposition.end())
      rr_pct = it->second;
    if (auto it = m.pct_opposition.find(EventId::e1998); it != m.pct_opposition.end())
      e98_pct = it->second;
    out += csv::format_line({row.id.value, std::string(channel_name(row.channel)),
                             cell(m.s), cell(m.k), cell(m.k_max), cell(rr_pct),
                             cell(e98_pct), cell(m.delta_pct_1998_rr)}) +
           "\n";
  }
  return out;
}

void write_metrics_csv(const MetricsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write " + path.string());
  }
  out << metrics_csv(table);
}

}  // namespace recount
