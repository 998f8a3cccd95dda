#include "recount/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "recount/csv.hpp"
#include "recount/errors.hpp"
#include "recount/metrics.hpp"

namespace recount {

namespace {

const std::vector<std::string> kBaseColumns = {
    "code", "state",   "county",  "township", "channel", "consular", "hamlet",
    "signatures", "rep_apr", "rep_jul", "in20", "sel192", "aud26", "coldaud"};

std::string block_column(EventId e, int part) {
  static const char* kParts[] = {"_fav", "_unf", "_null"};
  return std::string(event_name(e)) + kParts[part];
}

std::uint64_t parse_count(const std::string& cell, const std::string& context,
                          const std::string& column) {
  if (cell.empty()) {
    throw ValidationError(context + ": empty count in column " + column);
  }
  if (cell[0] == '-') {
    throw ValidationError(context + ": negative count in column " + column);
  }
  std::uint64_t value = 0;
  for (char c : cell) {
    if (c < '0' || c > '9') {
      throw ValidationError(context + ": malformed count '" + cell +
                            "' in column " + column);
    }
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return value;
}

bool parse_flag(const std::string& cell, const std::string& context,
                const std::string& column) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  throw ValidationError(context + ": flag column " + column +
                        " must be 0 or 1, got '" + cell + "'");
}

Channel parse_channel(const std::string& cell, const std::string& context) {
  if (cell == "C") return Channel::computerized;
  if (cell == "M") return Channel::manual;
  throw ValidationError(context + ": channel must be C or M, got '" + cell + "'");
}

// Validates the header layout and returns the events whose blocks it
// carries, in canonical order.
std::vector<EventId> check_header(const std::vector<std::string>& header,
                                  const std::optional<std::set<EventId>>& schema,
                                  const std::string& origin) {
  for (std::size_t i = 0; i < kBaseColumns.size(); ++i) {
    if (i >= header.size() || header[i] != kBaseColumns[i]) {
      std::string got = i < header.size() ? header[i] : "<missing>";
      throw ValidationError(origin + ": header column " + std::to_string(i + 1) +
                            " must be '" + kBaseColumns[i] + "', got '" + got + "'");
    }
  }
  std::vector<EventId> events;
  std::size_t pos = kBaseColumns.size();
  while (pos < header.size()) {
    bool recognized = false;
    for (EventId e : kAllEvents) {
      if (header[pos] == block_column(e, 0)) {
        if (pos + 2 >= header.size() || header[pos + 1] != block_column(e, 1) ||
            header[pos + 2] != block_column(e, 2)) {
          throw ValidationError(origin + ": incomplete column block for event " +
                                std::string(event_name(e)));
        }
        if (std::find(events.begin(), events.end(), e) != events.end()) {
          throw ValidationError(origin + ": duplicate column block for event " +
                                std::string(event_name(e)));
        }
        events.push_back(e);
        pos += 3;
        recognized = true;
        break;
      }
    }
    if (!recognized) {
      throw ValidationError(origin + ": unknown column '" + header[pos] + "'");
    }
  }
  std::vector<EventId> sorted = events;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != events) {
    throw ValidationError(origin + ": event blocks out of canonical order");
  }
  if (schema.has_value()) {
    std::vector<EventId> wanted(schema->begin(), schema->end());
    if (wanted != events) {
      std::string msg = origin + ": header events {";
      for (EventId e : events) msg += std::string(event_name(e)) + " ";
      msg += "} do not match the requested schema {";
      for (EventId e : wanted) msg += std::string(event_name(e)) + " ";
      msg += "}";
      throw ValidationError(msg);
    }
  }
  return events;
}

}  // namespace

Dataset parse_centers_text(const std::string& text, const std::string& origin,
                           std::optional<std::set<EventId>> schema) {
  csv::Table table = csv::parse(text, origin);
  std::vector<EventId> events = check_header(table.header, schema, origin);

  std::vector<CenterRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string context =
        origin + ": row " + std::to_string(r + 1) + " (line " +
        std::to_string(table.line_numbers[r]) + ")";
    CenterRecord rec;
    rec.id.value = row[0];
    if (rec.id.value.empty()) {
      throw ValidationError(context + ": empty center code");
    }
    rec.geo = GeoPath{row[1], row[2], row[3]};
    rec.channel = parse_channel(row[4], context);
    rec.consular = parse_flag(row[5], context, "consular");
    rec.hamlet = parse_flag(row[6], context, "hamlet");
    rec.signatures = parse_count(row[7], context, "signatures");
    rec.rep_april2004 = parse_count(row[8], context, "rep_apr");
    rec.rep_july2004 = parse_count(row[9], context, "rep_jul");
    rec.in_20_counties = parse_flag(row[10], context, "in20");
    rec.selected_192 = parse_flag(row[11], context, "sel192");
    rec.audited_26 = parse_flag(row[12], context, "aud26");
    rec.cold_audited = parse_flag(row[13], context, "coldaud");

    std::size_t pos = kBaseColumns.size();
    for (EventId e : events) {
      const std::string& fav = row[pos];
      const std::string& unf = row[pos + 1];
      const std::string& nul = row[pos + 2];
      bool all_empty = fav.empty() && unf.empty() && nul.empty();
      bool none_empty = !fav.empty() && !unf.empty() && !nul.empty();
      if (!all_empty && !none_empty) {
        throw ValidationError(context + ": partial tally for event " +
                              std::string(event_name(e)) +
                              "; leave all three cells empty or fill them all");
      }
      if (none_empty) {
        EventTally tally;
        tally.favorable = parse_count(fav, context, block_column(e, 0));
        tally.unfavorable = parse_count(unf, context, block_column(e, 1));
        tally.null_votes = parse_count(nul, context, block_column(e, 2));
        rec.tallies.emplace(e, tally);
      } else if (e == EventId::rr2004) {
        throw ValidationError(context + ": RR2004 tally is required");
      }
      pos += 3;
    }
    validate_center(rec, context);
    records.push_back(std::move(rec));
  }
  return make_dataset(std::move(records), origin);
}

Dataset parse_centers(const std::filesystem::path& path,
                      std::optional<std::set<EventId>> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_centers_text(text, path.string(), std::move(schema));
}

std::string emit_centers(const Dataset& ds, const std::set<EventId>& schema) {
  std::vector<std::string> header = kBaseColumns;
  for (EventId e : schema) {
    for (int part = 0; part < 3; ++part) header.push_back(block_column(e, part));
  }
  std::string out = csv::format_line(header) + "\n";
  for (const CenterRecord& c : ds.centers) {
    std::vector<std::string> row;
    row.reserve(header.size());
    row.push_back(c.id.value);
    row.push_back(c.geo.state);
    row.push_back(c.geo.county);
    row.push_back(c.geo.township);
    row.push_back(std::string(channel_name(c.channel)));
    row.push_back(c.consular ? "1" : "0");
    row.push_back(c.hamlet ? "1" : "0");
    row.push_back(std::to_string(c.signatures));
    row.push_back(std::to_string(c.rep_april2004));
    row.push_back(std::to_string(c.rep_july2004));
    row.push_back(c.in_20_counties ? "1" : "0");
    row.push_back(c.selected_192 ? "1" : "0");
    row.push_back(c.audited_26 ? "1" : "0");
    row.push_back(c.cold_audited ? "1" : "0");
    for (EventId e : schema) {
      if (const EventTally* t = c.tally(e)) {
        row.push_back(std::to_string(t->favorable));
        row.push_back(std::to_string(t->unfavorable));
        row.push_back(std::to_string(t->null_votes));
      } else {
        row.insert(row.end(), 3, "");
      }
    }
    out += csv::format_line(row) + "\n";
  }
  return out;
}

void write_centers(const Dataset& ds, const std::set<EventId>& schema,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write " + path.string());
  }
  out << emit_centers(ds, schema);
}

std::set<EventId> events_present(const Dataset& ds) {
  std::set<EventId> events;
  for (const CenterRecord& c : ds.centers) {
    for (const auto& [e, tally] : c.tallies) events.insert(e);
  }
  return events;
}

JoinResult join_events(const Dataset& base, const Dataset& other, EventId event) {
  for (const CenterRecord& c : base.centers) {
    if (c.tally(event) != nullptr) {
      throw ValidationError("join would overwrite event " +
                            std::string(event_name(event)) + " already present in " +
                            c.id.value);
    }
  }
  std::unordered_map<std::string, const CenterRecord*> other_by_code;
  other_by_code.reserve(other.centers.size());
  for (const CenterRecord& c : other.centers) {
    other_by_code.emplace(c.id.value, &c);
  }

  JoinResult result;
  result.dataset = base;
  for (CenterRecord& c : result.dataset.centers) {
    auto it = other_by_code.find(c.id.value);
    if (it == other_by_code.end()) continue;
    ++result.report.matched;
    const CenterRecord& o = *it->second;
    if (o.geo != c.geo) {
      result.report.geo_mismatch_codes.push_back(c.id.value);
    }
    if (const EventTally* t = o.tally(event)) {
      c.tallies.emplace(event, *t);
      ++result.report.attached;
    }
  }
  result.report.base_only = base.centers.size() - result.report.matched;
  result.report.other_only = other.centers.size() - result.report.matched;
  return result;
}

SignatureMatch match_signatures(const std::filesystem::path& signers,
                                const std::filesystem::path& registry) {
  const std::vector<std::string> expected = {"person_id", "center_code"};

  csv::Table reg = csv::read_file(registry);
  if (reg.header != expected) {
    throw ValidationError(registry.string() +
                          ": header must be person_id,center_code");
  }
  std::unordered_map<std::string, std::string> center_of;
  center_of.reserve(reg.rows.size());
  for (std::size_t r = 0; r < reg.rows.size(); ++r) {
    const auto& row = reg.rows[r];
    if (row[0].empty()) {
      throw ValidationError(registry.string() + ": row " + std::to_string(r + 1) +
                            ": empty person_id");
    }
    if (!center_of.emplace(row[0], row[1]).second) {
      throw ValidationError(registry.string() + ": duplicate person_id " + row[0]);
    }
  }

  csv::Table sig = csv::read_file(signers);
  if (sig.header != expected) {
    throw ValidationError(signers.string() +
                          ": header must be person_id,center_code");
  }
  SignatureMatch match;
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> reported_duplicate;
  seen.reserve(sig.rows.size());
  for (const auto& row : sig.rows) {
    const std::string& person = row[0];
    if (person.empty()) {
      throw ValidationError(signers.string() + ": empty person_id");
    }
    if (!seen.insert(person).second) {
      if (reported_duplicate.insert(person).second) {
        match.duplicate_signers.push_back(person);
      }
      continue;
    }
    auto it = center_of.find(person);
    if (it == center_of.end()) {
      match.unmatched.push_back(person);
    } else {
      ++match.counts[CenterId{it->second}];
      ++match.matched_signers;
    }
  }
  return match;
}

Dataset stratify(const Dataset& ds, const Predicate& predicate) {
  std::set<GeoPath> mixed;
  if (predicate.mixed_townships) {
    std::map<GeoPath, std::pair<bool, bool>> channels_seen;
    for (const CenterRecord& c : ds.centers) {
      auto& [has_c, has_m] = channels_seen[c.geo];
      (c.channel == Channel::computerized ? has_c : has_m) = true;
    }
    for (const auto& [geo, seen] : channels_seen) {
      if (seen.first && seen.second) mixed.insert(geo);
    }
  }

  Dataset out;
  out.provenance = ds.provenance;
  for (const CenterRecord& c : ds.centers) {
    if (predicate.channel && c.channel != *predicate.channel) continue;
    if (predicate.consular && c.consular != *predicate.consular) continue;
    if (predicate.hamlet && c.hamlet != *predicate.hamlet) continue;
    if (predicate.in_20_counties && c.in_20_counties != *predicate.in_20_counties) continue;
    if (predicate.selected_192 && c.selected_192 != *predicate.selected_192) continue;
    if (predicate.audited_26 && c.audited_26 != *predicate.audited_26) continue;
    if (predicate.cold_audited && c.cold_audited != *predicate.cold_audited) continue;
    if (predicate.state && c.geo.state != *predicate.state) continue;
    if (predicate.county && c.geo.county != *predicate.county) continue;
    if (predicate.township && c.geo.township != *predicate.township) continue;
    if (predicate.s_range) {
      std::optional<double> s = compute_s(c);
      if (!s || *s < predicate.s_range->first || *s > predicate.s_range->second) {
        continue;
      }
    }
    if (predicate.mixed_townships && !mixed.contains(c.geo)) continue;
    out.centers.push_back(c);
  }
  return out;
}

}  // namespace recount
