#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recount {

// Unique CNE-style voting center code. Centers are compared and joined
// across electoral events by this code alone.
struct CenterId {
  std::string value;

  auto operator<=>(const CenterId&) const = default;
};

// state / county (municipality) / township (parish)
struct GeoPath {
  std::string state;
  std::string county;
  std::string township;

  auto operator<=>(const GeoPath&) const = default;
};

enum class GeoLevel { state, county, township };

enum class Channel { computerized, manual };

enum class EventId { e1998, e2000, rr2004, exitpoll2004, gov2004 };

inline constexpr std::array<EventId, 5> kAllEvents = {
    EventId::e1998, EventId::e2000, EventId::rr2004, EventId::exitpoll2004,
    EventId::gov2004};

std::string_view event_name(EventId e);
std::optional<EventId> parse_event(std::string_view name);

std::string_view channel_name(Channel c);  // "C" or "M"
std::string_view geo_level_name(GeoLevel level);
std::optional<GeoLevel> parse_geo_level(std::string_view name);

// Per-event vote counts for one center. "favorable" holds the si /
// opposition count for that event; total is always the column sum.
struct EventTally {
  std::uint64_t favorable = 0;
  std::uint64_t unfavorable = 0;
  std::uint64_t null_votes = 0;

  std::uint64_t total() const { return favorable + unfavorable + null_votes; }

  bool operator==(const EventTally&) const = default;
};

struct CenterRecord {
  CenterId id;
  GeoPath geo;
  Channel channel = Channel::computerized;
  bool consular = false;
  bool hamlet = false;
  std::uint64_t signatures = 0;
  std::uint64_t rep_april2004 = 0;
  std::uint64_t rep_july2004 = 0;
  // Absent events are genuinely absent; a zero tally is data.
  std::map<EventId, EventTally> tallies;
  bool in_20_counties = false;
  bool selected_192 = false;
  bool audited_26 = false;
  bool cold_audited = false;

  const EventTally* tally(EventId e) const {
    auto it = tallies.find(e);
    return it == tallies.end() ? nullptr : &it->second;
  }

  bool operator==(const CenterRecord&) const = default;
};

// Immutable collection of centers, sorted by CenterId so every
// downstream result is deterministic.
struct Dataset {
  std::vector<CenterRecord> centers;
  std::string provenance;

  std::size_t size() const { return centers.size(); }
};

// Checks the per-record invariants (flag implications, computerized
// RR2004 null votes). Throws ValidationError; `context` names the row
// or code in the message.
void validate_center(const CenterRecord& center, const std::string& context);

// Sorts by code, checks code uniqueness and per-record invariants.
Dataset make_dataset(std::vector<CenterRecord> centers, std::string provenance);

// 100 * favorable / total for the event, if present with total > 0.
std::optional<double> pct_opposition(const CenterRecord& center, EventId e);

}  // namespace recount
