#include "recount/types.hpp"

#include <algorithm>

#include "recount/errors.hpp"

namespace recount {

std::string_view event_name(EventId e) {
  switch (e) {
    case EventId::e1998: return "E1998";
    case EventId::e2000: return "E2000";
    case EventId::rr2004: return "RR2004";
    case EventId::exitpoll2004: return "EXITPOLL2004";
    case EventId::gov2004: return "GOV2004";
  }
  return "?";
}

std::optional<EventId> parse_event(std::string_view name) {
  for (EventId e : kAllEvents) {
    if (event_name(e) == name) return e;
  }
  return std::nullopt;
}

std::string_view channel_name(Channel c) {
  return c == Channel::computerized ? "C" : "M";
}

std::string_view geo_level_name(GeoLevel level) {
  switch (level) {
    case GeoLevel::state: return "state";
    case GeoLevel::county: return "county";
    case GeoLevel::township: return "township";
  }
  return "?";
}

std::optional<GeoLevel> parse_geo_level(std::string_view name) {
  if (name == "state") return GeoLevel::state;
  if (name == "county") return GeoLevel::county;
  if (name == "township") return GeoLevel::township;
  return std::nullopt;
}

void validate_center(const CenterRecord& center, const std::string& context) {
  if (center.id.value.empty()) {
    throw ValidationError(context + ": empty center code");
  }
  if (center.geo.state.empty() || center.geo.county.empty() ||
      center.geo.township.empty()) {
    throw ValidationError(context + ": state, county and township must be non-empty");
  }
  if (center.audited_26 && !center.selected_192) {
    throw ValidationError(context + ": audited_26 set without selected_192");
  }
  if (center.selected_192 &&
      (!center.in_20_counties || center.channel != Channel::computerized)) {
    throw ValidationError(
        context + ": selected_192 requires in_20_counties and a computerized channel");
  }
  if (center.channel == Channel::computerized) {
    if (const EventTally* rr = center.tally(EventId::rr2004);
        rr != nullptr && rr->null_votes != 0) {
      throw ValidationError(context +
                            ": computerized centers cannot carry RR2004 null votes");
    }
  }
}

Dataset make_dataset(std::vector<CenterRecord> centers, std::string provenance) {
  std::sort(centers.begin(), centers.end(),
            [](const CenterRecord& a, const CenterRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < centers.size(); ++i) {
    validate_center(centers[i], "center " + centers[i].id.value);
    if (i > 0 && centers[i].id == centers[i - 1].id) {
      throw ValidationError("duplicate center code " + centers[i].id.value);
    }
  }
  return Dataset{std::move(centers), std::move(provenance)};
}

std::optional<double> pct_opposition(const CenterRecord& center, EventId e) {
  const EventTally* t = center.tally(e);
  if (t == nullptr || t->total() == 0) return std::nullopt;
  return 100.0 * static_cast<double>(t->favorable) /
         static_cast<double>(t->total());
}

}  // namespace recount
