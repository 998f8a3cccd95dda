#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "recount/types.hpp"

namespace recount {

// Loads a center CSV. `schema` is the set of event blocks the header
// must carry, in canonical event order; pass std::nullopt to accept
// whatever known event blocks the file declares. Rejects duplicate
// codes, unknown columns, malformed rows and invariant violations.
Dataset parse_centers(const std::filesystem::path& path,
                      std::optional<std::set<EventId>> schema = std::nullopt);

Dataset parse_centers_text(const std::string& text, const std::string& origin,
                           std::optional<std::set<EventId>> schema = std::nullopt);

// Canonical emission: base columns, then one fav/unf/null block per
// event in `schema` (canonical order), rows sorted by code. Absent
// tallies emit empty cells. parse(emit(ds)) round-trips bit-identically.
std::string emit_centers(const Dataset& ds, const std::set<EventId>& schema);
void write_centers(const Dataset& ds, const std::set<EventId>& schema,
                   const std::filesystem::path& path);

// Union of events present in at least one center.
std::set<EventId> events_present(const Dataset& ds);

struct JoinReport {
  std::size_t matched = 0;     // codes present in both datasets
  std::size_t base_only = 0;
  std::size_t other_only = 0;
  std::size_t attached = 0;    // matched centers that carried the event tally
  std::vector<std::string> geo_mismatch_codes;
};

struct JoinResult {
  Dataset dataset;
  JoinReport report;
};

// Attaches `other`'s tallies for `event` onto base, matching by code
// alone. Rejects if base already has any tally under `event`.
JoinResult join_events(const Dataset& base, const Dataset& other, EventId event);

struct SignatureMatch {
  std::map<CenterId, std::uint64_t> counts;
  std::uint64_t matched_signers = 0;
  std::vector<std::string> unmatched;           // signer ids absent from registry
  std::vector<std::string> duplicate_signers;   // ids seen more than once, counted once
};

// Per-center signature counts: each signer id is looked up in the
// registry and counted at the center the registry assigns.
// Files carry `person_id,center_code`; registry ids must be unique.
SignatureMatch match_signatures(const std::filesystem::path& signers,
                                const std::filesystem::path& registry);

// Conjunctive declarative filter. Fields left unset do not constrain.
// `mixed_townships` selects centers whose township (within the dataset
// being stratified) contains both manual and computerized centers.
struct Predicate {
  std::optional<Channel> channel;
  std::optional<bool> consular;
  std::optional<bool> hamlet;
  std::optional<bool> in_20_counties;
  std::optional<bool> selected_192;
  std::optional<bool> audited_26;
  std::optional<bool> cold_audited;
  std::optional<std::string> state;
  std::optional<std::string> county;
  std::optional<std::string> township;
  // Inclusive range on s = signatures / RR2004 total. Centers with
  // undefined s (zero total) never match.
  std::optional<std::pair<double, double>> s_range;
  bool mixed_townships = false;
};

Dataset stratify(const Dataset& ds, const Predicate& predicate);

}  // namespace recount
