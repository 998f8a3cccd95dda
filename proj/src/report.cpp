#include "recount/report.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "recount/errors.hpp"

namespace recount {

std::string fnv1a64_hex_bytes(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string fnv1a64_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string() + " for digest");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64_hex_bytes(buf.str());
}

InputRef input_ref(const std::filesystem::path& path) {
  return InputRef{path.string(), fnv1a64_hex(path)};
}

InputRef input_ref_text(std::string name, std::string_view content) {
  return InputRef{std::move(name), fnv1a64_hex_bytes(content)};
}

nlohmann::json ReportEnvelope::to_json() const {
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const InputRef& in : inputs) {
    inputs_json.push_back({{"path", in.path}, {"digest_fnv1a64", in.digest}});
  }
  return nlohmann::json{{"command", command},
                        {"inputs", inputs_json},
                        {"parameters", parameters},
                        {"results", results},
                        {"warnings", warnings}};
}

void ReportEnvelope::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write " + path.string());
  }
  out << to_json().dump(2) << "\n";
}

}  // namespace recount
