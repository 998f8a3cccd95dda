#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace recount {

// 64-bit FNV-1a over the file bytes, lower-case hex. Cheap content
// fingerprint for the report envelope, not a security digest.
std::string fnv1a64_hex(const std::filesystem::path& path);
std::string fnv1a64_hex_bytes(std::string_view bytes);

struct InputRef {
  std::string path;
  std::string digest;  // fnv1a64 of the content
};

InputRef input_ref(const std::filesystem::path& path);
InputRef input_ref_text(std::string name, std::string_view content);

// Machine-readable result wrapper written by every CLI subcommand.
// Contains no timestamps: identical inputs and parameters produce
// byte-identical envelopes.
struct ReportEnvelope {
  std::string command;
  std::vector<InputRef> inputs;
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace recount
