#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace recount::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // each row has header.size() cells
  std::vector<std::size_t> line_numbers;       // source line of each row
};

// RFC-4180-ish: comma separated, optional double-quote quoting with ""
// escapes. Throws ValidationError on ragged rows or unbalanced quotes.
Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& origin);

std::vector<std::string> split_line(const std::string& line, std::size_t line_no,
                                    const std::string& origin);

std::string format_line(const std::vector<std::string>& cells);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double v);

}  // namespace recount::csv
