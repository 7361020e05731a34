#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace modmine {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict parse of a whole field (surrounding blanks allowed); false on failure.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);
bool parse_uint(std::string_view text, unsigned long long& out);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view line, char sep);

// Reads all lines of a text file; throws std::runtime_error if it cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace modmine
