#pragma once

#include <string>
#include <vector>

namespace avfm {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Lines stripped of trailing \r; empty trailing line dropped.
std::vector<std::string> read_lines(const std::string& path);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string to_lower(std::string s);

// Lowercase, trim, collapse internal whitespace runs to single spaces.
std::string normalize_scene_phrase(const std::string& phrase);

// Shortest decimal round-trip formatting, locale-independent. Integral
// values print without a trailing ".0" (matches nlohmann::json).
std::string format_double(double v);

}  // namespace avfm
