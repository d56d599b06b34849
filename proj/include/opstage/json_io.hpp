#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace opstage {

// Like json::dump, but floating-point values are always written with 17
// significant digits ("%.17g"), so every double round-trips bit-exactly and
// the text is stable across library versions.
std::string dump_precise(const nlohmann::json& doc, int indent = 2);

// 17-significant-digit rendering of a single value.
std::string format_double(double value);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace opstage
