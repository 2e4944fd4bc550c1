#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace degschro {

inline constexpr const char* kToolVersion = "0.3.1";

/// Shortest-round-trip-safe decimal form (%.17g).
std::string fmt_g17(double v);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// SHA-1 of "blob <len>\0<content>", hex encoded (same digest git assigns to a file).
std::string git_blob_hash(std::string_view content);

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

/// Minimal RFC-4180 reader: header plus numeric rows. Quoted fields are accepted.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(std::string_view text);

} // namespace degschro
