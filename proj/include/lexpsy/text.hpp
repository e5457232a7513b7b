#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small text and CSV helpers shared by the file loaders and report writers.
namespace lexpsy::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals_prefix(std::string_view text, std::string_view prefix);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

using CsvRow = std::vector<std::string>;

/// RFC-4180-ish: quoted fields, doubled quotes, CRLF tolerated.
std::vector<CsvRow> parse_csv(std::string_view content);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);
std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);

/// Shortest round-trip decimal for a double ("%.17g" trimmed by std::to_chars).
std::string format_double(double v);

}  // namespace lexpsy::text
