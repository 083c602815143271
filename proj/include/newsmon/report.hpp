#pragma once

// Figures and the reproducibility manifest of a report bundle.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace newsmon {

struct ChartSeries {
    std::string name;
    std::vector<std::optional<double>> values;  // gaps break the line
};

/// Static SVG line chart. The plotted numbers are embedded as a CSV table
/// inside <metadata> so the figure can be re-read without the source files.
std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<ChartSeries>& series, const std::string& y_label);

/// Static SVG vertical bar chart with the same embedded table.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label);

/// Lower-case hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

struct ManifestEntry {
    std::string path;  // relative to the bundle root, '/' separated
    std::size_t bytes = 0;
    std::string sha256;
};

/// Every regular file below `root`, sorted by path, skipping `exclude`
/// (relative paths).
std::vector<ManifestEntry> scan_bundle(const std::string& root, const std::vector<std::string>& exclude = {});

nlohmann::json manifest_json(const std::vector<ManifestEntry>& entries, const nlohmann::json& config,
                             std::uint64_t seed);

} // namespace newsmon
