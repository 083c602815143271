#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace newsmon::csv {

using Row = std::vector<std::string>;

/// RFC 4180 style: fields separated by commas, quoted when they contain
/// commas, quotes or line breaks. Quoted fields may span lines.
std::vector<Row> parse(std::string_view text);

/// Reads and parses a whole file; throws DataError if unreadable.
std::vector<Row> read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// Fixed real formatting shared by every emitted CSV so reruns are byte-identical.
std::string real(double value);
/// Empty cell for gaps.
std::string real(std::optional<double> value);

} // namespace newsmon::csv
