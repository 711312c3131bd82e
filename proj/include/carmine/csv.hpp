#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace carmine::csv {

// RFC-4180 reader: quoted fields, embedded commas/quotes/newlines, CRLF line
// ends. A leading UTF-8 BOM is stripped. Returns one vector per record.
std::vector<std::vector<std::string>> read_records(std::istream& in);

std::string escape_field(const std::string& field);
void write_record(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip formatting (std::to_chars); parse is the exact inverse.
std::string format_double(double v);

// Full-string numeric parse after trimming ASCII whitespace. Returns nullopt
// for empty or unparseable text (including NaN spellings).
std::optional<double> parse_double(const std::string& text);

}  // namespace carmine::csv
