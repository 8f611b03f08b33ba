#pragma once

// Round-trippable number formatting and RFC-4180 CSV output.

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdbc {

/// Shortest decimal form that parses back to the same double; "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double x);
std::string format_index(std::size_t n);
/// Space-separated integers, e.g. "3 4 2".
std::string format_list(std::span<const std::size_t> values);

/// Quotes the field when it contains a comma, quote or line break.
std::string csv_field(std::string_view text);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

/// Parses one CSV record (no embedded line breaks). Used by tests and by
/// analyze when reading run logs.
std::vector<std::string> parse_csv_line(std::string_view line);

} // namespace tdbc
