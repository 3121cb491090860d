#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "starksense/errors.hpp"

namespace starksense::csv {

struct CsvError : Error {
    using Error::Error;
};

// Shortest representation that round-trips through a double; '.' decimal
// separator regardless of locale; NaN spelled "nan", infinities "inf"/"-inf".
std::string format_double(double value);

// Inverse of format_double; accepts "nan"/"inf"/"-inf" case-insensitively.
// Throws CsvError on anything else that is not a full numeric token.
double parse_double(const std::string& cell, const std::string& where);

// Comma-separated table with one header row. Cells are trimmed; no quoting
// (the format carries numbers and single-word statuses only). Blank lines
// are skipped. An empty stream yields an empty header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines;  // 1-based source line of each row
};

Table read_table(std::istream& in, const std::string& origin);
Table read_table_file(const std::string& path);

void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace starksense::csv
