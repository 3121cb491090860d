#include "starksense/csv_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace starksense::csv {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string current;
    std::istringstream in(line);
    while (std::getline(in, current, ',')) cells.push_back(trim(current));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) throw CsvError("number formatting failed");
    return std::string(buffer, ptr);
}

double parse_double(const std::string& cell, const std::string& where) {
    const std::string t = trim(cell);
    const std::string l = lower(t);
    if (l == "nan") return std::nan("");
    if (l == "inf" || l == "+inf") return HUGE_VAL;
    if (l == "-inf") return -HUGE_VAL;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw CsvError(where + ": expected a number, got '" + t + "'");
    return out;
}

Table read_table(std::istream& in, const std::string& origin) {
    Table table;
    std::string line;
    int number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        if (!have_header) {
            table.header = split_cells(line);
            have_header = true;
            continue;
        }
        table.rows.push_back(split_cells(line));
        table.row_lines.push_back(number);
    }
    (void)origin;
    return table;
}

Table read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open CSV file '" + path + "'");
    return read_table(in, path);
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

}  // namespace starksense::csv
