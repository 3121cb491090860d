#include "starksense/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace starksense::config {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
    return true;
}

// Strip a comment: '#' at start of line or preceded by whitespace.
std::string strip_comment(const std::string& line) {
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1]))))
            return line.substr(0, i);
    }
    return line;
}

double parse_double_token(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError(where + ": expected a number, got '" + t + "'");
    return out;
}

}  // namespace

void ConfigFile::set(const std::string& key, const std::string& value, int line) {
    values_[key] = value;
    lines_[key] = line;
}

std::string ConfigFile::location(const std::string& key) const {
    auto it = lines_.find(key);
    if (it == lines_.end() || it->second == 0) return origin_;
    return origin_ + ":" + std::to_string(it->second);
}

std::string ConfigFile::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key) const {
    return parse_double_token(get_string(key), location(key) + ": " + key);
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int ConfigFile::get_int(const std::string& key) const {
    const std::string t = trim(get_string(key));
    int out = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError(location(key) + ": " + key + ": expected an integer, got '" + t + "'");
    return out;
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool ConfigFile::get_bool(const std::string& key) const {
    std::string t = trim(get_string(key));
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw ConfigError(location(key) + ": " + key + ": expected a boolean, got '" + t + "'");
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
    std::string raw = get_string(key);
    for (char& c : raw)
        if (c == ',') c = ' ';
    std::istringstream in(raw);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(parse_double_token(token, location(key) + ": " + key));
    if (out.empty())
        throw ConfigError(location(key) + ": " + key + ": expected a list of numbers");
    return out;
}

ConfigFile parse_string(const std::string& text, const std::string& origin) {
    ConfigFile file(origin);
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(number) +
                              ": expected 'key = value', got '" + body + "'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError(origin + ":" + std::to_string(number) + ": invalid key '" + key +
                              "' (use letters, digits, '_', '.')");
        if (value.empty())
            throw ConfigError(origin + ":" + std::to_string(number) + ": empty value for '" +
                              key + "'");
        file.set(key, value, number);
    }
    return file;
}

ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

}  // namespace starksense::config
