#pragma once

#include <map>
#include <string>
#include <vector>

#include "starksense/errors.hpp"

namespace starksense::config {

// Malformed file or a typed lookup that cannot be satisfied; the message
// carries "origin:line:" so users can jump to the offending entry.
struct ConfigError : Error {
    using Error::Error;
};

// Flat "dotted.section.key = value" store. '#' opens a comment when it
// starts the line or follows whitespace; blank lines are skipped; a later
// duplicate key overrides an earlier one. Keys are [A-Za-z0-9_.]+.
class ConfigFile {
public:
    ConfigFile() = default;
    explicit ConfigFile(std::string origin) : origin_(std::move(origin)) {}

    void set(const std::string& key, const std::string& value, int line = 0);
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma- or whitespace-separated list of numbers.
    std::vector<double> get_double_list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::string& origin() const { return origin_; }
    // "origin:line" for keys read from a file, plain origin otherwise.
    std::string location(const std::string& key) const;

private:
    std::string origin_ = "<args>";
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

ConfigFile parse_string(const std::string& text, const std::string& origin);
ConfigFile parse_file(const std::string& path);

}  // namespace starksense::config
