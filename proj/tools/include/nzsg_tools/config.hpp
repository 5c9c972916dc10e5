#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nzsg::tools {

/// Config syntax or type error. line 0 marks a command-line override.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line, std::size_t column);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// One scalar item: the text and whether it was written as a quoted string.
struct ConfigItem {
    std::string text;
    bool quoted = false;
    std::size_t column = 0;
};

struct ConfigEntry {
    std::vector<ConfigItem> items;  // one item unless is_list
    bool is_list = false;
    std::size_t line = 0;
    std::size_t column = 0;
    std::string origin;             // file name or "--set"
};

/// Sectioned key/value file:
///
///     # comment
///     [section]
///     key = 1.5
///     key = "quoted string"   # trailing comment
///     key = [4, 6, 8]
///
/// Keys are addressed as "section.key".
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text, std::string origin = "config");

    /// Applies "section.key=value" with the value in file syntax. `origin`
    /// names the flag in error messages.
    void set(std::string_view assignment, const std::string& origin = "--set");

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const ConfigEntry& entry(const std::string& key) const;
    const std::map<std::string, ConfigEntry>& entries() const { return entries_; }

    /// Rejects keys outside `allowed` (exact "section.key" names).
    void check_keys(const std::vector<std::string>& allowed) const;

    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
    std::map<std::string, ConfigEntry> entries_;
};

}  // namespace nzsg::tools
