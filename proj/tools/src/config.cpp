#include "nzsg_tools/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace nzsg::tools {

ConfigError::ConfigError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                                ": " + what),
      line_(line),
      column_(column) {}

namespace {

bool is_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

class LineParser {
public:
    LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    void skip_ws() {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
    }
    bool at_end_or_comment() {
        skip_ws();
        return i_ >= s_.size() || s_[i_] == '#';
    }
    char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
    std::size_t column() const { return i_ + 1; }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, line_, column()); }

    std::string key() {
        skip_ws();
        const std::size_t start = i_;
        while (i_ < s_.size() && is_key_char(s_[i_])) ++i_;
        if (start == i_) fail("expected a key");
        return std::string(s_.substr(start, i_ - start));
    }

    void expect(char c, const char* what) {
        skip_ws();
        if (peek() != c) fail(what);
        ++i_;
    }

    ConfigItem item(bool in_list) {
        skip_ws();
        ConfigItem it;
        it.column = column();
        if (peek() == '"') {
            ++i_;
            it.quoted = true;
            while (true) {
                if (i_ >= s_.size()) fail("unterminated string");
                const char c = s_[i_++];
                if (c == '"') break;
                if (c == '\\') {
                    if (i_ >= s_.size()) fail("unterminated escape");
                    const char e = s_[i_++];
                    if (e == '"' || e == '\\')
                        it.text += e;
                    else if (e == 'n')
                        it.text += '\n';
                    else {
                        --i_;
                        fail(std::string("unknown escape '\\") + e + "'");
                    }
                } else {
                    it.text += c;
                }
            }
            return it;
        }
        const std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != '#' && s_[i_] != '"' && !(in_list && (s_[i_] == ',' || s_[i_] == ']')))
            ++i_;
        std::string_view raw = s_.substr(start, i_ - start);
        while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\t')) raw.remove_suffix(1);
        if (raw.empty()) {
            i_ = start;
            fail("expected a value");
        }
        it.text = std::string(raw);
        return it;
    }

    ConfigEntry value() {
        ConfigEntry e;
        e.line = line_;
        skip_ws();
        e.column = column();
        if (peek() == '[') {
            ++i_;
            e.is_list = true;
            skip_ws();
            if (peek() == ']') {
                ++i_;
            } else {
                while (true) {
                    e.items.push_back(item(true));
                    skip_ws();
                    if (peek() == ',') {
                        ++i_;
                        continue;
                    }
                    if (peek() == ']') {
                        ++i_;
                        break;
                    }
                    fail("expected ',' or ']' in list");
                }
            }
        } else {
            e.items.push_back(item(false));
        }
        if (!at_end_or_comment()) fail("unexpected text after value");
        return e;
    }

private:
    std::string_view s_;
    std::size_t line_;
    std::size_t i_ = 0;
};

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string origin) {
    ConfigFile cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        LineParser p(line, line_no);
        if (!p.at_end_or_comment()) {
            if (p.peek() == '[') {
                p.expect('[', "expected '['");
                section = p.key();
                p.expect(']', "expected ']' after section name");
                if (!p.at_end_or_comment()) p.fail("unexpected text after section header");
            } else {
                const std::size_t key_col = p.column();
                const std::string key = p.key();
                if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no, key_col);
                p.expect('=', "expected '=' after key");
                ConfigEntry e = p.value();
                e.origin = origin;
                const std::string full = section + "." + key;
                if (cfg.entries_.count(full))
                    throw ConfigError("duplicate key '" + full + "'", line_no, key_col);
                cfg.entries_[full] = std::move(e);
            }
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return cfg;
}

void ConfigFile::set(std::string_view assignment, const std::string& origin) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("--set expects section.key=value, got '" + std::string(assignment) + "'", 0, 0);
    std::string key(assignment.substr(0, eq));
    key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == ' ' || c == '\t'; }), key.end());
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() ||
        !std::all_of(key.begin(), key.end(), [](char c) { return is_key_char(c) || c == '.'; }))
        throw ConfigError("--set key must look like section.key, got '" + key + "'", 0, 0);
    LineParser p(assignment.substr(eq + 1), 0);
    ConfigEntry e;
    try {
        e = p.value();
    } catch (const ConfigError& err) {
        throw ConfigError(origin + " " + key + ": " + err.what(), 0, 0);
    }
    e.origin = origin;
    entries_[key] = std::move(e);
}

const ConfigEntry& ConfigFile::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing key '" + key + "'", 0, 0);
    return it->second;
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
    const ConfigEntry& e = entry(key);
    if (e.line == 0) throw ConfigError(e.origin + " (" + key + "): " + what, 0, 0);
    throw ConfigError(key + ": " + what, e.line, e.column);
}

void ConfigFile::check_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [key, e] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            if (e.line == 0) throw ConfigError("unknown key '" + key + "' in " + e.origin, 0, 0);
            throw ConfigError("unknown key '" + key + "'", e.line, e.column);
        }
    }
}

namespace {

bool to_double(const std::string& s, double& v) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    return r.ec == std::errc() && r.ptr == e && std::isfinite(v);
}

}  // namespace

std::string ConfigFile::get_string(const std::string& key) const {
    const ConfigEntry& e = entry(key);
    if (e.is_list) fail(key, "expected a single value, found a list");
    return e.items[0].text;
}

double ConfigFile::get_double(const std::string& key) const {
    const std::string s = get_string(key);
    double v = 0.0;
    if (!to_double(s, v)) fail(key, "expected a number, found '" + s + "'");
    return v;
}

long long ConfigFile::get_int(const std::string& key) const {
    const std::string s = get_string(key);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(key, "expected an integer, found '" + s + "'");
    return v;
}

bool ConfigFile::get_bool(const std::string& key) const {
    const std::string s = get_string(key);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    fail(key, "expected true or false, found '" + s + "'");
}

std::vector<double> ConfigFile::get_doubles(const std::string& key) const {
    const ConfigEntry& e = entry(key);
    std::vector<double> out;
    for (const auto& it : e.items) {
        double v = 0.0;
        if (!to_double(it.text, v)) fail(key, "expected a number, found '" + it.text + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& key) const {
    const ConfigEntry& e = entry(key);
    std::vector<std::string> out;
    for (const auto& it : e.items) out.push_back(it.text);
    return out;
}

}  // namespace nzsg::tools
