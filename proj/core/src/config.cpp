#include "grassproj/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace grassproj {

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

bool parse_number(const std::string& s, ConfigValue& out) {
    if (s.empty()) return false;
    std::string t;
    for (char c : s)
        if (c != '_') t += c;
    const bool floaty = t.find_first_of(".eE") != std::string::npos || t == "inf" || t == "+inf" || t == "-inf" ||
                        t == "nan";
    const char* b = t.data();
    const char* e = t.data() + t.size();
    if (*b == '+') ++b;
    if (!floaty) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e) return false;
        out = v;
        return true;
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return false;
    out = v;
    return true;
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_str && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

ConfigValue parse_value(const std::string& raw, int line) {
    const std::string v = trim(raw);
    if (v.empty()) fail(line, "missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            char c = v[i];
            if (c == '\\') {
                if (i + 2 >= v.size()) fail(line, "dangling escape");
                const char n = v[++i];
                switch (n) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: fail(line, std::string("unsupported escape \\") + n);
                }
            } else if (c == '"') {
                fail(line, "unexpected quote inside string");
            }
            out += c;
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') fail(line, "arrays must close on the same line");
        std::vector<double> out;
        const std::string body = trim(std::string_view(v).substr(1, v.size() - 2));
        if (body.empty()) return out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) fail(line, "empty array element");
            ConfigValue num;
            if (!parse_number(t, num)) fail(line, "arrays hold numbers only, got '" + t + "'");
            out.push_back(std::holds_alternative<double>(num) ? std::get<double>(num)
                                                               : static_cast<double>(std::get<std::int64_t>(num)));
        }
        return out;
    }
    ConfigValue num;
    if (!parse_number(v, num)) fail(line, "cannot parse value '" + v + "'");
    return num;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

std::string format_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '\t') {
            out += "\\t";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

const char* type_name(const ConfigValue& v) {
    switch (v.index()) {
        case 0: return "boolean";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        default: return "array";
    }
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::stringstream ss(text);
    std::string line;
    int no = 0;
    while (std::getline(ss, line)) {
        ++no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') fail(no, "tables are not supported; use flat keys");
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(no, "expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (!valid_key(key)) fail(no, "invalid key '" + key + "'");
        if (c.has(key)) fail(no, "duplicate key '" + key + "'");
        c.values_[key] = parse_value(body.substr(eq + 1), no);
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const ConfigValue& Config::at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
}

std::string Config::get_string(const std::string& key) const {
    const auto& v = at(key);
    if (auto p = std::get_if<std::string>(&v)) return *p;
    throw ConfigError("config key '" + key + "' must be a string, got " + type_name(v));
}

std::int64_t Config::get_int(const std::string& key) const {
    const auto& v = at(key);
    if (auto p = std::get_if<std::int64_t>(&v)) return *p;
    throw ConfigError("config key '" + key + "' must be an integer, got " + type_name(v));
}

double Config::get_double(const std::string& key) const {
    const auto& v = at(key);
    if (auto p = std::get_if<double>(&v)) return *p;
    if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
    throw ConfigError("config key '" + key + "' must be a number, got " + type_name(v));
}

bool Config::get_bool(const std::string& key) const {
    const auto& v = at(key);
    if (auto p = std::get_if<bool>(&v)) return *p;
    throw ConfigError("config key '" + key + "' must be a boolean, got " + type_name(v));
}

std::vector<double> Config::get_list(const std::string& key) const {
    const auto& v = at(key);
    if (auto p = std::get_if<std::vector<double>>(&v)) return *p;
    throw ConfigError("config key '" + key + "' must be an array, got " + type_name(v));
}

std::string Config::string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::int64_t Config::int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

void Config::require_known(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : values_)
        if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "'");
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        switch (v.index()) {
            case 0: out += std::get<bool>(v) ? "true" : "false"; break;
            case 1: out += std::to_string(std::get<std::int64_t>(v)); break;
            case 2: out += format_double(std::get<double>(v)); break;
            case 3: out += quote(std::get<std::string>(v)); break;
            default: {
                out += '[';
                const auto& a = std::get<std::vector<double>>(v);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    if (i) out += ", ";
                    out += format_double(a[i]);
                }
                out += ']';
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace grassproj
