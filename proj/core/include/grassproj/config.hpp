#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace grassproj {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

/// Flat key/value configuration in a TOML subset: `key = value` lines with
/// strings, integers, floats, booleans and one-line numeric arrays; `#`
/// starts a comment. Tables are not supported.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const ConfigValue& at(const std::string& key) const;
    std::vector<std::string> keys() const;

    std::string get_string(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    /// Integers are accepted.
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;

    std::string string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t int_or(const std::string& key, std::int64_t fallback) const;
    double double_or(const std::string& key, double fallback) const;

    /// Throws on keys outside `allowed`.
    void require_known(const std::set<std::string>& allowed) const;

    /// Sorted `key = value` lines; independent of the order in the source.
    std::string canonical() const;
    std::uint64_t hash() const { return fnv1a(canonical()); }

    void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }

private:
    std::map<std::string, ConfigValue> values_;
};

}  // namespace grassproj
