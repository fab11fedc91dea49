#pragma once

#include <map>
#include <string>
#include <vector>

namespace sphereflow::tomlmini {

// Minimal TOML subset: [section] / [a.b] headers, `key = value` pairs with
// strings, integers, floats, booleans and flat arrays, and # comments.
// Enough for scenario configs; parse errors carry line numbers.

struct Value {
    enum class Kind { String, Number, Boolean, Array, StringArray } kind = Kind::String;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<double> array;
    std::vector<std::string> string_array;
    int line = 0;
};

// Keys are dotted paths ("kernel.beta"); insertion order is preserved
// separately for deterministic diagnostics.
struct Document {
    std::map<std::string, Value> values;
    std::vector<std::string> order;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    const Value& at(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_number(const std::string& key) const;
    double get_number(const std::string& key, double fallback) const;
    long get_integer(const std::string& key) const;
    long get_integer(const std::string& key, long fallback) const;
    bool get_boolean(const std::string& key, bool fallback) const;
    std::vector<double> get_array(const std::string& key) const;
    std::vector<std::string> get_string_array(const std::string& key) const;
};

Document parse(const std::string& text);  // ConfigError with a line number

}  // namespace sphereflow::tomlmini
