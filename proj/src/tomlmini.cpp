#include "sphereflow/tomlmini.hpp"

#include <cctype>
#include <sstream>

#include "sphereflow/errors.hpp"

namespace sphereflow::tomlmini {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strip a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            return false;
    return true;
}

Value parse_scalar(const std::string& raw, int line) {
    Value v;
    v.line = line;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        v.kind = Value::Kind::String;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::Boolean;
        v.boolean = raw == "true";
        return v;
    }
    try {
        std::size_t used = 0;
        const double num = std::stod(raw, &used);
        if (used == raw.size()) {
            v.kind = Value::Kind::Number;
            v.num = num;
            return v;
        }
    } catch (...) {
    }
    fail(line, "cannot parse value '" + raw + "'");
}

Value parse_array(const std::string& raw, int line) {
    Value v;
    v.line = line;
    std::string inner = trim(raw.substr(1, raw.size() - 2));
    std::vector<std::string> items;
    std::string cur;
    bool quoted = false;
    for (char c : inner) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) items.push_back(trim(cur));
    bool strings = false, numbers = false;
    for (const auto& item : items) {
        const Value s = parse_scalar(item, line);
        if (s.kind == Value::Kind::String) {
            strings = true;
            v.string_array.push_back(s.str);
        } else if (s.kind == Value::Kind::Number) {
            numbers = true;
            v.array.push_back(s.num);
        } else {
            fail(line, "arrays may hold numbers or strings");
        }
    }
    if (strings && numbers) fail(line, "arrays must be homogeneous");
    v.kind = strings ? Value::Kind::StringArray : Value::Kind::Array;
    return v;
}

}  // namespace

Document parse(const std::string& text) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') fail(lineno, "unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (!valid_key(section)) fail(lineno, "bad section name '" + section + "'");
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string raw = trim(body.substr(eq + 1));
        if (!valid_key(key)) fail(lineno, "bad key '" + key + "'");
        if (raw.empty()) fail(lineno, "missing value for '" + key + "'");
        const std::string path = section.empty() ? key : section + "." + key;
        if (doc.values.count(path)) fail(lineno, "duplicate key '" + path + "'");
        Value v;
        if (raw.front() == '[') {
            if (raw.back() != ']') fail(lineno, "unterminated array");
            v = parse_array(raw, lineno);
        } else {
            v = parse_scalar(raw, lineno);
        }
        doc.values.emplace(path, std::move(v));
        doc.order.push_back(path);
    }
    return doc;
}

const Value& Document::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string Document::get_string(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Value::Kind::String)
        throw ConfigError("config key '" + key + "' must be a string");
    return v.str;
}

std::string Document::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Document::get_number(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Value::Kind::Number)
        throw ConfigError("config key '" + key + "' must be a number");
    return v.num;
}

double Document::get_number(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
}

long Document::get_integer(const std::string& key) const {
    const double v = get_number(key);
    const long r = static_cast<long>(v);
    if (static_cast<double>(r) != v)
        throw ConfigError("config key '" + key + "' must be an integer");
    return r;
}

long Document::get_integer(const std::string& key, long fallback) const {
    return has(key) ? get_integer(key) : fallback;
}

bool Document::get_boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Value& v = at(key);
    if (v.kind != Value::Kind::Boolean)
        throw ConfigError("config key '" + key + "' must be a boolean");
    return v.boolean;
}

std::vector<double> Document::get_array(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Value::Kind::Array)
        throw ConfigError("config key '" + key + "' must be a numeric array");
    return v.array;
}

std::vector<std::string> Document::get_string_array(const std::string& key) const {
    const Value& v = at(key);
    if (v.kind != Value::Kind::StringArray)
        throw ConfigError("config key '" + key + "' must be a string array");
    return v.string_array;
}

}  // namespace sphereflow::tomlmini
