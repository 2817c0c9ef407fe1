#include "nmg/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nmg/errors.hpp"

namespace nmg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_number(const std::string& s, const std::string& whole) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse angle '" + whole + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError("cannot parse angle '" + whole + "'");
    return v;
}

} // namespace

double parse_angle(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s.empty()) throw ConfigError("empty angle");
    const std::size_t pi = s.find("pi");
    if (pi == std::string::npos) return parse_number(s, text);
    std::string head = s.substr(0, pi);
    std::string tail = s.substr(pi + 2);
    if (!head.empty() && head.back() == '*') head.pop_back();
    double factor = 1.0;
    if (head == "-")
        factor = -1.0;
    else if (!head.empty() && head != "+")
        factor = parse_number(head, text);
    double divisor = 1.0;
    if (!tail.empty()) {
        if (tail.front() != '/') throw ConfigError("cannot parse angle '" + text + "'");
        divisor = parse_number(tail.substr(1), text);
        if (divisor == 0.0) throw ConfigError("angle '" + text + "' divides by zero");
    }
    return factor * std::numbers::pi / divisor;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty item in list '" + text + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

ConfigMap parse_config_text(const std::string& text, const std::set<std::string>& allowed, const std::string& origin) {
    ConfigMap out;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (!allowed.count(key)) throw ConfigError(where + "unknown key '" + key + "'");
        out[key] = value;
    }
    return out;
}

ConfigMap read_config_file(const std::filesystem::path& path, const std::set<std::string>& allowed) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str(), allowed, path.string());
}

std::string serialize_config(const ConfigMap& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg) out += k + "=" + v + "\n";
    return out;
}

std::string config_hash(const ConfigMap& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<std::uint64_t> seed_from_environment() {
    const char* v = std::getenv("NMG_SEED");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const unsigned long long s = std::strtoull(v, &end, 10);
    if (*end != '\0' || v[0] == '-') throw ConfigError(std::string("NMG_SEED is not an unsigned integer: '") + v + "'");
    return static_cast<std::uint64_t>(s);
}

} // namespace nmg
