#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nmg {

/// Radians, or a multiple of pi: "pi", "pi/12", "5pi/12", "5*pi/12", "-pi/4".
double parse_angle(const std::string& text);
/// Comma-separated list with surrounding blanks removed; empty items rejected.
std::vector<std::string> split_list(const std::string& text);

using ConfigMap = std::map<std::string, std::string>;

/// Flat "key = value" lines; '#' starts a comment. Unknown keys fail with
/// "<file>:<line>: unknown key '<key>'".
ConfigMap read_config_file(const std::filesystem::path& path, const std::set<std::string>& allowed);
ConfigMap parse_config_text(const std::string& text, const std::set<std::string>& allowed,
                            const std::string& origin = "<config>");
/// Canonical "key=value\n" lines in key order; parse_config_text inverts it.
std::string serialize_config(const ConfigMap& cfg);
/// 16 hex digits of FNV-1a over serialize_config().
std::string config_hash(const ConfigMap& cfg);

/// Value of NMG_SEED when set (ConfigError if not an unsigned integer).
std::optional<std::uint64_t> seed_from_environment();

} // namespace nmg
