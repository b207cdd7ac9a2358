#ifndef NOISECOND_KVCONFIG_HPP
#define NOISECOND_KVCONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace nc::cfg {

// Line-oriented key=value configuration. '#' starts a comment; blank lines
// are ignored. Keys are unique within a file.
using KvMap = std::map<std::string, std::string>;

KvMap parse_string(const std::string& text);
KvMap parse_file(const std::string& path);

// Overlay wins on key collisions (defaults <- file <- flags).
KvMap merged(const KvMap& base, const KvMap& overlay);

// Canonical form: sorted "key=value\n" lines.
std::string serialize(const KvMap& kv);

// FNV-1a over the canonical serialization.
std::uint64_t hash64(const KvMap& kv);
std::uint64_t hash64(const std::string& text);

// Every consumed key is declared; unknown keys are an error.
void require_known_keys(const KvMap& kv, const std::set<std::string>& known);

long get_int(const KvMap& kv, const std::string& key, long fallback);
double get_double(const KvMap& kv, const std::string& key, double fallback);
bool get_bool(const KvMap& kv, const std::string& key, bool fallback);
std::string get_str(const KvMap& kv, const std::string& key,
                    const std::string& fallback);

}  // namespace nc::cfg

#endif
