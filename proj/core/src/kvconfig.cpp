#include "noisecond/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include "noisecond/error.hpp"

namespace nc::cfg {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvMap parse_string(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       " is not key=value: '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw UsageError("config line " + std::to_string(lineno) + " has empty key");
    if (kv.count(key))
      throw UsageError("duplicate config key '" + key + "'");
    kv[key] = val;
  }
  return kv;
}

KvMap parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str());
}

KvMap merged(const KvMap& base, const KvMap& overlay) {
  KvMap out = base;
  for (const auto& [k, v] : overlay) out[k] = v;
  return out;
}

std::string serialize(const KvMap& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t hash64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash64(const KvMap& kv) { return hash64(serialize(kv)); }

void require_known_keys(const KvMap& kv, const std::set<std::string>& known) {
  for (const auto& [k, _] : kv)
    if (!known.count(k)) throw UsageError("unknown config key '" + k + "'");
}

long get_int(const KvMap& kv, const std::string& key, long fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' is not an integer: '" +
                     it->second + "'");
  }
}

double get_double(const KvMap& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' is not a number: '" +
                     it->second + "'");
  }
}

bool get_bool(const KvMap& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw UsageError("config key '" + key + "' is not a boolean: '" + it->second + "'");
}

std::string get_str(const KvMap& kv, const std::string& key,
                    const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

}  // namespace nc::cfg
