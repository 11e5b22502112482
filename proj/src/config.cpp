#include "vqla/config.hpp"

#include <charconv>
#include <fstream>

namespace vqla {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}
}  // namespace

void RunConfig::set_default(const std::string& key, const std::string& value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_[key] = {value, Source::Default};
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config file '" + path + "'");

  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error("BadConfig", "config line " + std::to_string(line_no) +
                                   " is neither 'key = value' nor a [section]");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw Error("BadConfig", "empty key on config line " + std::to_string(line_no));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    auto it = entries_.find(full);
    if (it == entries_.end() || it->second.source != Source::Flag) {
      entries_[full] = {value, Source::ConfigFile};
    }
  }
}

void RunConfig::set_flag(const std::string& key, const std::string& value) {
  entries_[key] = {value, Source::Flag};
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error("BadConfig", "missing configuration key '" + key + "'");
  }
  return it->second.value;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("BadConfig", "key '" + key + "' is not a number: '" + v + "'");
  }
}

int RunConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error("BadConfig", "key '" + key + "' is not an integer: '" + v + "'");
  }
  return value;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string v = get_string(key);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error("BadConfig", "key '" + key + "' is not an unsigned integer: '" + v + "'");
  }
  return value;
}

RunConfig::Source RunConfig::source(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error("BadConfig", "missing configuration key '" + key + "'");
  }
  return it->second.source;
}

nlohmann::ordered_json RunConfig::echo() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [key, entry] : entries_) {
    const char* src = entry.source == Source::Flag
                          ? "flag"
                          : (entry.source == Source::ConfigFile ? "config" : "default");
    out[key] = {{"value", entry.value}, {"source", src}};
  }
  return out;
}

}  // namespace vqla
