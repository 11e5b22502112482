#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqla/errors.hpp"

namespace vqla {

// Layered key-value configuration: defaults, then an INI-style config file
// ("key = value" lines under "[section]" headers, keys addressed as
// "section.key"), then command-line flags. Each key remembers which layer
// won so output artifacts can echo a self-describing header.
class RunConfig {
 public:
  enum class Source { Default, ConfigFile, Flag };

  void set_default(const std::string& key, const std::string& value);
  void load_file(const std::string& path);          // throws IoFailure / BadConfig
  void set_flag(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;  // throws BadConfig when absent
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  Source source(const std::string& key) const;

  // Resolved view for artifact headers: {key: {value, source}} sorted by key.
  nlohmann::ordered_json echo() const;

 private:
  struct Entry {
    std::string value;
    Source source = Source::Default;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace vqla
