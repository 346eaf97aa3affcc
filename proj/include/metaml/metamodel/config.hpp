#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace metaml {

using Json = nlohmann::json;

// A configuration value: a scalar (bool / number), a text, or a flat list
// of those. Stored as JSON so it serializes verbatim into checkpoints.
using ConfigValue = Json;

enum class KeyScope { Global, Type, Instance };

// Classifies a key: `name`, `Type::name` or `instance@name`. Throws
// InvalidKey when a key mixes both separators or has an empty part.
KeyScope key_scope(std::string_view key);

std::string type_key(std::string_view block_type, std::string_view param);
std::string instance_key(std::string_view instance, std::string_view param);

class ConfigStore {
 public:
  ConfigStore() = default;

  // Validates key syntax and value shape.
  void set(const std::string& key, ConfigValue value);
  bool erase(const std::string& key);

  const ConfigValue* find(const std::string& key) const;
  bool contains(const std::string& key) const { return find(key) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, ConfigValue>& entries() const { return entries_; }

  Json to_json() const;
  static ConfigStore from_json(const Json& j);

  friend bool operator==(const ConfigStore&, const ConfigStore&) = default;

 private:
  std::map<std::string, ConfigValue> entries_;
};

// Precedence: `instance@param` > `BlockType::param` > `param` > fallback.
// Throws MissingParam when `required` and nothing supplies a value.
ConfigValue resolve_param(const ConfigStore& cfg, std::string_view block_type,
                          std::string_view instance, std::string_view param,
                          bool required,
                          const std::optional<ConfigValue>& fallback = std::nullopt);

// Which key (if any) supplied the resolved value; used for resolved-param
// snapshots in the log.
std::optional<std::string> resolving_key(const ConfigStore& cfg, std::string_view block_type,
                                         std::string_view instance, std::string_view param);

}  // namespace metaml
