#include "metaml/metamodel/config.hpp"

#include "metaml/errors.hpp"

namespace metaml {

namespace {

bool is_scalar(const Json& v) {
  return v.is_boolean() || v.is_number() || v.is_string();
}

void check_value(const std::string& key, const Json& v) {
  if (is_scalar(v)) return;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!is_scalar(e)) throw InvalidValue("config '" + key + "': lists hold scalars or texts only");
    }
    return;
  }
  throw InvalidValue("config '" + key + "': expected scalar, text or list");
}

}  // namespace

KeyScope key_scope(std::string_view key) {
  const auto scope_pos = key.find("::");
  const auto at_pos = key.find('@');
  if (key.empty()) throw InvalidKey("empty key");
  if (scope_pos != std::string_view::npos && at_pos != std::string_view::npos) {
    throw InvalidKey("key '" + std::string(key) + "' mixes '::' and '@'");
  }
  if (scope_pos != std::string_view::npos) {
    if (scope_pos == 0 || scope_pos + 2 >= key.size() ||
        key.find("::", scope_pos + 2) != std::string_view::npos) {
      throw InvalidKey("malformed type-scoped key '" + std::string(key) + "'");
    }
    return KeyScope::Type;
  }
  if (at_pos != std::string_view::npos) {
    if (at_pos == 0 || at_pos + 1 >= key.size() || key.find('@', at_pos + 1) != std::string_view::npos) {
      throw InvalidKey("malformed instance-scoped key '" + std::string(key) + "'");
    }
    return KeyScope::Instance;
  }
  return KeyScope::Global;
}

std::string type_key(std::string_view block_type, std::string_view param) {
  return std::string(block_type) + "::" + std::string(param);
}

std::string instance_key(std::string_view instance, std::string_view param) {
  return std::string(instance) + "@" + std::string(param);
}

void ConfigStore::set(const std::string& key, ConfigValue value) {
  key_scope(key);
  check_value(key, value);
  entries_[key] = std::move(value);
}

bool ConfigStore::erase(const std::string& key) { return entries_.erase(key) > 0; }

const ConfigValue* ConfigStore::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

Json ConfigStore::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : entries_) j[k] = v;
  return j;
}

ConfigStore ConfigStore::from_json(const Json& j) {
  if (!j.is_object()) throw InvalidValue("config must be an object");
  ConfigStore cfg;
  for (const auto& [k, v] : j.items()) cfg.set(k, v);
  return cfg;
}

std::optional<std::string> resolving_key(const ConfigStore& cfg, std::string_view block_type,
                                         std::string_view instance, std::string_view param) {
  for (auto key : {instance_key(instance, param), type_key(block_type, param), std::string(param)}) {
    if (cfg.contains(key)) return key;
  }
  return std::nullopt;
}

ConfigValue resolve_param(const ConfigStore& cfg, std::string_view block_type,
                          std::string_view instance, std::string_view param, bool required,
                          const std::optional<ConfigValue>& fallback) {
  if (auto key = resolving_key(cfg, block_type, instance, param)) return *cfg.find(*key);
  if (fallback) return *fallback;
  if (required) {
    throw MissingParam("parameter '" + std::string(param) + "' of " + std::string(instance) + " (" +
                       std::string(block_type) + ") has no value");
  }
  return ConfigValue{};
}

}  // namespace metaml
