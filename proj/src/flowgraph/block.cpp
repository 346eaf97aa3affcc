#include "metaml/flowgraph/block.hpp"

#include <cmath>

#include "metaml/errors.hpp"

namespace metaml {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Lambda: return "LAMBDA";
    case Role::Kappa: return "KAPPA";
    case Role::Opt: return "OPT";
  }
  return "?";
}

std::string Multiplicity::describe() const {
  auto range = [](int lo, int hi) {
    if (lo == hi) return std::to_string(lo);
    return "(" + std::to_string(lo) + ".." + (hi == kUnbounded ? std::string("*") : std::to_string(hi)) + ")";
  };
  return range(in_min, in_max) + "-to-" + range(out_min, out_max);
}

const ParamSpec* BlockType::find_param(const std::string& param) const {
  for (const auto& p : params) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

ConfigValue BlockContext::param(const ConfigStore& cfg, const std::string& name) const {
  const auto* spec = type->find_param(name);
  const bool required = spec && spec->required;
  const std::optional<ConfigValue> fallback = spec ? spec->default_value : std::nullopt;
  return resolve_param(cfg, type->name, actor.instance, name, required, fallback);
}

double BlockContext::number(const ConfigStore& cfg, const std::string& name) const {
  auto v = param(cfg, name);
  if (!v.is_number()) throw InvalidValue(actor.instance + ": parameter '" + name + "' must be a number");
  return v.get<double>();
}

std::int64_t BlockContext::integer(const ConfigStore& cfg, const std::string& name) const {
  auto v = param(cfg, name);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  throw InvalidValue(actor.instance + ": parameter '" + name + "' must be an integer");
}

bool BlockContext::flag(const ConfigStore& cfg, const std::string& name) const {
  auto v = param(cfg, name);
  if (!v.is_boolean()) throw InvalidValue(actor.instance + ": parameter '" + name + "' must be a boolean");
  return v.get<bool>();
}

std::string BlockContext::text(const ConfigStore& cfg, const std::string& name) const {
  auto v = param(cfg, name);
  if (!v.is_string()) throw InvalidValue(actor.instance + ": parameter '" + name + "' must be a text");
  return v.get<std::string>();
}

Json BlockContext::resolved_params(const ConfigStore& cfg) const {
  Json out = Json::object();
  for (const auto& p : type->params) {
    if (auto key = resolving_key(cfg, type->name, actor.instance, p.name)) {
      out[p.name] = *cfg.find(*key);
    } else if (p.default_value) {
      out[p.name] = *p.default_value;
    }
  }
  return out;
}

std::size_t BlockContext::slot_for_label(const std::string& label) const {
  for (std::size_t i = 0; i < out_labels.size(); ++i) {
    if (out_labels[i] == label) return i;
  }
  throw UnknownInstance(actor.instance + ": no outgoing edge labeled '" + label + "'");
}

void BlockRegistry::register_block_type(BlockType type) {
  if (type.name.empty()) throw InvalidValue("block type needs a name");
  const auto& m = type.multiplicity;
  if ((m.in_max != kUnbounded && m.in_min > m.in_max) || (m.out_max != kUnbounded && m.out_min > m.out_max)) {
    throw InvalidValue("block type '" + type.name + "' has an inverted multiplicity range");
  }
  if (types_.count(type.name)) throw DuplicateType("block type '" + type.name + "' is already registered");
  auto name = type.name;
  types_.emplace(std::move(name), std::move(type));
}

const BlockType& BlockRegistry::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw UnknownType("unknown block type '" + name + "'");
}

const BlockType* BlockRegistry::find(const std::string& name) const {
  auto it = types_.find(name);
  return it == types_.end() ? nullptr : &it->second;
}

std::vector<std::string> BlockRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : types_) out.push_back(k);
  return out;
}

}  // namespace metaml
