#include "metaml/cli/flowfile.hpp"

#include "metaml/flowgraph/external.hpp"
#include "metaml/metamodel/checkpoint.hpp"

namespace metaml::cli {

namespace {

void only_fields(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw FlowParseError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw FlowParseError("unknown field '" + k + "' in " + where);
  }
}

std::string text_field(const Json& j, const char* key, const std::string& where, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw FlowParseError(where + " needs '" + key + "'");
    return {};
  }
  if (!j[key].is_string()) throw FlowParseError(where + ": '" + key + "' must be a text");
  return j[key].get<std::string>();
}

std::vector<std::string> endpoints(const Json& j, const std::string& where) {
  if (j.is_string()) return {j.get<std::string>()};
  if (j.is_array() && !j.empty()) {
    std::vector<std::string> out;
    for (const auto& e : j) {
      if (!e.is_string()) throw FlowParseError(where + ": endpoints must be block names");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  throw FlowParseError(where + ": endpoint must be a block name or a non-empty list of names");
}

template <typename T>
T integer_field(const Json& v, const std::string& name) {
  if (!v.is_number_integer()) throw FlowParseError("run." + name + " must be an integer");
  return v.get<T>();
}

}  // namespace

FlowFile FlowFile::parse(const Json& j) {
  only_fields(j, {"blocks", "connections", "config", "run"}, "flow file");
  FlowFile f;

  if (!j.contains("blocks") || !j["blocks"].is_array()) throw FlowParseError("flow file needs a 'blocks' list");
  for (std::size_t i = 0; i < j["blocks"].size(); ++i) {
    const auto& b = j["blocks"][i];
    const auto where = "blocks[" + std::to_string(i) + "]";
    only_fields(b, {"name", "type", "params"}, where);
    BlockDecl d;
    d.type = text_field(b, "type", where);
    d.name = text_field(b, "name", where, false);
    if (b.contains("params")) {
      if (!b["params"].is_object()) throw FlowParseError(where + ": params must be an object");
      d.params = b["params"];
    }
    f.blocks.push_back(std::move(d));
  }

  if (j.contains("connections")) {
    if (!j["connections"].is_array()) throw FlowParseError("'connections' must be a list");
    for (std::size_t i = 0; i < j["connections"].size(); ++i) {
      const auto& c = j["connections"][i];
      const auto where = "connections[" + std::to_string(i) + "]";
      only_fields(c, {"from", "to", "label"}, where);
      if (!c.contains("from") || !c.contains("to")) throw FlowParseError(where + " needs 'from' and 'to'");
      ConnectionDecl d;
      d.from = endpoints(c["from"], where);
      d.to = endpoints(c["to"], where);
      if (c.contains("label")) d.label = text_field(c, "label", where);
      f.connections.push_back(std::move(d));
    }
  }

  if (j.contains("config")) {
    if (!j["config"].is_object()) throw FlowParseError("'config' must be an object");
    try {
      f.config = ConfigStore::from_json(j["config"]);
    } catch (const Error& e) {
      throw FlowParseError(std::string("config: ") + e.what());
    }
  }

  if (j.contains("run")) {
    const auto& r = j["run"];
    only_fields(r, {"workers", "job_budget", "storage_root", "seed", "backend"}, "run");
    if (r.contains("workers")) f.run.workers = integer_field<int>(r["workers"], "workers");
    if (r.contains("job_budget")) f.run.job_budget = integer_field<std::int64_t>(r["job_budget"], "job_budget");
    if (r.contains("seed")) f.run.seed = integer_field<std::uint64_t>(r["seed"], "seed");
    if (r.contains("storage_root")) f.run.storage_root = text_field(r, "storage_root", "run");
    if (r.contains("backend")) {
      f.run.backend = r["backend"];
      try {
        make_backend(f.run.backend);
      } catch (const std::exception& e) {
        throw FlowParseError(std::string("run.backend: ") + e.what());
      }
    }
    if (f.run.workers < 1) throw FlowParseError("run.workers must be >= 1");
    if (f.run.job_budget <= 0) throw FlowParseError("run.job_budget must be > 0");
  }
  return f;
}

FlowFile FlowFile::parse_text(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw FlowParseError(std::string("malformed JSON: ") + e.what());
  }
  return parse(j);
}

FlowFile FlowFile::load(const std::filesystem::path& path) { return parse_text(read_file(path)); }

FlowGraph FlowFile::build(const BlockRegistry& registry) const {
  FlowGraph g(registry);
  for (const auto& b : blocks) {
    g.add_block(b.type, b.name.empty() ? std::nullopt : std::optional<std::string>(b.name));
  }
  for (const auto& c : connections) g.connect(c.from, c.to, c.label);
  return g;
}

ConfigStore FlowFile::effective_config(const FlowGraph& graph) const {
  ConfigStore cfg = config;
  const auto& names = graph.instances();
  for (std::size_t i = 0; i < blocks.size() && i < names.size(); ++i) {
    for (const auto& [k, v] : blocks[i].params.items()) {
      try {
        cfg.set(instance_key(names[i], k), v);
      } catch (const Error& e) {
        throw FlowParseError("params of '" + names[i] + "': " + e.what());
      }
    }
  }
  return cfg;
}

std::unique_ptr<surrogate::Backend> make_backend(const Json& spec) {
  if (spec.is_string()) {
    if (spec.get<std::string>() != "reference") throw InvalidValue("backend must be \"reference\" or an object");
    return std::make_unique<surrogate::ReferenceBackend>();
  }
  if (!spec.is_object()) throw InvalidValue("backend must be \"reference\" or an object");
  if (spec.contains("reference")) {
    if (spec.size() != 1) throw InvalidValue("a reference backend object holds only 'reference'");
    return std::make_unique<surrogate::ReferenceBackend>(surrogate::ReferenceBackend::from_json(spec["reference"]));
  }
  return std::make_unique<ExternalBackend>(ExternalBlockSpec::from_json(spec), surrogate::ReferenceBackend());
}

}  // namespace metaml::cli
