#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "metaml/errors.hpp"
#include "metaml/flowgraph/graph.hpp"
#include "metaml/scheduler/scheduler.hpp"

namespace metaml::cli {

// Malformed flow files (bad JSON, wrong shapes, unknown fields).
class FlowParseError : public Error {
 public:
  explicit FlowParseError(const std::string& what) : Error("FlowParseError", what) {}
};

struct BlockDecl {
  std::string name;
  std::string type;
  Json params = Json::object();  // becomes `name@param` config entries
};

struct ConnectionDecl {
  std::vector<std::string> from;
  std::vector<std::string> to;
  std::string label = kDefaultLabel;
};

struct RunSection {
  int workers = 1;
  std::int64_t job_budget = 10000;
  std::string storage_root;
  std::uint64_t seed = 0;
  // "reference", {"reference": {constant overrides}}, or an external
  // evaluator {"command", "args", "timeout_s"}.
  Json backend = "reference";
};

struct FlowFile {
  std::vector<BlockDecl> blocks;
  std::vector<ConnectionDecl> connections;
  ConfigStore config;
  RunSection run;

  static FlowFile parse(const Json& j);           // FlowParseError
  static FlowFile parse_text(std::string_view text);
  static FlowFile load(const std::filesystem::path& path);  // FlowParseError, IoError

  // UnknownType, DuplicateInstance, UnknownInstance.
  FlowGraph build(const BlockRegistry& registry) const;
  // `config` plus every block's params as instance-scoped keys; `graph`
  // must come from build() so default names line up.
  ConfigStore effective_config(const FlowGraph& graph) const;
};

std::unique_ptr<surrogate::Backend> make_backend(const Json& spec);

}  // namespace metaml::cli
