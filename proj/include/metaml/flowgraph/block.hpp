#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metaml/metamodel/metamodel.hpp"

namespace metaml {

namespace surrogate {
class Backend;
}
class ControlRegistry;

// λ transforms models, κ routes control, O runs an optimization search.
enum class Role { Lambda, Kappa, Opt };
std::string_view to_string(Role r);

inline constexpr int kUnbounded = -1;

struct Multiplicity {
  int in_min = 1;
  int in_max = 1;
  int out_min = 1;
  int out_max = 1;

  bool in_ok(int n) const { return n >= in_min && (in_max == kUnbounded || n <= in_max); }
  bool out_ok(int n) const { return n >= out_min && (out_max == kUnbounded || n <= out_max); }
  std::string describe() const;  // e.g. "1-to-(2..*)"
};

struct ParamSpec {
  std::string name;
  std::string kind;  // "number" | "integer" | "bool" | "text" | "list"
  bool required = false;
  std::optional<ConfigValue> default_value;
};

// One meta-model leaving a block on a given output slot (outgoing edge).
struct Emission {
  std::size_t out_slot = 0;
  MetaModel mm;
};

struct StopSignal {
  Json value;
  MetaModel mm;
};

struct BlockOutput {
  std::vector<Emission> emissions;
  std::optional<StopSignal> stop;
};

struct BlockType;

// Everything a behavior may read. Blocks hold no state of their own; a
// firing is a function of (context, inputs).
struct BlockContext {
  Actor actor;
  const BlockType* type = nullptr;
  std::vector<std::string> out_labels;  // one per outgoing edge, edge order
  std::size_t in_degree = 0;
  const surrogate::Backend* backend = nullptr;
  const ControlRegistry* controls = nullptr;

  // Declared params resolve through the config scopes with their defaults.
  ConfigValue param(const ConfigStore& cfg, const std::string& name) const;
  double number(const ConfigStore& cfg, const std::string& name) const;
  std::int64_t integer(const ConfigStore& cfg, const std::string& name) const;
  bool flag(const ConfigStore& cfg, const std::string& name) const;
  std::string text(const ConfigStore& cfg, const std::string& name) const;
  Json resolved_params(const ConfigStore& cfg) const;

  std::size_t slot_for_label(const std::string& label) const;
};

using BlockBehavior = std::function<BlockOutput(const BlockContext&, std::vector<MetaModel>)>;

enum class Firing { SingleArrival, Barrier };

struct BlockType {
  std::string name;
  Role role = Role::Lambda;
  Multiplicity multiplicity;
  std::vector<ParamSpec> params;
  BlockBehavior behavior;
  Firing firing = Firing::SingleArrival;
  bool labeled_outputs = false;  // BRANCH: outgoing edges carry "true"/"false"

  const ParamSpec* find_param(const std::string& param) const;
};

class BlockRegistry {
 public:
  // Registry pre-loaded with every built-in block type.
  static BlockRegistry with_builtins();

  void register_block_type(BlockType type);  // DuplicateType
  const BlockType& at(const std::string& name) const;  // UnknownType
  const BlockType* find(const std::string& name) const;
  bool contains(const std::string& name) const { return types_.count(name) > 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, BlockType> types_;
};

namespace block_names {
inline constexpr const char* kModelGen = "KERAS-MODEL-GEN";
inline constexpr const char* kHls4ml = "HLS4ML";
inline constexpr const char* kVivadoHls = "VIVADO-HLS";
inline constexpr const char* kSynthesis = "SYNTHESIS";
inline constexpr const char* kPruning = "PRUNING";
inline constexpr const char* kScaling = "SCALING";
inline constexpr const char* kQuantization = "QUANTIZATION";
inline constexpr const char* kExternal = "EXTERNAL";
inline constexpr const char* kFork = "FORK";
inline constexpr const char* kJoin = "JOIN";
inline constexpr const char* kBranch = "BRANCH";
inline constexpr const char* kReduce = "REDUCE";
inline constexpr const char* kStop = "STOP";
}  // namespace block_names

}  // namespace metaml
