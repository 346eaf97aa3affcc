#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metaml/flowgraph/block.hpp"

namespace metaml {

inline constexpr const char* kDefaultLabel = "out";

struct Edge {
  std::string src;
  std::string label = kDefaultLabel;
  std::string dst;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Violation {
  std::string kind;  // no_source | in_multiplicity | out_multiplicity | branch_labels | bad_label | illegal_cycle | unknown_type
  std::string instance;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

// The design-flow architecture: block instances and labeled stream channels.
// Cycles are allowed (feedback through JOIN / BRANCH).
class FlowGraph {
 public:
  explicit FlowGraph(const BlockRegistry& registry) : registry_(&registry) {}

  // Default name is `<type>_<n>`. Throws UnknownType, DuplicateInstance.
  std::string add_block(const std::string& type_name, std::optional<std::string> instance_name = std::nullopt);

  // Adds the cross product of src x dst. Throws UnknownInstance.
  FlowGraph& connect(const std::vector<std::string>& srcs, const std::vector<std::string>& dsts,
                     const std::string& label = kDefaultLabel);
  FlowGraph& connect(std::initializer_list<std::string> srcs, std::initializer_list<std::string> dsts,
                     const std::string& label = kDefaultLabel) {
    return connect(std::vector<std::string>(srcs), std::vector<std::string>(dsts), label);
  }
  FlowGraph& connect(const std::string& src, const std::string& dst, const std::string& label = kDefaultLabel) {
    return connect(std::vector{src}, std::vector{dst}, label);
  }

  // All violations, never stops at the first.
  std::vector<Violation> validate() const;

  const BlockRegistry& registry() const { return *registry_; }
  const std::vector<std::string>& instances() const { return order_; }
  const std::string& type_of(const std::string& instance) const;  // UnknownInstance
  const BlockType& block_type(const std::string& instance) const { return registry_->at(type_of(instance)); }
  bool contains(const std::string& instance) const { return nodes_.count(instance) > 0; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Edge indices in insertion order.
  std::vector<std::size_t> out_edges(const std::string& instance) const;
  std::vector<std::size_t> in_edges(const std::string& instance) const;
  std::vector<std::string> sources() const;

  // Same nodes (names and types) and same edge multiset.
  bool same_structure(const FlowGraph& o) const;

 private:
  const BlockRegistry* registry_;
  std::vector<std::string> order_;
  std::map<std::string, std::string> nodes_;
  std::vector<Edge> edges_;
};

std::string describe(const Violation& v);

}  // namespace metaml
