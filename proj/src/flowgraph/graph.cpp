#include "metaml/flowgraph/graph.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "metaml/errors.hpp"

namespace metaml {

std::string FlowGraph::add_block(const std::string& type_name, std::optional<std::string> instance_name) {
  registry_->at(type_name);
  std::string name;
  if (instance_name) {
    name = *instance_name;
    if (name.empty()) throw InvalidValue("instance name must be non-empty");
  } else {
    std::size_t n = 1;
    for (const auto& [inst, type] : nodes_) {
      if (type == type_name) ++n;
    }
    do {
      name = type_name + "_" + std::to_string(n++);
    } while (nodes_.count(name));
  }
  if (nodes_.count(name)) throw DuplicateInstance("block instance '" + name + "' already exists");
  if (name.find('@') != std::string::npos || name.find("::") != std::string::npos) {
    throw InvalidValue("instance name '" + name + "' must not contain '@' or '::'");
  }
  nodes_[name] = type_name;
  order_.push_back(name);
  return name;
}

FlowGraph& FlowGraph::connect(const std::vector<std::string>& srcs, const std::vector<std::string>& dsts,
                              const std::string& label) {
  for (const auto& n : srcs) type_of(n);
  for (const auto& n : dsts) type_of(n);
  for (const auto& s : srcs) {
    for (const auto& d : dsts) edges_.push_back(Edge{s, label, d});
  }
  return *this;
}

const std::string& FlowGraph::type_of(const std::string& instance) const {
  auto it = nodes_.find(instance);
  if (it == nodes_.end()) throw UnknownInstance("no block instance '" + instance + "'");
  return it->second;
}

std::vector<std::size_t> FlowGraph::out_edges(const std::string& instance) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].src == instance) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FlowGraph::in_edges(const std::string& instance) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].dst == instance) out.push_back(i);
  }
  return out;
}

std::vector<std::string> FlowGraph::sources() const {
  std::vector<std::string> out;
  for (const auto& n : order_) {
    if (in_edges(n).empty()) out.push_back(n);
  }
  return out;
}

bool FlowGraph::same_structure(const FlowGraph& o) const {
  if (nodes_ != o.nodes_) return false;
  auto a = edges_;
  auto b = o.edges_;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

std::vector<Violation> FlowGraph::validate() const {
  std::vector<Violation> out;
  if (order_.empty() || sources().empty()) {
    out.push_back({"no_source", "", "no source block: the flow needs at least one block without inputs"});
  }

  for (const auto& n : order_) {
    const auto* type = registry_->find(nodes_.at(n));
    if (!type) {
      out.push_back({"unknown_type", n, "block type '" + nodes_.at(n) + "' is not registered"});
      continue;
    }
    const auto& m = type->multiplicity;
    const auto ins = static_cast<int>(in_edges(n).size());
    const auto outs = out_edges(n);
    if (!m.in_ok(ins)) {
      out.push_back({"in_multiplicity", n,
                     n + " (" + type->name + ", " + m.describe() + ") has " + std::to_string(ins) + " inputs"});
    }
    if (!m.out_ok(static_cast<int>(outs.size()))) {
      out.push_back({"out_multiplicity", n,
                     n + " (" + type->name + ", " + m.describe() + ") has " + std::to_string(outs.size()) +
                         " outputs"});
    }
    if (type->labeled_outputs) {
      int t = 0, f = 0;
      for (auto e : outs) {
        if (edges_[e].label == "true") ++t;
        else if (edges_[e].label == "false") ++f;
      }
      if (t != 1 || f != 1 || outs.size() != 2) {
        out.push_back({"branch_labels", n, n + " needs exactly one 'true' and one 'false' outgoing edge"});
      }
    } else {
      for (auto e : outs) {
        if (edges_[e].label != kDefaultLabel) {
          out.push_back({"bad_label", n, n + " is not a BRANCH but has an edge labeled '" + edges_[e].label + "'"});
        }
      }
    }
  }

  // Loops must re-enter through a JOIN or leave through a BRANCH: dropping
  // those edges has to leave an acyclic graph.
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : edges_) {
    const auto* st = registry_->find(nodes_.at(e.src));
    const auto* dt = registry_->find(nodes_.at(e.dst));
    if ((st && st->labeled_outputs) || (dt && dt->name == block_names::kJoin)) continue;
    adj[e.src].push_back(e.dst);
  }
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::set<std::string> cyclic;
  std::function<void(const std::string&, std::vector<std::string>&)> dfs = [&](const std::string& n,
                                                                               std::vector<std::string>& stack) {
    state[n] = 1;
    stack.push_back(n);
    for (const auto& d : adj[n]) {
      if (state[d] == 1) {
        auto it = std::find(stack.begin(), stack.end(), d);
        cyclic.insert(it, stack.end());
      } else if (state[d] == 0) {
        dfs(d, stack);
      }
    }
    stack.pop_back();
    state[n] = 2;
  };
  for (const auto& n : order_) {
    std::vector<std::string> stack;
    if (state[n] == 0) dfs(n, stack);
  }
  for (const auto& n : order_) {
    if (cyclic.count(n)) {
      out.push_back({"illegal_cycle", n, n + " lies on a cycle that does not pass through a JOIN or BRANCH"});
    }
  }
  return out;
}

std::string describe(const Violation& v) {
  return v.kind + (v.instance.empty() ? "" : " [" + v.instance + "]") + ": " + v.message;
}

}  // namespace metaml
