#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "metaml/kblocks/pareto.hpp"
#include "metaml/metamodel/metamodel.hpp"

namespace metaml {

// Pure predicate over a meta-model; params come from the BRANCH block's
// resolved parameters.
using Predicate = std::function<bool(const MetaModel&, const Json& params)>;
// Touches only the ConfigStore, through MetaModel::set_config.
using Action = std::function<void(MetaModel&, const Actor&, const Json& params)>;
using StopCallback = std::function<Json(const MetaModel&)>;

// Predicates, actions and STOP callbacks addressable by name from flows.
class ControlRegistry {
 public:
  // overmapped, metric_below, always, never / raise_tolerance / focus_id, focus_metrics
  static ControlRegistry with_builtins();

  void add_predicate(const std::string& name, Predicate p);
  void add_action(const std::string& name, Action a);
  void add_callback(const std::string& name, StopCallback c);

  const Predicate& predicate(const std::string& name) const;  // UnknownControl
  const Action& action(const std::string& name) const;
  const StopCallback& callback(const std::string& name) const;

 private:
  std::map<std::string, Predicate> predicates_;
  std::map<std::string, Action> actions_;
  std::map<std::string, StopCallback> callbacks_;
};

namespace kblocks {

// Clones tagged child_branch_tag(tag, 1..n); logs the fork decision first.
std::vector<MetaModel> fork(MetaModel mm, std::size_t n, const Actor& actor);

// Identity forwarding, passage logged.
MetaModel join(MetaModel mm, const Actor& actor);

struct BranchOutcome {
  bool taken = false;  // true -> "true" edge
  MetaModel mm;
};

// Evaluates the predicate; on true applies the action (if any). Logs one
// CONTROL_DECISION. Throws PredicateError.
BranchOutcome branch(MetaModel mm, const Predicate& predicate, const Json& predicate_params,
                     const Action* action, const Json& action_params, const Actor& actor);

enum class ReduceMode { SelectBest, Pareto };

struct ReduceSpec {
  ReduceMode mode = ReduceMode::SelectBest;
  std::vector<Objective> objectives{{"accuracy", Direction::Max}};
};

// SELECT_BEST: best focus candidate across inputs; PARETO: front over all
// candidate/optimal records of the merged space. Throws MissingBranch,
// MissingMetric.
MetaModel reduce(const std::vector<MetaModel>& inputs, std::size_t expected_inputs, const ReduceSpec& spec,
                 const Actor& actor);

// The candidate a SELECT_BEST reduce considers for one input: the focus
// record of the most lowered stage.
const ModelRecord* reduce_candidate(const MetaModel& mm);

// Tie-break order for SELECT_BEST: objective, then higher accuracy, lower
// dsp, lexicographic id. True when `a` beats `b`.
bool better_candidate(const ModelRecord& a, const ModelRecord& b, const Objective& objective);

// Invokes the callback; wraps failures in CallbackError.
Json stop(const MetaModel& mm, const StopCallback& callback);

// Utilization metrics of the deepest focus record exceed `threshold`.
bool overmapped(const MetaModel& mm, double threshold);

}  // namespace kblocks
}  // namespace metaml
