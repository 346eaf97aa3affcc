#include "metaml/kblocks/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "metaml/errors.hpp"

namespace metaml {

namespace {

const char* const kUtilMetrics[] = {"dsp_util", "lut_util", "ff_util", "bram_util"};

double number_param(const Json& params, const char* key, double fallback) {
  if (!params.contains(key) || params[key].is_null()) return fallback;
  if (!params[key].is_number()) throw InvalidValue(std::string("control parameter '") + key + "' must be a number");
  return params[key].get<double>();
}

template <typename Map>
const typename Map::mapped_type& lookup(const Map& m, const std::string& name, const char* what) {
  auto it = m.find(name);
  if (it == m.end()) throw UnknownControl(std::string("unknown ") + what + " '" + name + "'");
  return it->second;
}

}  // namespace

ControlRegistry ControlRegistry::with_builtins() {
  ControlRegistry r;
  r.add_predicate("always", [](const MetaModel&, const Json&) { return true; });
  r.add_predicate("never", [](const MetaModel&, const Json&) { return false; });
  r.add_predicate("overmapped", [](const MetaModel& mm, const Json& p) {
    return kblocks::overmapped(mm, number_param(p, "threshold", 1.0));
  });
  r.add_predicate("metric_below", [](const MetaModel& mm, const Json& p) {
    if (!p.contains("metric") || !p["metric"].is_string()) throw PredicateError("metric_below needs a 'metric' name");
    const auto name = p["metric"].get<std::string>();
    const auto* focus = mm.space().deepest_focus();
    if (!focus) throw PredicateError("metric_below: no focus model");
    const double* v = focus->metric(name);
    if (!v) throw PredicateError("metric_below: focus model " + focus->id + " has no metric '" + name + "'");
    return *v < number_param(p, "bound", 0.0);
  });

  r.add_action("raise_tolerance", [](MetaModel& mm, const Actor& actor, const Json& p) {
    if (!p.contains("key")) throw ActionError("raise_tolerance needs a 'key'");
    std::vector<std::string> keys;
    if (p["key"].is_string()) keys.push_back(p["key"].get<std::string>());
    else if (p["key"].is_array()) keys = p["key"].get<std::vector<std::string>>();
    else throw ActionError("raise_tolerance: 'key' must be a text or a list of texts");
    const double delta = number_param(p, "delta", 0.01);
    const double max = number_param(p, "max", 1.0);
    for (const auto& key : keys) {
      const auto* cur = mm.cfg().find(key);
      if (!cur || !cur->is_number()) throw ActionError("raise_tolerance: config '" + key + "' is not a number");
      double next = cur->get<double>() + delta;
      // Saturate, absorbing the rounding of the sum itself.
      if (next >= max - 1e-12) next = max;
      mm.set_config(actor, key, next);
    }
  });

  r.add_callback("focus_id", [](const MetaModel& mm) -> Json {
    const auto* f = mm.space().deepest_focus();
    return f ? Json(f->id) : Json(nullptr);
  });
  r.add_callback("focus_metrics", [](const MetaModel& mm) -> Json {
    Json out = Json::object();
    if (const auto* f = mm.space().deepest_focus()) {
      for (const auto& [k, v] : f->metrics) out[k] = v;
    }
    return out;
  });
  return r;
}

void ControlRegistry::add_predicate(const std::string& name, Predicate p) { predicates_[name] = std::move(p); }
void ControlRegistry::add_action(const std::string& name, Action a) { actions_[name] = std::move(a); }
void ControlRegistry::add_callback(const std::string& name, StopCallback c) { callbacks_[name] = std::move(c); }

const Predicate& ControlRegistry::predicate(const std::string& name) const {
  return lookup(predicates_, name, "predicate");
}
const Action& ControlRegistry::action(const std::string& name) const { return lookup(actions_, name, "action"); }
const StopCallback& ControlRegistry::callback(const std::string& name) const {
  return lookup(callbacks_, name, "callback");
}

namespace kblocks {

namespace {

// Inputs forked from one meta-model continue on the fork's own tag once
// reduced, so enclosing fork/reduce pairs still line up.
MetaModel retag_to_common_parent(MetaModel out, const std::vector<MetaModel>& inputs) {
  std::optional<std::string> common;
  for (const auto& mm : inputs) {
    auto p = parent_branch_tag(mm.branch_tag());
    if (!p || (common && *common != *p)) return out;
    common = p;
  }
  return common ? out.clone_for_branch(*common) : out;
}

}  // namespace

std::vector<MetaModel> fork(MetaModel mm, std::size_t n, const Actor& actor) {
  if (n < 2) throw InvalidValue("fork needs at least two outgoing streams");
  std::vector<std::string> tags;
  for (std::size_t i = 1; i <= n; ++i) tags.push_back(child_branch_tag(mm.branch_tag(), i));
  mm.append_log(actor, EventKind::ControlDecision, {}, {}, Json{{"fork", tags}},
                "fork into " + std::to_string(n));
  std::vector<MetaModel> out;
  out.reserve(n);
  for (const auto& t : tags) out.push_back(mm.clone_for_branch(t));
  return out;
}

MetaModel join(MetaModel mm, const Actor& actor) {
  mm.append_log(actor, EventKind::ControlDecision, {}, {}, Json::object(), "join pass-through");
  return mm;
}

BranchOutcome branch(MetaModel mm, const Predicate& predicate, const Json& predicate_params, const Action* action,
                     const Json& action_params, const Actor& actor) {
  bool value = false;
  try {
    value = predicate(mm, predicate_params);
  } catch (const PredicateError&) {
    throw;
  } catch (const std::exception& e) {
    throw PredicateError(actor.instance + ": " + e.what());
  }
  const auto* focus = mm.space().deepest_focus();
  std::vector<std::string> inputs;
  if (focus) inputs.push_back(focus->id);
  mm.append_log(actor, EventKind::ControlDecision, std::move(inputs), {}, Json{{"predicate", value}},
                value ? "branch true" : "branch false");
  if (value && action) (*action)(mm, actor, action_params);
  return {value, std::move(mm)};
}

const ModelRecord* reduce_candidate(const MetaModel& mm) { return mm.space().deepest_focus(); }

bool better_candidate(const ModelRecord& a, const ModelRecord& b, const Objective& objective) {
  auto get = [](const ModelRecord& r, const std::string& m) {
    const double* v = r.metric(m);
    if (!v) throw MissingMetric("model '" + r.id + "' has no metric '" + m + "'");
    return *v;
  };
  const double va = get(a, objective.metric);
  const double vb = get(b, objective.metric);
  if (va != vb) return objective.direction == Direction::Max ? va > vb : va < vb;
  const double* aa = a.metric("accuracy");
  const double* ab = b.metric("accuracy");
  if (aa && ab && *aa != *ab) return *aa > *ab;
  const double* da = a.metric("dsp");
  const double* db = b.metric("dsp");
  if (da && db && *da != *db) return *da < *db;
  return a.id < b.id;
}

MetaModel reduce(const std::vector<MetaModel>& inputs, std::size_t expected_inputs, const ReduceSpec& spec,
                 const Actor& actor) {
  if (inputs.size() != expected_inputs || inputs.empty()) {
    throw MissingBranch(actor.instance + ": expected " + std::to_string(expected_inputs) + " branches, got " +
                        std::to_string(inputs.size()));
  }
  if (spec.objectives.empty()) throw InvalidValue(actor.instance + ": reduce needs an objective");

  if (spec.mode == ReduceMode::SelectBest) {
    std::size_t winner = 0;
    const ModelRecord* best = nullptr;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto* c = reduce_candidate(inputs[i]);
      if (!c) throw MissingMetric(actor.instance + ": branch " + inputs[i].branch_tag() + " has no focus model");
      if (!best || better_candidate(*c, *best, spec.objectives.front())) {
        best = c;
        winner = i;
      }
    }
    const auto winner_id = best->id;
    const auto winner_stage = best->stage;
    MetaModel out = retag_to_common_parent(merge(inputs, winner, actor), inputs);
    out.append_log(actor, EventKind::ControlDecision, {}, {winner_id},
                   Json{{"mode", "select_best"}, {"objective", to_string(spec.objectives.front())}},
                   "select " + winner_id);
    out.mark(actor, winner_id, marks::kSelected);
    out.set_focus(winner_stage, winner_id);
    return out;
  }

  // Pareto: candidates over the union of all inputs.
  std::vector<ModelRecord> candidates;
  std::vector<std::size_t> owner;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (const auto& r : inputs[i].space().records()) {
      if (!(r.has_mark(marks::kCandidate) || r.has_mark(marks::kOptimal))) continue;
      if (!seen.insert(r.id).second) continue;
      candidates.push_back(r);
      owner.push_back(i);
    }
  }
  if (candidates.empty()) throw MissingMetric(actor.instance + ": no candidate records to reduce");
  const auto front = pareto_front(candidates, spec.objectives);
  const Objective by_accuracy{"accuracy", Direction::Max};
  const ModelRecord* rep = &front.front();
  for (const auto& r : front) {
    if (better_candidate(r, *rep, by_accuracy)) rep = &r;
  }
  std::size_t adopted = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].id == rep->id) adopted = owner[i];
  }
  MetaModel out = retag_to_common_parent(merge(inputs, adopted, actor), inputs);
  std::vector<std::string> front_ids;
  for (const auto& r : front) front_ids.push_back(r.id);
  Json detail{{"mode", "pareto"}, {"objectives", Json::array()}, {"front", front_ids}};
  for (const auto& o : spec.objectives) detail["objectives"].push_back(to_string(o));
  out.append_log(actor, EventKind::ControlDecision, {}, front_ids, std::move(detail),
                 "pareto front of " + std::to_string(candidates.size()) + " candidates");
  for (const auto& id : front_ids) out.mark(actor, id, marks::kPareto);
  out.set_focus(rep->stage, rep->id);
  return out;
}

Json stop(const MetaModel& mm, const StopCallback& callback) {
  try {
    return callback(mm);
  } catch (const std::exception& e) {
    throw CallbackError(e.what());
  }
}

bool overmapped(const MetaModel& mm, double threshold) {
  const auto* focus = mm.space().deepest_focus();
  if (!focus) throw PredicateError("overmapped: no focus model");
  bool any_metric = false;
  bool over = false;
  for (const char* m : kUtilMetrics) {
    if (const double* v = focus->metric(m)) {
      any_metric = true;
      over = over || *v > threshold;
    }
  }
  if (!any_metric) throw PredicateError("overmapped: focus model " + focus->id + " has no utilization metrics");
  return over;
}

}  // namespace kblocks
}  // namespace metaml
