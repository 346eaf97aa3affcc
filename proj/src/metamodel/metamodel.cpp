#include "metaml/metamodel/metamodel.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "metaml/errors.hpp"

namespace metaml {

MetaModel::MetaModel(ConfigStore cfg, std::string branch_tag)
    : cfg_(std::move(cfg)), branch_tag_(std::move(branch_tag)) {
  if (branch_tag_.empty()) throw InvalidValue("branch tag must be non-empty");
}

const LogEntry& MetaModel::append_log(const Actor& actor, EventKind event, std::vector<std::string> inputs,
                                      std::vector<std::string> outputs, Json resolved_params,
                                      std::string note) {
  LogEntry e;
  e.seq = next_seq_++;
  e.logical_step = actor.logical_step;
  e.branch_tag = branch_tag_;
  e.timestamp_ns = now_ns();
  e.actor_instance = actor.instance;
  e.actor_type = actor.type;
  e.event = event;
  e.input_models = std::move(inputs);
  e.output_models = std::move(outputs);
  e.resolved_params = std::move(resolved_params);
  e.note = std::move(note);
  log_.push_back(std::move(e));
  return log_.back();
}

std::string MetaModel::commit_model(const Actor& actor, CommitRequest req) {
  ModelRecord r;
  r.id = "m" + std::to_string(id_counter_ + 1) + "." + branch_tag_;
  r.parent = std::move(req.parent);
  r.edge = req.edge;
  r.stage = req.stage;
  r.producer = actor.instance;
  r.payload_ref = req.payload_ref.empty() ? r.id : std::move(req.payload_ref);
  r.payload = std::move(req.payload);
  r.metrics = std::move(req.metrics);
  r.marks = std::move(req.marks);
  space_.check_lineage(r);

  ++id_counter_;
  const auto id = r.id;
  const auto stage = r.stage;
  std::vector<std::string> inputs;
  if (r.parent) inputs.push_back(*r.parent);
  space_.append(std::move(r));
  space_.set_focus(stage, id);
  append_log(actor, EventKind::Commit, std::move(inputs), {id});
  return id;
}

MetaModel MetaModel::clone_for_branch(const std::string& new_tag) const {
  if (new_tag.empty()) throw InvalidValue("branch tag must be non-empty");
  MetaModel copy = *this;
  copy.branch_tag_ = new_tag;
  return copy;
}

void MetaModel::mark(const Actor& actor, const std::string& id, const std::string& tag) {
  const auto& r = space_.at(id);
  if (r.has_mark(tag)) return;
  space_.add_mark(id, tag);
  append_log(actor, EventKind::ControlDecision, {}, {id}, Json::object(), "mark " + tag);
}

void MetaModel::set_focus(Stage stage, const std::string& id) { space_.set_focus(stage, id); }

void MetaModel::set_config(const Actor& actor, const std::string& key, ConfigValue value) {
  const auto* old = cfg_.find(key);
  Json change{{"key", key}, {"old", old ? *old : Json(nullptr)}, {"new", value}};
  cfg_.set(key, std::move(value));
  append_log(actor, EventKind::ConfigChange, {}, {}, std::move(change), "config " + key);
}

std::vector<ModelRecord> MetaModel::lineage(const std::string& id) const {
  std::vector<ModelRecord> chain;
  const ModelRecord* r = &space_.at(id);
  while (true) {
    chain.push_back(*r);
    if (!r->parent) break;
    r = &space_.at(*r->parent);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

bool MetaModel::structurally_equal(const MetaModel& o, bool ignore_timestamps) const {
  if (!(cfg_ == o.cfg_ && space_ == o.space_ && id_counter_ == o.id_counter_ && branch_tag_ == o.branch_tag_ &&
        log_.size() == o.log_.size())) {
    return false;
  }
  for (std::size_t i = 0; i < log_.size(); ++i) {
    if (!log_[i].equals(o.log_[i], ignore_timestamps)) return false;
  }
  return true;
}

Json MetaModel::to_json() const {
  Json j{{"cfg", cfg_.to_json()},
         {"log", Json::array()},
         {"space", space_.to_json()},
         {"id_counter", id_counter_},
         {"branch_tag", branch_tag_}};
  for (const auto& e : log_) j["log"].push_back(e.to_json());
  return j;
}

MetaModel MetaModel::from_json(const Json& j) {
  MetaModel mm(ConfigStore::from_json(j.at("cfg")), j.at("branch_tag").get<std::string>());
  for (const auto& ej : j.at("log")) {
    mm.log_.push_back(LogEntry::from_json(ej));
    mm.next_seq_ = std::max(mm.next_seq_, mm.log_.back().seq + 1);
  }
  mm.space_ = ModelSpace::from_json(j.at("space"));
  mm.id_counter_ = j.at("id_counter").get<std::int64_t>();
  if (mm.id_counter_ < 0) throw InvalidValue("negative id_counter");
  return mm;
}

std::optional<std::string> parent_branch_tag(const std::string& tag) {
  if (tag == kRootBranchTag) return std::nullopt;
  auto dot = tag.rfind('.');
  if (dot != std::string::npos) return tag.substr(0, dot);
  return std::string(kRootBranchTag);
}

std::string child_branch_tag(const std::string& parent, std::size_t index_one_based) {
  if (parent == kRootBranchTag) return "b" + std::to_string(index_one_based);
  return parent + "." + std::to_string(index_one_based);
}

MetaModel merge(std::span<const MetaModel> inputs, std::size_t adopted, const Actor& actor) {
  if (inputs.empty()) throw InvalidValue("merge needs at least one meta-model");
  if (adopted >= inputs.size()) throw InvalidValue("adopted index out of range");

  const LogEntry* root = nullptr;
  for (const auto& mm : inputs) {
    if (mm.log_.empty()) continue;
    if (!root) {
      root = &mm.log_.front();
    } else if (!root->equals(mm.log_.front(), false)) {
      throw UnrelatedMetaModels("meta-models do not share a common run root");
    }
  }

  const MetaModel& base = inputs[adopted];
  MetaModel out(base.cfg_, base.branch_tag_);

  // Records: shared prefix appears once, marks unioned.
  for (const auto& mm : inputs) {
    for (const auto& r : mm.space_.records()) out.space_.absorb(r);
  }
  for (const auto& [stage, id] : base.space_.focus_map()) out.space_.set_focus(stage, id);

  // Logs: dedupe by (branch_tag, seq), then canonical ordering.
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const auto& mm : inputs) {
    for (const auto& e : mm.log_) {
      if (seen.emplace(e.branch_tag, e.seq).second) out.log_.push_back(e);
    }
    out.id_counter_ = std::max(out.id_counter_, mm.id_counter_);
  }
  std::stable_sort(out.log_.begin(), out.log_.end(), [](const LogEntry& a, const LogEntry& b) {
    return std::tie(a.logical_step, a.branch_tag, a.seq) < std::tie(b.logical_step, b.branch_tag, b.seq);
  });
  for (const auto& e : out.log_) out.next_seq_ = std::max(out.next_seq_, e.seq + 1);

  // Config divergence relative to the adopted input.
  std::set<std::string> diverging;
  for (const auto& mm : inputs) {
    for (const auto& [k, v] : mm.cfg_.entries()) {
      const auto* mine = base.cfg_.find(k);
      if (!mine || *mine != v) diverging.insert(k);
    }
    for (const auto& [k, v] : base.cfg_.entries()) {
      if (!mm.cfg_.contains(k)) diverging.insert(k);
    }
  }
  std::vector<std::string> merged_ids;
  for (const auto& mm : inputs) {
    if (auto f = mm.space_.deepest_focus()) merged_ids.push_back(f->id);
  }
  Json detail{{"adopted", adopted}, {"diverging_keys", Json(std::vector<std::string>(diverging.begin(), diverging.end()))}};
  out.append_log(actor, EventKind::Merge, std::move(merged_ids), {}, std::move(detail),
                 "merge of " + std::to_string(inputs.size()) + " meta-models");
  return out;
}

}  // namespace metaml
