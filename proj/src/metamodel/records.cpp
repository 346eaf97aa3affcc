#include "metaml/metamodel/records.hpp"

#include <array>
#include <chrono>
#include <utility>

#include "metaml/errors.hpp"

namespace metaml {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 3> kStageNames{{
    {Stage::Neural, "NEURAL"}, {Stage::Kernel, "KERNEL"}, {Stage::Rtl, "RTL"}}};
constexpr std::array<std::pair<EdgeKind, std::string_view>, 3> kEdgeNames{{
    {EdgeKind::Root, "ROOT"}, {EdgeKind::Variation, "VARIATION"}, {EdgeKind::Specialization, "SPECIALIZATION"}}};
constexpr std::array<std::pair<EventKind, std::string_view>, 7> kEventNames{{
    {EventKind::BlockStart, "BLOCK_START"},
    {EventKind::Commit, "COMMIT"},
    {EventKind::ControlDecision, "CONTROL_DECISION"},
    {EventKind::ConfigChange, "CONFIG_CHANGE"},
    {EventKind::BlockEnd, "BLOCK_END"},
    {EventKind::Checkpoint, "CHECKPOINT"},
    {EventKind::Merge, "MERGE"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [k, v] : table) {
    if (k == e) return v;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s,
             const char* what) {
  for (const auto& [k, v] : table) {
    if (v == s) return k;
  }
  throw InvalidValue(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Stage s) { return name_of(kStageNames, s); }
std::string_view to_string(EdgeKind e) { return name_of(kEdgeNames, e); }
std::string_view to_string(EventKind e) { return name_of(kEventNames, e); }
Stage stage_from_string(std::string_view s) { return parse_enum(kStageNames, s, "stage"); }
EdgeKind edge_from_string(std::string_view s) { return parse_enum(kEdgeNames, s, "edge kind"); }
EventKind event_from_string(std::string_view s) { return parse_enum(kEventNames, s, "event"); }

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// -- LogEntry ---------------------------------------------------------------

Json LogEntry::to_json() const {
  return Json{{"seq", seq},
              {"logical_step", logical_step},
              {"branch_tag", branch_tag},
              {"timestamp", timestamp_ns},
              {"actor", Json{{"instance", actor_instance}, {"type", actor_type}}},
              {"event", std::string(to_string(event))},
              {"input_models", input_models},
              {"output_models", output_models},
              {"resolved_params", resolved_params},
              {"note", note}};
}

LogEntry LogEntry::from_json(const Json& j) {
  LogEntry e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.logical_step = j.at("logical_step").get<std::int64_t>();
  e.branch_tag = j.at("branch_tag").get<std::string>();
  e.timestamp_ns = j.at("timestamp").get<std::int64_t>();
  e.actor_instance = j.at("actor").at("instance").get<std::string>();
  e.actor_type = j.at("actor").at("type").get<std::string>();
  e.event = event_from_string(j.at("event").get<std::string>());
  e.input_models = j.at("input_models").get<std::vector<std::string>>();
  e.output_models = j.at("output_models").get<std::vector<std::string>>();
  e.resolved_params = j.at("resolved_params");
  e.note = j.at("note").get<std::string>();
  return e;
}

bool LogEntry::equals(const LogEntry& o, bool ignore_timestamps) const {
  return seq == o.seq && logical_step == o.logical_step && branch_tag == o.branch_tag &&
         (ignore_timestamps || timestamp_ns == o.timestamp_ns) && actor_instance == o.actor_instance &&
         actor_type == o.actor_type && event == o.event && input_models == o.input_models &&
         output_models == o.output_models && resolved_params == o.resolved_params && note == o.note;
}

// -- ModelRecord --------------------------------------------------------------

const double* ModelRecord::metric(const std::string& name) const {
  auto it = metrics.find(name);
  return it == metrics.end() ? nullptr : &it->second;
}

Json ModelRecord::to_json() const {
  Json j{{"id", id},
         {"parent", parent ? Json(*parent) : Json(nullptr)},
         {"edge", std::string(to_string(edge))},
         {"stage", std::string(to_string(stage))},
         {"producer", producer},
         {"payload_ref", payload_ref},
         {"payload", payload},
         {"metrics", Json::object()},
         {"marks", Json::array()}};
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  for (const auto& m : marks) j["marks"].push_back(m);
  return j;
}

ModelRecord ModelRecord::from_json(const Json& j) {
  ModelRecord r;
  r.id = j.at("id").get<std::string>();
  if (!j.at("parent").is_null()) r.parent = j.at("parent").get<std::string>();
  r.edge = edge_from_string(j.at("edge").get<std::string>());
  r.stage = stage_from_string(j.at("stage").get<std::string>());
  r.producer = j.at("producer").get<std::string>();
  r.payload_ref = j.at("payload_ref").get<std::string>();
  r.payload = j.at("payload");
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
  for (const auto& m : j.at("marks")) r.marks.insert(m.get<std::string>());
  return r;
}

// -- ModelSpace ---------------------------------------------------------------

const ModelRecord* ModelSpace::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ModelRecord& ModelSpace::at(const std::string& id) const {
  if (const auto* r = find(id)) return *r;
  throw UnknownModel("no model '" + id + "' in the model space");
}

std::optional<std::string> ModelSpace::focus(Stage s) const {
  auto it = focus_.find(s);
  if (it == focus_.end()) return std::nullopt;
  return it->second;
}

const ModelRecord* ModelSpace::deepest_focus() const {
  for (auto s : {Stage::Rtl, Stage::Kernel, Stage::Neural}) {
    if (auto id = focus(s)) return find(*id);
  }
  return nullptr;
}

void ModelSpace::check_lineage(const ModelRecord& r) const {
  if (r.id.empty()) throw LineageViolation("empty model id");
  if (contains(r.id)) throw LineageViolation("model id '" + r.id + "' already committed");
  if (r.edge == EdgeKind::Root) {
    if (r.parent) throw LineageViolation("ROOT model '" + r.id + "' must not have a parent");
    return;
  }
  if (!r.parent) throw LineageViolation(std::string(to_string(r.edge)) + " requires a parent");
  const auto* p = find(*r.parent);
  if (!p) throw LineageViolation("parent '" + *r.parent + "' does not exist");
  if (r.edge == EdgeKind::Variation && p->stage != r.stage) {
    throw LineageViolation("VARIATION must keep the parent's stage (" + std::string(to_string(p->stage)) +
                           " -> " + std::string(to_string(r.stage)) + ")");
  }
  if (r.edge == EdgeKind::Specialization && !(static_cast<int>(p->stage) < static_cast<int>(r.stage))) {
    throw LineageViolation("SPECIALIZATION must lower the stage (" + std::string(to_string(p->stage)) +
                           " -> " + std::string(to_string(r.stage)) + ")");
  }
}

void ModelSpace::append(ModelRecord r) {
  check_lineage(r);
  index_[r.id] = records_.size();
  records_.push_back(std::move(r));
}

void ModelSpace::set_focus(Stage s, const std::string& id) {
  const auto& r = at(id);
  if (r.stage != s) throw LineageViolation("focus for " + std::string(to_string(s)) + " cannot point at " + id);
  focus_[s] = id;
}

void ModelSpace::add_mark(const std::string& id, const std::string& tag) {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownModel("no model '" + id + "' in the model space");
  records_[it->second].marks.insert(tag);
}

void ModelSpace::absorb(const ModelRecord& r) {
  auto it = index_.find(r.id);
  if (it == index_.end()) {
    index_[r.id] = records_.size();
    records_.push_back(r);
    return;
  }
  records_[it->second].marks.insert(r.marks.begin(), r.marks.end());
}

Json ModelSpace::to_json() const {
  Json j{{"records", Json::array()}, {"focus", Json::object()}};
  for (const auto& r : records_) j["records"].push_back(r.to_json());
  for (const auto& [s, id] : focus_) j["focus"][std::string(to_string(s))] = id;
  return j;
}

ModelSpace ModelSpace::from_json(const Json& j) {
  ModelSpace space;
  for (const auto& rj : j.at("records")) space.append(ModelRecord::from_json(rj));
  for (const auto& [s, id] : j.at("focus").items()) space.set_focus(stage_from_string(s), id.get<std::string>());
  return space;
}

}  // namespace metaml
