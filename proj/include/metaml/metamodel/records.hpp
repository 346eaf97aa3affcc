#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metaml/metamodel/config.hpp"

namespace metaml {

// Abstraction levels, ordered by lowering.
enum class Stage { Neural = 0, Kernel = 1, Rtl = 2 };
enum class EdgeKind { Root, Variation, Specialization };
enum class EventKind { BlockStart, Commit, ControlDecision, ConfigChange, BlockEnd, Checkpoint, Merge };

std::string_view to_string(Stage s);
std::string_view to_string(EdgeKind e);
std::string_view to_string(EventKind e);
Stage stage_from_string(std::string_view s);
EdgeKind edge_from_string(std::string_view s);
EventKind event_from_string(std::string_view s);

inline constexpr Stage kAllStages[] = {Stage::Neural, Stage::Kernel, Stage::Rtl};

using Metrics = std::map<std::string, double>;

// Marks used across blocks.
namespace marks {
inline constexpr const char* kCandidate = "candidate";
inline constexpr const char* kOptimal = "optimal";
inline constexpr const char* kSelected = "selected";
inline constexpr const char* kPareto = "pareto";
}  // namespace marks

// Who is acting on a meta-model: the block instance, its type, and the
// logical step of the job executing it.
struct Actor {
  std::string instance;
  std::string type;
  std::int64_t logical_step = 0;
};

struct LogEntry {
  std::int64_t seq = 0;
  std::int64_t logical_step = 0;
  std::string branch_tag;
  std::int64_t timestamp_ns = 0;
  std::string actor_instance;
  std::string actor_type;
  EventKind event = EventKind::BlockStart;
  std::vector<std::string> input_models;
  std::vector<std::string> output_models;
  Json resolved_params = Json::object();
  std::string note;

  Json to_json() const;
  static LogEntry from_json(const Json& j);

  bool same_identity(const LogEntry& o) const { return seq == o.seq && branch_tag == o.branch_tag; }
  bool equals(const LogEntry& o, bool ignore_timestamps) const;
  friend bool operator==(const LogEntry& a, const LogEntry& b) { return a.equals(b, false); }
};

struct ModelRecord {
  std::string id;
  std::optional<std::string> parent;
  EdgeKind edge = EdgeKind::Root;
  Stage stage = Stage::Neural;
  std::string producer;
  std::string payload_ref;
  Json payload = Json::object();
  Metrics metrics;
  std::set<std::string> marks;

  bool has_mark(const std::string& m) const { return marks.count(m) > 0; }
  const double* metric(const std::string& name) const;

  Json to_json() const;
  static ModelRecord from_json(const Json& j);
  friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

// Append-only repository of committed models plus one focus pointer per stage.
class ModelSpace {
 public:
  const ModelRecord* find(const std::string& id) const;
  const ModelRecord& at(const std::string& id) const;  // UnknownModel
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  std::size_t size() const { return records_.size(); }
  const std::vector<ModelRecord>& records() const { return records_; }

  std::optional<std::string> focus(Stage s) const;
  const std::map<Stage, std::string>& focus_map() const { return focus_; }
  // Focus of the most lowered stage that has one.
  const ModelRecord* deepest_focus() const;

  // Checks ModelRecord invariants against existing records; throws
  // LineageViolation.
  void check_lineage(const ModelRecord& r) const;
  void append(ModelRecord r);
  void set_focus(Stage s, const std::string& id);
  void add_mark(const std::string& id, const std::string& tag);
  // Union-merges a record seen elsewhere (marks are unioned).
  void absorb(const ModelRecord& r);

  Json to_json() const;
  static ModelSpace from_json(const Json& j);
  friend bool operator==(const ModelSpace& a, const ModelSpace& b) {
    return a.records_ == b.records_ && a.focus_ == b.focus_;
  }

 private:
  std::vector<ModelRecord> records_;
  std::map<std::string, std::size_t> index_;
  std::map<Stage, std::string> focus_;
};

std::int64_t now_ns();

}  // namespace metaml
