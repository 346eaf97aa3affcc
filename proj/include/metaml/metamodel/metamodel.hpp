#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaml/metamodel/config.hpp"
#include "metaml/metamodel/records.hpp"

namespace metaml {

inline constexpr const char* kRootBranchTag = "b0";

struct CommitRequest {
  std::optional<std::string> parent;
  EdgeKind edge = EdgeKind::Variation;
  Stage stage = Stage::Neural;
  Json payload = Json::object();
  Metrics metrics;
  std::set<std::string> marks;
  std::string payload_ref;  // empty: `<model_id>` relative to the storage root
};

// The single message streamed between pipe blocks: configuration, an
// append-only log and a versioned model space. A value type; blocks work on
// their own copy and emit the result.
class MetaModel {
 public:
  MetaModel() = default;
  explicit MetaModel(ConfigStore cfg, std::string branch_tag = kRootBranchTag);

  const ConfigStore& cfg() const { return cfg_; }
  const std::vector<LogEntry>& log() const { return log_; }
  const ModelSpace& space() const { return space_; }
  std::int64_t id_counter() const { return id_counter_; }
  const std::string& branch_tag() const { return branch_tag_; }

  // Appends an entry, stamping seq, branch tag, actor, step and wall clock.
  const LogEntry& append_log(const Actor& actor, EventKind event, std::vector<std::string> inputs = {},
                             std::vector<std::string> outputs = {}, Json resolved_params = Json::object(),
                             std::string note = {});

  // Mints `m<counter>.<branch_tag>`, appends the record, moves the stage's
  // focus to it and logs a COMMIT. Throws LineageViolation.
  std::string commit_model(const Actor& actor, CommitRequest req);

  // Deep copy continuing on a new branch tag.
  MetaModel clone_for_branch(const std::string& new_tag) const;

  // Adds `tag` to a record's marks; logged once (re-marking is a no-op).
  void mark(const Actor& actor, const std::string& id, const std::string& tag);
  void set_focus(Stage stage, const std::string& id);

  // Config mutation; every change is logged as CONFIG_CHANGE.
  void set_config(const Actor& actor, const std::string& key, ConfigValue value);

  // Root-to-id path following parent pointers. Throws UnknownModel.
  std::vector<ModelRecord> lineage(const std::string& id) const;

  bool structurally_equal(const MetaModel& o, bool ignore_timestamps = false) const;

  Json to_json() const;  // all fields except digest / schema version
  static MetaModel from_json(const Json& j);

 private:
  friend MetaModel merge(std::span<const MetaModel> inputs, std::size_t adopted, const Actor& actor);

  ConfigStore cfg_;
  std::vector<LogEntry> log_;
  ModelSpace space_;
  std::int64_t id_counter_ = 0;
  std::string branch_tag_ = kRootBranchTag;
  std::int64_t next_seq_ = 1;
};

// Union of records (deduplicated by id, marks unioned), logs ordered by
// (logical_step, branch_tag, seq) with the shared prefix deduplicated, cfg
// and focus from inputs[adopted]. Logs a MERGE entry listing diverging
// config keys. Throws UnrelatedMetaModels.
MetaModel merge(std::span<const MetaModel> inputs, std::size_t adopted, const Actor& actor);

// Parent tag of a fork-derived tag: "b1" -> "b0", "b1.2" -> "b1". Root has none.
std::optional<std::string> parent_branch_tag(const std::string& tag);
std::string child_branch_tag(const std::string& parent, std::size_t index_one_based);

}  // namespace metaml
