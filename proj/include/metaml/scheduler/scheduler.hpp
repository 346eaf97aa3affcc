#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metaml/errors.hpp"
#include "metaml/flowgraph/graph.hpp"
#include "metaml/kblocks/control.hpp"
#include "metaml/surrogate/backend.hpp"

namespace metaml {

// A block failure during a run. Carries the failing instance, the kind of
// the underlying error and the meta-model the block was working on.
class BlockError : public Error {
 public:
  BlockError(std::string instance, std::string cause, const std::string& message, std::optional<MetaModel> mm)
      : Error("BlockError", instance + ": " + message),
        instance_(std::move(instance)),
        cause_(std::move(cause)),
        mm_(std::move(mm)) {}

  const std::string& instance() const noexcept { return instance_; }
  const std::string& cause() const noexcept { return cause_; }
  const std::optional<MetaModel>& mm() const noexcept { return mm_; }

 private:
  std::string instance_;
  std::string cause_;
  std::optional<MetaModel> mm_;
};

struct Job {
  std::string target;
  std::vector<MetaModel> inputs;  // one, or one per in-edge for a barrier
  std::int64_t logical_step = 0;
};

struct RunOptions {
  int workers = 1;
  std::int64_t job_budget = 10000;
  std::filesystem::path storage_root;  // empty: payloads stay inline only
  std::uint64_t seed = 0;

  const surrogate::Backend* backend = nullptr;  // reference backend when null
  const ControlRegistry* controls = nullptr;    // built-ins when null

  // New log entries of each finished job, called serially.
  std::function<void(const std::vector<LogEntry>&)> log_sink;
  // Emissions of these instances are handed to `on_checkpoint` after a
  // CHECKPOINT entry is logged on them.
  std::set<std::string> checkpoint_after;
  std::function<void(const std::string& instance, const MetaModel&)> on_checkpoint;

  void validate() const;  // InvalidValue
};

struct FinalModel {
  std::string stop_instance;
  std::int64_t logical_step = 0;
  MetaModel mm;
  Json value;  // STOP callback result
};

struct RunStats {
  std::int64_t jobs_executed = 0;
  std::int64_t wall_ns = 0;
  std::map<std::string, std::int64_t> per_block;
};

struct RunResult {
  std::vector<FinalModel> finals;  // ordered by (logical_step, branch_tag, stop instance)
  RunStats stats;
  std::uint64_t seed = 0;

  // Wall time is left out unless asked for, so reruns compare byte-equal.
  Json to_json(bool include_timing = false) const;
};

// Executes a graph from its source blocks with an initial meta-model built
// from `cfg`. Throws ValidationFailed, FlowDiverged, NoStopReached,
// BlockError.
RunResult run(const FlowGraph& graph, const ConfigStore& cfg, const RunOptions& opts);

// Delivers `mm` straight to `at_instance` and continues as `run` does.
// Throws UnknownInstance plus everything `run` throws.
RunResult resume(const FlowGraph& graph, const MetaModel& mm, const std::string& at_instance, const RunOptions& opts);

// METAML_STORAGE_ROOT, when set, wins over the option.
std::filesystem::path effective_storage_root(const RunOptions& opts);

}  // namespace metaml
