#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "metaml/flowgraph/graph.hpp"
#include "metaml/kblocks/control.hpp"
#include "metaml/metamodel/metamodel.hpp"
#include "metaml/surrogate/backend.hpp"
#include "metaml/surrogate/blocks.hpp"

namespace testing {

using namespace metaml;
namespace fs = std::filesystem;

inline const BlockRegistry& registry() {
  static const BlockRegistry r = BlockRegistry::with_builtins();
  return r;
}

inline const ControlRegistry& controls() {
  static const ControlRegistry c = ControlRegistry::with_builtins();
  return c;
}

inline const surrogate::ReferenceBackend& backend() {
  static const surrogate::ReferenceBackend b;
  return b;
}

inline Actor actor(const std::string& name = "t", const std::string& type = "TEST") { return {name, type, 0}; }

inline MetaModel generated(const std::string& preset = "jet-dnn", ConfigStore cfg = {}) {
  return surrogate::model_gen(MetaModel(std::move(cfg)), preset, backend(), actor("gen", "KERAS-MODEL-GEN"));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> n{0};
    path_ = fs::temp_directory_path() /
            ("metaml-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// gen -> prune -> synth -> stop
inline FlowGraph pruning_flow() {
  FlowGraph g(registry());
  g.add_block("KERAS-MODEL-GEN", "gen");
  g.add_block("PRUNING", "prune");
  g.add_block("SYNTHESIS", "synth");
  g.add_block("STOP", "stop");
  g.connect("gen", "prune").connect("prune", "synth").connect("synth", "stop");
  return g;
}

// gen -> fork -> {scale_a -> prune_a, prune_b -> scale_b} -> reduce -> stop
inline FlowGraph scaling_pruning_flow() {
  FlowGraph g(registry());
  g.add_block("KERAS-MODEL-GEN", "gen");
  g.add_block("FORK", "fork");
  g.add_block("SCALING", "scale_a");
  g.add_block("PRUNING", "prune_a");
  g.add_block("PRUNING", "prune_b");
  g.add_block("SCALING", "scale_b");
  g.add_block("REDUCE", "reduce");
  g.add_block("STOP", "stop");
  g.connect("gen", "fork");
  g.connect({"fork"}, {"scale_a", "prune_b"});
  g.connect("scale_a", "prune_a").connect("prune_b", "scale_b");
  g.connect({"prune_a", "scale_b"}, {"reduce"});
  g.connect("reduce", "stop");
  return g;
}

// gen -> join -> prune -> synth -> fits --true--> join, --false--> stop
inline FlowGraph bottom_up_flow() {
  FlowGraph g(registry());
  g.add_block("KERAS-MODEL-GEN", "gen");
  g.add_block("JOIN", "join");
  g.add_block("PRUNING", "prune");
  g.add_block("SYNTHESIS", "synth");
  g.add_block("BRANCH", "fits");
  g.add_block("STOP", "stop");
  g.connect("gen", "join").connect("join", "prune").connect("prune", "synth").connect("synth", "fits");
  g.connect("fits", "join", "true").connect("fits", "stop", "false");
  return g;
}

inline ConfigStore bottom_up_config() {
  ConfigStore cfg;
  cfg.set("PRUNING::tolerate_acc_loss", 0.02);
  cfg.set("FPGA_part_number", "zynq7020");
  cfg.set("fits@predicate", "overmapped");
  cfg.set("fits@action", "raise_tolerance");
  cfg.set("fits@action_key", Json::array({"PRUNING::tolerate_acc_loss"}));
  cfg.set("fits@action_delta", 0.02);
  cfg.set("fits@action_max", 0.2);
  return cfg;
}

}  // namespace testing
