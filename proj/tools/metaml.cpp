#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "metaml/cli/export.hpp"
#include "metaml/cli/flowfile.hpp"
#include "metaml/metamodel/checkpoint.hpp"
#include "metaml/scheduler/scheduler.hpp"

namespace fs = std::filesystem;
using namespace metaml;

namespace {

enum Exit { kOk = 0, kFlowError = 1, kParseError = 2, kDiverged = 3, kBlockError = 4, kCorrupt = 5 };

struct Loaded {
  cli::FlowFile flow;
  FlowGraph graph;
  ConfigStore cfg;
};

Loaded load_flow(const std::string& path, const BlockRegistry& registry) {
  auto flow = cli::FlowFile::load(path);
  auto graph = flow.build(registry);
  auto cfg = flow.effective_config(graph);
  return {std::move(flow), std::move(graph), std::move(cfg)};
}

int report(const std::exception& e, int code) {
  std::cerr << "metaml: " << e.what() << "\n";
  return code;
}

// Maps engine errors onto the documented exit codes.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const cli::FlowParseError& e) {
    return report(e, kParseError);
  } catch (const CorruptCheckpoint& e) {
    return report(e, kCorrupt);
  } catch (const FlowDiverged& e) {
    return report(e, kDiverged);
  } catch (const BlockError& e) {
    std::cerr << "metaml: block '" << e.instance() << "' failed (" << e.cause() << ")\n";
    return report(e, kBlockError);
  } catch (const std::exception& e) {
    return report(e, kFlowError);
  }
}

struct RunArgs {
  std::string out = "metaml-out";
  int workers = 0;
  std::vector<std::string> checkpoint_every;
};

int execute(const Loaded& l, const RunArgs& args, const MetaModel* resume_mm, const std::string& at) {
  fs::create_directories(args.out);
  const fs::path out(args.out);

  RunOptions opts;
  opts.workers = args.workers > 0 ? args.workers : l.flow.run.workers;
  opts.job_budget = l.flow.run.job_budget;
  opts.seed = l.flow.run.seed;
  opts.storage_root = l.flow.run.storage_root.empty() ? out / "store" : fs::path(l.flow.run.storage_root);
  const auto backend = cli::make_backend(l.flow.run.backend);
  opts.backend = backend.get();

  std::ofstream log(out / "run.log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + (out / "run.log.jsonl").string());
  opts.log_sink = [&log](const std::vector<LogEntry>& entries) {
    for (const auto& e : entries) log << e.to_json().dump() << '\n';
    log.flush();
  };
  opts.checkpoint_after = {args.checkpoint_every.begin(), args.checkpoint_every.end()};
  opts.on_checkpoint = [&out](const std::string& instance, const MetaModel& mm) {
    checkpoint_save(mm, out / (instance + ".checkpoint.json"));
  };

  const auto result = resume_mm ? resume(l.graph, *resume_mm, at, opts) : run(l.graph, l.cfg, opts);

  for (std::size_t i = 0; i < result.finals.size(); ++i) {
    const auto name = i == 0 ? std::string("final.checkpoint.json") : "final." + std::to_string(i) + ".checkpoint.json";
    checkpoint_save(result.finals[i].mm, out / name);
  }
  write_file(out / "result.json", result.to_json().dump(2) + "\n");
  std::cerr << "metaml: " << result.stats.jobs_executed << " jobs, " << result.finals.size() << " final model(s), "
            << result.stats.wall_ns / 1000000 << " ms\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metaml: design-flow orchestration over versioned meta-models"};
  app.require_subcommand(1);
  const auto registry = BlockRegistry::with_builtins();

  std::string flow_path;
  auto* validate = app.add_subcommand("validate", "check a flow file's graph");
  validate->add_option("flow", flow_path, "flow file")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "execute a flow");
  run_cmd->add_option("flow", flow_path, "flow file")->required();
  run_cmd->add_option("--out", run_args.out, "output directory");
  run_cmd->add_option("--workers", run_args.workers, "worker threads (overrides the flow file)");
  run_cmd->add_option("--checkpoint-every", run_args.checkpoint_every, "write <block>.checkpoint.json after these blocks")
      ->delimiter(',');

  std::string checkpoint_path;
  std::string at;
  auto* resume_cmd = app.add_subcommand("resume", "continue a flow from a checkpoint");
  resume_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  resume_cmd->add_option("flow", flow_path, "flow file")->required();
  resume_cmd->add_option("--at", at, "block that receives the checkpoint")->required();
  resume_cmd->add_option("--out", run_args.out, "output directory");
  resume_cmd->add_option("--workers", run_args.workers, "worker threads");
  resume_cmd->add_option("--checkpoint-every", run_args.checkpoint_every, "write checkpoints after these blocks")
      ->delimiter(',');

  std::string what = "steps";
  std::string csv_path;
  auto* export_cmd = app.add_subcommand("export", "tabulate a checkpoint");
  export_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  export_cmd->add_option("--what", what, "steps | pareto | lineage")
      ->check(CLI::IsMember({"steps", "pareto", "lineage"}));
  export_cmd->add_option("--csv", csv_path, "output CSV (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParseError;
  }

  if (validate->parsed()) {
    return guarded([&] {
      auto l = load_flow(flow_path, registry);
      const auto violations = l.graph.validate();
      for (const auto& v : violations) std::cout << describe(v) << "\n";
      if (violations.empty()) std::cout << "ok\n";
      return violations.empty() ? kOk : kFlowError;
    });
  }
  if (run_cmd->parsed()) {
    return guarded([&] { return execute(load_flow(flow_path, registry), run_args, nullptr, {}); });
  }
  if (resume_cmd->parsed()) {
    return guarded([&] {
      const auto mm = checkpoint_load(checkpoint_path);
      return execute(load_flow(flow_path, registry), run_args, &mm, at);
    });
  }
  return guarded([&] {
    const auto mm = checkpoint_load(checkpoint_path);
    std::vector<const ModelRecord*> rows;
    if (what == "steps") rows = cli::step_records(mm);
    else if (what == "pareto") rows = cli::pareto_records(mm);
    else rows = cli::lineage_records(mm);
    const auto csv = cli::to_csv(rows);
    if (csv_path.empty()) std::cout << csv;
    else write_file(csv_path, csv);
    return kOk;
  });
}
