#include "metaml/scheduler/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

#include "metaml/metamodel/checkpoint.hpp"

namespace metaml {

void RunOptions::validate() const {
  if (workers < 1) throw InvalidValue("workers must be >= 1");
  if (job_budget <= 0) throw InvalidValue("job_budget must be > 0");
}

std::filesystem::path effective_storage_root(const RunOptions& opts) {
  if (const char* env = std::getenv("METAML_STORAGE_ROOT"); env && *env) return env;
  return opts.storage_root;
}

Json RunResult::to_json(bool include_timing) const {
  Json finals_j = Json::array();
  for (const auto& f : finals) {
    Json focus = Json::object();
    for (const auto& [stage, id] : f.mm.space().focus_map()) focus[std::string(to_string(stage))] = id;
    Json optimal = Json::array();
    for (const auto& r : f.mm.space().records()) {
      if (!r.has_mark(marks::kOptimal) && !r.has_mark(marks::kSelected) && !r.has_mark(marks::kPareto)) continue;
      optimal.push_back(Json{{"id", r.id},
                             {"producer", r.producer},
                             {"stage", to_string(r.stage)},
                             {"marks", r.marks},
                             {"metrics", r.metrics}});
    }
    Json focus_metrics = Json::object();
    if (const auto* d = f.mm.space().deepest_focus()) focus_metrics = d->metrics;
    finals_j.push_back(Json{{"stop", f.stop_instance},
                            {"logical_step", f.logical_step},
                            {"branch_tag", f.mm.branch_tag()},
                            {"value", f.value},
                            {"focus", focus},
                            {"focus_metrics", focus_metrics},
                            {"marked", optimal},
                            {"models", f.mm.space().size()}});
  }
  Json stats_j{{"jobs_executed", stats.jobs_executed}, {"per_block", stats.per_block}};
  if (include_timing) stats_j["wall_ns"] = stats.wall_ns;
  return Json{{"finals", finals_j}, {"stats", stats_j}, {"seed", seed}};
}

namespace {

using Identity = std::pair<std::string, std::int64_t>;

std::string error_kind(const std::exception& e) {
  if (const auto* me = dynamic_cast<const Error*>(&e)) return me->kind();
  return "std::exception";
}

class Engine {
 public:
  Engine(const FlowGraph& graph, const RunOptions& opts)
      : graph_(graph), opts_(opts), storage_root_(effective_storage_root(opts)) {
    opts_.validate();
    const auto violations = graph_.validate();
    if (!violations.empty()) {
      std::string msg;
      for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + describe(v);
      throw ValidationFailed(msg);
    }
    backend_ = opts_.backend ? opts_.backend : &default_backend_;
    controls_ = opts_.controls ? opts_.controls : &default_controls_;
  }

  RunResult execute(std::vector<Job> initial) {
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& j : initial) queue_.push_back(std::move(j));

    std::vector<std::thread> pool;
    for (int i = 0; i < opts_.workers; ++i) pool.emplace_back([this] { worker(); });
    for (auto& t : pool) t.join();

    if (error_) std::rethrow_exception(error_);
    check_partial_waves();
    if (finals_.empty()) throw NoStopReached("the flow finished without any STOP firing");

    RunResult res;
    res.seed = opts_.seed;
    res.finals = std::move(finals_);
    std::sort(res.finals.begin(), res.finals.end(), [](const FinalModel& a, const FinalModel& b) {
      return std::tie(a.logical_step, a.mm.branch_tag(), a.stop_instance) <
             std::tie(b.logical_step, b.mm.branch_tag(), b.stop_instance);
    });
    res.stats.jobs_executed = executed_;
    res.stats.per_block = per_block_;
    res.stats.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

 private:
  struct Arrival {
    MetaModel mm;
    std::int64_t logical_step;
  };
  // Barrier state of one REDUCE wave: per in-edge queue of arrivals.
  using Wave = std::vector<std::deque<Arrival>>;

  void worker() {
    while (true) {
      Job job;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return failed_ || !queue_.empty() || in_flight_ == 0; });
        if (failed_ || queue_.empty()) {
          cv_.notify_all();
          return;
        }
        if (executed_ >= opts_.job_budget) {
          fail(std::make_exception_ptr(FlowDiverged("job budget of " + std::to_string(opts_.job_budget) +
                                                    " exhausted with " + std::to_string(queue_.size()) +
                                                    " job(s) pending")));
          return;
        }
        job = std::move(queue_.front());
        queue_.pop_front();
        ++executed_;
        ++per_block_[job.target];
        ++in_flight_;
      }
      try {
        process(std::move(job));
      } catch (...) {
        std::lock_guard lk(mu_);
        fail(std::current_exception());
      }
      {
        std::lock_guard lk(mu_);
        --in_flight_;
      }
      cv_.notify_all();
    }
  }

  // Caller holds mu_.
  void fail(std::exception_ptr e) {
    if (!failed_) {
      failed_ = true;
      error_ = std::move(e);
    }
    cv_.notify_all();
  }

  void process(Job job) {
    const auto& type = graph_.block_type(job.target);
    const Actor actor{job.target, type.name, job.logical_step};

    BlockContext ctx;
    ctx.actor = actor;
    ctx.type = &type;
    ctx.backend = backend_;
    ctx.controls = controls_;
    const auto outs = graph_.out_edges(job.target);
    for (auto e : outs) ctx.out_labels.push_back(graph_.edges()[e].label);
    ctx.in_degree = graph_.in_edges(job.target).size();

    std::set<Identity> known;
    std::set<std::string> known_ids;
    for (auto& in : job.inputs) {
      for (const auto& e : in.log()) known.emplace(e.branch_tag, e.seq);
      for (const auto& r : in.space().records()) known_ids.insert(r.id);
      std::vector<std::string> focus;
      if (const auto* f = in.space().deepest_focus()) focus.push_back(f->id);
      in.append_log(actor, EventKind::BlockStart, std::move(focus), {}, ctx.resolved_params(in.cfg()));
    }

    BlockOutput out;
    try {
      out = type.behavior(ctx, job.inputs);
    } catch (const std::exception& e) {
      auto last = job.inputs.empty() ? std::optional<MetaModel>{} : std::optional<MetaModel>{job.inputs.front()};
      abort_with(BlockError(job.target, error_kind(e), e.what(), std::move(last)));
    }

    auto finish = [&](MetaModel& mm) {
      std::vector<std::string> created;
      for (const auto& r : mm.space().records()) {
        if (!known_ids.count(r.id)) created.push_back(r.id);
      }
      mm.append_log(actor, EventKind::BlockEnd, {}, std::move(created));
    };
    for (auto& em : out.emissions) {
      if (em.out_slot >= outs.size()) {
        abort_with(BlockError(job.target, "ProtocolError", "emitted on a missing output slot", em.mm));
      }
      finish(em.mm);
    }
    if (out.stop) finish(out.stop->mm);

    if (opts_.checkpoint_after.count(job.target)) {
      for (auto& em : out.emissions) {
        em.mm.append_log(actor, EventKind::Checkpoint, {}, {}, Json::object(), "checkpoint after " + job.target);
      }
    }

    // Side effects below are serialized.
    std::lock_guard lk(mu_);
    if (failed_) return;
    std::vector<LogEntry> fresh;
    auto collect = [&](const MetaModel& mm) {
      for (const auto& e : mm.log()) {
        if (known.emplace(e.branch_tag, e.seq).second) fresh.push_back(e);
      }
    };
    for (const auto& em : out.emissions) collect(em.mm);
    if (out.stop) collect(out.stop->mm);
    if (opts_.log_sink && !fresh.empty()) opts_.log_sink(fresh);

    if (!storage_root_.empty()) {
      for (const auto& em : out.emissions) persist_payloads(em.mm, storage_root_);
      if (out.stop) persist_payloads(out.stop->mm, storage_root_);
    }
    if (opts_.on_checkpoint && opts_.checkpoint_after.count(job.target)) {
      for (const auto& em : out.emissions) opts_.on_checkpoint(job.target, em.mm);
    }

    if (out.stop) finals_.push_back({job.target, job.logical_step, std::move(out.stop->mm), std::move(out.stop->value)});
    for (auto& em : out.emissions) route(graph_.edges()[outs[em.out_slot]], std::move(em.mm), job.logical_step + 1);
  }

  [[noreturn]] void abort_with(BlockError err) {
    if (err.mm() && !storage_root_.empty()) {
      std::lock_guard lk(mu_);
      try {
        checkpoint_save(*err.mm(), storage_root_ / "abort.checkpoint.json");
      } catch (const std::exception&) {
        // The original failure matters more than a failed abort dump.
      }
    }
    throw err;
  }

  // Caller holds mu_.
  void route(const Edge& edge, MetaModel mm, std::int64_t step) {
    const auto& dst_type = graph_.block_type(edge.dst);
    if (dst_type.firing != Firing::Barrier) {
      queue_.push_back(Job{edge.dst, {std::move(mm)}, step});
      return;
    }
    const auto in = graph_.in_edges(edge.dst);
    std::size_t slot = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (graph_.edges()[in[i]] == edge) slot = i;
    }
    const auto key = std::make_pair(edge.dst, parent_branch_tag(mm.branch_tag()).value_or(""));
    auto& wave = waves_[key];
    if (wave.empty()) wave.resize(in.size());
    wave[slot].push_back({std::move(mm), step});
    const bool ready = std::all_of(wave.begin(), wave.end(), [](const auto& q) { return !q.empty(); });
    if (!ready) return;
    Job job{edge.dst, {}, 0};
    for (auto& q : wave) {
      job.logical_step = std::max(job.logical_step, q.front().logical_step);
      job.inputs.push_back(std::move(q.front().mm));
      q.pop_front();
    }
    if (std::all_of(wave.begin(), wave.end(), [](const auto& q) { return q.empty(); })) waves_.erase(key);
    queue_.push_back(std::move(job));
  }

  void check_partial_waves() {
    for (auto& [key, wave] : waves_) {
      for (auto& q : wave) {
        if (q.empty()) continue;
        auto mm = q.front().mm;
        abort_with(BlockError(key.first, "MissingBranch",
                              "missing branch: a REDUCE wave never received every incoming stream", std::move(mm)));
      }
    }
  }

  const FlowGraph& graph_;
  RunOptions opts_;
  std::filesystem::path storage_root_;
  surrogate::ReferenceBackend default_backend_;
  ControlRegistry default_controls_ = ControlRegistry::with_builtins();
  const surrogate::Backend* backend_ = nullptr;
  const ControlRegistry* controls_ = nullptr;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> queue_;
  std::int64_t in_flight_ = 0;
  std::int64_t executed_ = 0;
  bool failed_ = false;
  std::exception_ptr error_;
  std::map<std::pair<std::string, std::string>, Wave> waves_;
  std::vector<FinalModel> finals_;
  std::map<std::string, std::int64_t> per_block_;
};

}  // namespace

RunResult run(const FlowGraph& graph, const ConfigStore& cfg, const RunOptions& opts) {
  Engine engine(graph, opts);
  const MetaModel initial(cfg);
  std::vector<Job> jobs;
  for (const auto& s : graph.sources()) jobs.push_back(Job{s, {initial}, 0});
  return engine.execute(std::move(jobs));
}

RunResult resume(const FlowGraph& graph, const MetaModel& mm, const std::string& at_instance, const RunOptions& opts) {
  if (!graph.contains(at_instance)) throw UnknownInstance("no block named '" + at_instance + "'");
  Engine engine(graph, opts);
  std::int64_t step = 0;
  for (const auto& e : mm.log()) step = std::max(step, e.logical_step + 1);
  return engine.execute({Job{at_instance, {mm}, step}});
}

}  // namespace metaml
