// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "metaml/metamodel/checkpoint.hpp"
#include "metaml/oblocks/search.hpp"
#include "metaml/scheduler/scheduler.hpp"
#include "metaml/surrogate/payload.hpp"
#include "support.hpp"

using namespace testing;
using surrogate::PrecisionConfig;

namespace {

// Raised by `expect`; carries the first broken expectation.
struct Miss {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Miss{what};
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class CountingBackend : public surrogate::Backend {
 public:
  double evaluate(const surrogate::NetworkModel& n, const PrecisionConfig* p) const override {
    ++evaluations;
    return inner.evaluate(n, p);
  }
  surrogate::ResourceReport estimate(const surrogate::NetworkModel& n, const PrecisionConfig& p) const override {
    return inner.estimate(n, p);
  }
  const surrogate::FpgaPart& part(const std::string& name) const override { return inner.part(name); }

  surrogate::ReferenceBackend inner;
  mutable std::atomic<int> evaluations{0};
};

const ModelRecord& focus(const MetaModel& mm, Stage s) { return mm.space().at(*mm.space().focus(s)); }

RunOptions workers(int n) {
  RunOptions o;
  o.workers = n;
  return o;
}

// ---------------------------------------------------------------------------

void step_count_law() {
  for (int k = 1; k <= 8; ++k) {
    CountingBackend b;
    oblocks::PruningParams p;
    p.pruning_rate_thresh = std::ldexp(1.0, -k);
    oblocks::prune_search(generated(), p, b, actor("prune", "PRUNING"));
    expect(b.evaluations == 1 + k, "beta=2^-" + str(k) + " took " + str(b.evaluations.load()) + " evaluations");
  }
  CountingBackend b;
  oblocks::prune_search(generated(), {}, b, actor("prune", "PRUNING"));
  expect(b.evaluations == 6, "beta=2% took " + str(b.evaluations.load()) + " evaluations");
}

void bisection_optimality() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double knee = u(rng), gain = 0.1 + 30.0 * u(rng), base = 0.5 + 0.4 * u(rng);
    auto acc = [=](double p) { return base - gain * std::pow(std::max(0.0, p - knee), 2.0); };
    oblocks::PruningParams params;
    params.tolerate_acc_loss = 0.001 + 0.1 * u(rng);
    params.pruning_rate_thresh = std::ldexp(1.0, -static_cast<int>(1 + rng() % 8));
    const auto t = oblocks::bisect_pruning_rate(params, acc);

    // Brute force over a fine grid.
    double best = 0.0;
    for (int i = 0; i <= 4096; ++i) {
      const double r = i / 4096.0;
      if (r < 1.0 && acc(r) >= base - params.tolerate_acc_loss) best = r;
    }
    expect(t.selected_rate >= best - params.pruning_rate_thresh,
           "trial " + str(trial) + ": selected " + str(t.selected_rate) + " vs optimum " + str(best));
    expect(acc(t.selected_rate) >= base - params.tolerate_acc_loss, "trial " + str(trial) + ": infeasible pick");
  }
}

void reference_flow_numbers() {
  const auto p = oblocks::prune_search(generated(), {}, backend(), actor("prune", "PRUNING"));
  const auto& pf = focus(p, Stage::Neural);
  expect(*pf.metric("pruning_rate") == 0.9375, "pruning selected " + str(*pf.metric("pruning_rate")));
  expect(std::fabs(*pf.metric("accuracy") - 0.743125) < 1e-12, "pruning accuracy " + str(*pf.metric("accuracy")));

  const auto s = oblocks::scale_search(generated(), {}, backend(), actor("scale", "SCALING"));
  const double sigma = *focus(s, Stage::Neural).metric("scale_sigma");
  expect(sigma == std::pow(0.8, 4), "scaling selected " + str(sigma));

  const auto sp = oblocks::prune_search(s, {}, backend(), actor("prune", "PRUNING"));
  const double sp_rate = *focus(sp, Stage::Neural).metric("pruning_rate");
  expect(sp_rate == 0.78125, "S->P selected " + str(sp_rate));

  auto kernel = surrogate::lower_to_kernel(generated("tiny-test"), {}, backend(), actor("hls", "HLS4ML"));
  const auto q = oblocks::quant_search(kernel, {}, backend(), actor("quant", "QUANTIZATION"));
  const auto bits = surrogate::payload_precision(focus(q, Stage::Kernel)).layers.at(0);
  expect(bits.weight.total == 5 && bits.bias.total == 4 && bits.effective_output_bits() == 8,
         "quantization converged to (" + str(bits.weight.total) + "," + str(bits.bias.total) + "," +
             str(bits.effective_output_bits()) + ")");
}

void composition_effect() {
  const auto p = oblocks::prune_search(generated(), {}, backend(), actor("prune", "PRUNING"));
  const auto sp = oblocks::prune_search(oblocks::scale_search(generated(), {}, backend(), actor("scale", "SCALING")),
                                        {}, backend(), actor("prune", "PRUNING"));
  const double alone = *focus(p, Stage::Neural).metric("pruning_rate");
  const double after = *focus(sp, Stage::Neural).metric("pruning_rate");
  expect(after < alone, "S->P rate " + str(after) + " not below standalone " + str(alone));
}

void pareto_correctness() {
  std::mt19937 rng(5);
  const std::vector<kblocks::Objective> obj = {{"accuracy", kblocks::Direction::Max},
                                               {"lut", kblocks::Direction::Min}};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    auto branches = kblocks::fork(generated("tiny-test"), 2, actor("fork", "FORK"));
    std::vector<ModelRecord> all;
    for (std::size_t i = 0; i < n; ++i) {
      auto& b = branches[i % 2];
      CommitRequest req;
      req.parent = *b.space().focus(Stage::Neural);
      req.metrics = {{"accuracy", static_cast<double>(rng() % 5)}, {"lut", static_cast<double>(rng() % 5)}};
      req.marks = {marks::kCandidate};
      const auto id = b.commit_model(actor("x"), std::move(req));
      all.push_back(b.space().at(id));
    }
    // The generated root has no candidate mark, so only these points compete.
    std::vector<std::string> expect_ids;
    for (const auto& x : all) {
      bool dominated = false;
      for (const auto& y : all) {
        const double xa = x.metrics.at("accuracy"), ya = y.metrics.at("accuracy");
        const double xl = x.metrics.at("lut"), yl = y.metrics.at("lut");
        if (ya >= xa && yl <= xl && (ya > xa || yl < xl)) dominated = true;
      }
      if (!dominated) expect_ids.push_back(x.id);
    }
    std::sort(expect_ids.begin(), expect_ids.end());

    const auto front = kblocks::pareto_front(all, obj);
    std::vector<std::string> got;
    for (const auto& r : front) got.push_back(r.id);
    expect(got == expect_ids, "trial " + str(trial) + ": front differs from brute force");
    const auto again = kblocks::pareto_front(front, obj);
    expect(again.size() == front.size(), "trial " + str(trial) + ": front is not idempotent");

    const auto reduced =
        kblocks::reduce(branches, 2, {kblocks::ReduceMode::Pareto, obj}, actor("reduce", "REDUCE"));
    std::vector<std::string> marked;
    for (const auto& r : reduced.space().records()) {
      if (r.has_mark(marks::kPareto)) marked.push_back(r.id);
    }
    std::sort(marked.begin(), marked.end());
    expect(marked == expect_ids, "trial " + str(trial) + ": reduce marked a different front");
  }
}

// Metrics plus (edge, stage, producer) of every ancestor.
Json selected_signature(const MetaModel& mm) {
  const auto* sel = mm.space().deepest_focus();
  Json shape = Json::array();
  for (const auto& r : mm.lineage(sel->id)) {
    shape.push_back({to_string(r.edge), to_string(r.stage), r.producer});
  }
  return Json{{"metrics", sel->metrics}, {"marks", sel->marks}, {"lineage", shape}};
}

void scheduler_determinism() {
  const auto g = scaling_pruning_flow();
  std::optional<Json> first;
  for (int w : {1, 4, 8}) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto r = run(g, {}, workers(w));
      expect(r.finals.size() == 1, "workers=" + str(w) + ": " + str(r.finals.size()) + " finals");
      const auto sig = selected_signature(r.finals[0].mm);
      if (!first) first = sig;
      expect(sig == *first, "workers=" + str(w) + " selected " + sig.dump());
    }
  }
}

void checkpoint_replay() {
  FlowGraph g(registry());
  g.add_block("KERAS-MODEL-GEN", "gen");
  g.add_block("SCALING", "scale");
  g.add_block("PRUNING", "prune");
  g.add_block("SYNTHESIS", "synth");
  g.add_block("STOP", "stop");
  g.connect("gen", "scale").connect("scale", "prune").connect("prune", "synth").connect("synth", "stop");

  std::optional<MetaModel> mid;
  RunOptions o = workers(1);
  o.checkpoint_after = {"scale"};
  o.on_checkpoint = [&](const std::string&, const MetaModel& mm) { mid = mm; };
  const auto full = run(g, {}, o);
  expect(mid.has_value(), "no checkpoint after scale");

  TempDir dir;
  checkpoint_save(*mid, dir / "mid.json");
  const auto loaded = checkpoint_load(dir / "mid.json");
  expect(loaded.structurally_equal(*mid), "checkpoint round trip is not structural identity");

  const auto resumed = resume(g, loaded, "prune", workers(1));
  const auto& a = full.finals.at(0).mm.space().deepest_focus()->metrics;
  const auto& b = resumed.finals.at(0).mm.space().deepest_focus()->metrics;
  expect(a == b, "resumed focus metrics differ");

  const auto bytes = checkpoint_bytes(full.finals[0].mm);
  expect(parse_checkpoint(bytes).structurally_equal(full.finals[0].mm), "final round trip differs");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x01);
    bool rejected = false;
    try {
      parse_checkpoint(bad);
    } catch (const CorruptCheckpoint&) {
      rejected = true;
    }
    expect(rejected, "flip at byte " + str(i) + " accepted");
  }
}

void bottom_up_feedback() {
  RunOptions o = workers(2);
  o.job_budget = 200;
  const auto r = run(bottom_up_flow(), bottom_up_config(), o);
  expect(r.finals.size() == 1, "expected one final model");
  const auto& mm = r.finals[0].mm;
  const auto* rtl = mm.space().deepest_focus();
  for (const char* m : {"dsp_util", "lut_util", "ff_util", "bram_util"}) {
    expect(*rtl->metric(m) <= 1.0, std::string(m) + " = " + str(*rtl->metric(m)));
  }
  // Iterations that loop back are the true firings of the branch.
  std::int64_t true_firings = 0, changes = 0;
  for (const auto& e : mm.log()) {
    if (e.actor_instance == "fits" && e.event == EventKind::ControlDecision &&
        e.resolved_params.value("predicate", false)) {
      ++true_firings;
    }
    if (e.event == EventKind::ConfigChange) ++changes;
  }
  expect(true_firings >= 1, "the loop never fed back");
  expect(changes == true_firings, str(changes) + " config changes for " + str(true_firings) + " iterations");
  expect(r.stats.per_block.at("prune") == true_firings + 1, "prune ran " + str(r.stats.per_block.at("prune")));
  for (const auto& e : mm.log()) {
    if (e.event == EventKind::ConfigChange) expect(e.actor_instance == "fits", "config changed by " + e.actor_instance);
  }
}

bool has(const std::vector<Violation>& vs, const std::string& kind, const std::string& inst) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == kind && v.instance == inst; });
}

void validation_gate() {
  FlowGraph loop(registry());
  loop.add_block("PRUNING", "a");
  loop.add_block("SCALING", "b");
  loop.connect("a", "b").connect("b", "a");
  const auto vs = loop.validate();
  expect(std::any_of(vs.begin(), vs.end(), [](const Violation& v) { return v.kind == "no_source"; }),
         "sourceless graph accepted");

  FlowGraph fan(registry());
  fan.add_block("KERAS-MODEL-GEN", "gen");
  fan.add_block("PRUNING", "prune");
  fan.add_block("STOP", "s1");
  fan.add_block("STOP", "s2");
  fan.connect("gen", "prune").connect({"prune"}, {"s1", "s2"});
  expect(has(fan.validate(), "out_multiplicity", "prune"), "PRUNING fan-out 2 accepted");

  FlowGraph fed(registry());
  fed.add_block("KERAS-MODEL-GEN", "g1");
  fed.add_block("KERAS-MODEL-GEN", "g2");
  fed.add_block("QUANTIZATION", "q");
  fed.add_block("STOP", "s");
  fed.connect({"g1", "g2"}, {"q"}).connect("q", "s");
  expect(has(fed.validate(), "in_multiplicity", "q"), "QUANTIZATION fan-in 2 accepted");

  FlowGraph gen_in(registry());
  gen_in.add_block("KERAS-MODEL-GEN", "g");
  gen_in.add_block("KERAS-MODEL-GEN", "h");
  gen_in.add_block("STOP", "s");
  gen_in.connect("g", "h").connect("h", "s");
  expect(has(gen_in.validate(), "in_multiplicity", "h"), "MODEL-GEN with an input accepted");

  bool refused = false;
  try {
    run(fan, {}, workers(1));
  } catch (const ValidationFailed&) {
    refused = true;
  }
  expect(refused, "run accepted an invalid graph");
  expect(pruning_flow().validate().empty(), "reference pruning flow rejected");
}

void quantization_invariants() {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    PrecisionConfig start;
    const int layers = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < layers; ++i) {
      surrogate::LayerPrecision l;
      l.weight = l.bias = {16, 6};
      l.outputs.assign(1 + rng() % 3, surrogate::BitPair{16, 6});
      start.layers.push_back(l);
    }
    start.default_integer_bits = 6;
    std::vector<double> knee(3 * layers), gain(3 * layers);
    for (auto& k : knee) k = 2 + 12 * u(rng);
    for (auto& g : gain) g = 0.03 * u(rng);
    auto acc = [&](const PrecisionConfig& c) {
      double a = 0.95;
      for (int i = 0; i < layers; ++i) {
        const int b[] = {c.layers[i].weight.total, c.layers[i].bias.total, c.layers[i].effective_output_bits()};
        for (int f = 0; f < 3; ++f) a -= gain[3 * i + f] * std::pow(std::max(0.0, knee[3 * i + f] - b[f]), 2.0);
      }
      return a;
    };
    oblocks::QuantParams p;
    p.tolerate_acc_loss = 0.001 + 0.05 * u(rng);
    const auto t = oblocks::search_precision(p, start, acc);
    const double loss = t.baseline - t.final_accuracy;
    expect(loss < p.tolerate_acc_loss, "landscape " + str(trial) + ": loss " + str(loss));
  }

  for (int trial = 0; trial < 1000; ++trial) {
    PrecisionConfig c;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 4); ++i) {
      surrogate::LayerPrecision l;
      l.outputs.clear();
      for (int j = 0; j < 1 + static_cast<int>(rng() % 5); ++j) {
        const int total = 2 + static_cast<int>(rng() % 20);
        l.outputs.push_back({total, static_cast<int>(rng() % total)});
      }
      c.layers.push_back(l);
    }
    const auto n = oblocks::normalize_precision(c);
    expect(oblocks::normalize_precision(n) == n, "config " + str(trial) + ": not a fixpoint");
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
      for (std::size_t j = 0; j < c.layers[i].outputs.size(); ++j) {
        expect(n.layers[i].outputs[j].total <= c.layers[i].outputs[j].total, "config " + str(trial) + ": widened");
        if (j + 1 < n.layers[i].outputs.size()) {
          expect(n.layers[i].outputs[j].total <= n.layers[i].outputs[j + 1].total,
                 "config " + str(trial) + ": producer wider than its absorber");
        }
      }
    }
  }
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;  // 0: no limit stated
  std::function<void()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "step-count law", 1.0, step_count_law},
      {2, "bisection optimality", 10.0, bisection_optimality},
      {3, "reference-flow numbers", 0.0, reference_flow_numbers},
      {4, "composition effect", 0.0, composition_effect},
      {5, "pareto correctness", 5.0, pareto_correctness},
      {6, "scheduler determinism", 0.0, scheduler_determinism},
      {7, "checkpoint/replay", 0.0, checkpoint_replay},
      {8, "bottom-up feedback", 0.0, bottom_up_feedback},
      {9, "validation gate", 0.0, validation_gate},
      {10, "quantization invariants", 0.0, quantization_invariants},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = true;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.check();
    } catch (const Miss& m) {
      ok = false;
      detail = m.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && c.limit_s > 0 && secs >= c.limit_s) {
      ok = false;
      detail = "took " + str(secs) + " s, limit " + str(c.limit_s) + " s";
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (ok ? "PASS" : "FAIL") << "  " << c.number << ". " << c.name << " (" << timing << ")";
    if (!ok) std::cout << ": " << detail;
    std::cout << "\n";
    failures += ok ? 0 : 1;
  }
  return failures;
}
