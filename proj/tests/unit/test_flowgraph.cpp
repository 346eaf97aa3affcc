#include <algorithm>
#include <chrono>
#include <random>

#include "doctest.h"
#include "metaml/errors.hpp"
#include "metaml/flowgraph/external.hpp"
#include "support.hpp"

using namespace testing;

namespace {

std::string fixture(const std::string& name) { return std::string(METAML_FIXTURES) + "/" + name; }

ExternalBlockSpec spec_for(const std::string& script, double timeout = 10.0) {
  ExternalBlockSpec s;
  s.command = "python3";
  s.args = {fixture(script)};
  s.timeout_s = timeout;
  return s;
}

bool has_kind(const std::vector<Violation>& vs, const std::string& kind, const std::string& instance = {}) {
  return std::any_of(vs.begin(), vs.end(),
                     [&](const Violation& v) { return v.kind == kind && (instance.empty() || v.instance == instance); });
}

}  // namespace

TEST_CASE("built-in block types and their multiplicities") {
  struct Row {
    const char* name;
    Role role;
    Multiplicity m;
  };
  const Row table[] = {
      {"KERAS-MODEL-GEN", Role::Lambda, {0, 0, 1, 1}},
      {"HLS4ML", Role::Lambda, {1, 1, 1, 1}},
      {"VIVADO-HLS", Role::Lambda, {1, 1, 1, 1}},
      {"SYNTHESIS", Role::Lambda, {1, 1, 1, 1}},
      {"PRUNING", Role::Opt, {1, 1, 1, 1}},
      {"SCALING", Role::Opt, {1, 1, 1, 1}},
      {"QUANTIZATION", Role::Opt, {1, 1, 1, 1}},
      {"FORK", Role::Kappa, {1, 1, 2, kUnbounded}},
      {"JOIN", Role::Kappa, {2, kUnbounded, 1, 1}},
      {"BRANCH", Role::Kappa, {1, 1, 2, 2}},
      {"REDUCE", Role::Kappa, {2, kUnbounded, 1, 1}},
      {"STOP", Role::Kappa, {1, kUnbounded, 0, 0}},
  };
  for (const auto& row : table) {
    CAPTURE(row.name);
    const auto& t = registry().at(row.name);
    CHECK(t.role == row.role);
    CHECK(t.multiplicity.in_min == row.m.in_min);
    CHECK(t.multiplicity.in_max == row.m.in_max);
    CHECK(t.multiplicity.out_min == row.m.out_min);
    CHECK(t.multiplicity.out_max == row.m.out_max);
  }
  CHECK(registry().at("BRANCH").labeled_outputs);
  CHECK(registry().at("REDUCE").firing == Firing::Barrier);
  CHECK(registry().at("FORK").multiplicity.describe() == "1-to-(2..*)");
  CHECK_THROWS_AS(registry().at("TRAIN"), UnknownType);

  auto r = BlockRegistry::with_builtins();
  CHECK_THROWS_AS(r.register_block_type(r.at("PRUNING")), DuplicateType);
  BlockType custom;
  custom.name = "MY-BLOCK";
  r.register_block_type(custom);
  CHECK(r.contains("MY-BLOCK"));
}

TEST_CASE("instance naming") {
  FlowGraph g(registry());
  CHECK(g.add_block("PRUNING") == "PRUNING_1");
  CHECK(g.add_block("PRUNING") == "PRUNING_2");
  CHECK(g.add_block("PRUNING", "prune1") == "prune1");
  CHECK(g.add_block("SCALING") == "SCALING_1");
  CHECK_THROWS_AS(g.add_block("PRUNING", "prune1"), DuplicateInstance);
  CHECK_THROWS_AS(g.add_block("PRUNE"), UnknownType);
  CHECK(g.instances() == std::vector<std::string>{"PRUNING_1", "PRUNING_2", "prune1", "SCALING_1"});
}

TEST_CASE("connect broadcasts") {
  FlowGraph g(registry());
  for (const char* n : {"a", "b", "c"}) g.add_block("PRUNING", n);
  g.add_block("JOIN", "join");
  g.add_block("BRANCH", "br");
  g.connect({"a"}, {"b", "c"});
  CHECK(g.edges().size() == 2);
  g.connect({"a", "b"}, {"join"});
  CHECK(g.edges().size() == 4);
  g.connect("br", "c", "true");
  CHECK(g.edges().back() == Edge{"br", "true", "c"});
  CHECK_THROWS_AS(g.connect("a", "ghost"), UnknownInstance);

  std::mt19937 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    FlowGraph h(registry());
    std::vector<std::string> srcs, dsts;
    const int n = 1 + rng() % 5, m = 1 + rng() % 5;
    for (int i = 0; i < n; ++i) srcs.push_back(h.add_block("PRUNING"));
    for (int i = 0; i < m; ++i) dsts.push_back(h.add_block("SCALING"));
    h.connect(srcs, dsts);
    std::vector<Edge> expect;
    for (const auto& s : srcs) {
      for (const auto& d : dsts) expect.push_back({s, kDefaultLabel, d});
    }
    auto got = h.edges();
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
  }
}

TEST_CASE("validation") {
  CHECK(pruning_flow().validate().empty());
  CHECK(scaling_pruning_flow().validate().empty());
  CHECK(bottom_up_flow().validate().empty());

  FlowGraph loop(registry());
  loop.add_block("PRUNING", "a");
  loop.add_block("SCALING", "b");
  loop.connect("a", "b").connect("b", "a");
  const auto vs = loop.validate();
  CHECK(has_kind(vs, "no_source"));
  CHECK(describe(vs.front()).find("no source block") != std::string::npos);

  FlowGraph fan(registry());
  fan.add_block("KERAS-MODEL-GEN", "gen");
  fan.add_block("PRUNING", "prune");
  fan.add_block("STOP", "s1");
  fan.add_block("STOP", "s2");
  fan.connect("gen", "prune").connect({"prune"}, {"s1", "s2"});
  CHECK(has_kind(fan.validate(), "out_multiplicity", "prune"));

  FlowGraph br(registry());
  br.add_block("KERAS-MODEL-GEN", "gen");
  br.add_block("BRANCH", "br");
  br.add_block("STOP", "s1");
  br.add_block("STOP", "s2");
  br.connect("gen", "br").connect("br", "s1", "true").connect("br", "s2", "true");
  CHECK(has_kind(br.validate(), "branch_labels", "br"));

  // Several problems are all reported.
  FlowGraph many(registry());
  many.add_block("PRUNING", "p");
  many.add_block("STOP", "s");
  many.add_block("REDUCE", "r");
  many.connect("p", "s").connect("s", "p").connect("p", "r");
  const auto all = many.validate();
  CHECK(all.size() >= 3);
  CHECK(all == many.validate());

  FlowGraph cyc(registry());
  cyc.add_block("KERAS-MODEL-GEN", "gen");
  cyc.add_block("JOIN", "j");
  cyc.add_block("PRUNING", "p");
  cyc.add_block("SCALING", "q");
  cyc.add_block("STOP", "s");
  cyc.connect("gen", "j").connect("j", "p").connect("p", "q").connect("q", "j");
  cyc.connect("q", "s");
  CHECK(has_kind(cyc.validate(), "out_multiplicity", "q"));

  // A cycle through JOIN is fine; one through plain blocks is not.
  CHECK_FALSE(has_kind(bottom_up_flow().validate(), "illegal_cycle"));
  CHECK(has_kind(vs, "illegal_cycle", "a"));
}

TEST_CASE("same_structure ignores insertion order of edges") {
  auto a = scaling_pruning_flow();
  FlowGraph b(registry());
  for (const auto& n : a.instances()) b.add_block(a.type_of(n), n);
  auto edges = a.edges();
  std::reverse(edges.begin(), edges.end());
  for (const auto& e : edges) b.connect(e.src, e.dst, e.label);
  CHECK(a.same_structure(b));
  b.connect("gen", "fork");
  CHECK_FALSE(a.same_structure(b));
}

TEST_CASE("external block protocol") {
  const auto mm = generated();
  const auto a = actor("ext", "EXTERNAL");

  const auto same = run_external_block(spec_for("identity.py"), mm, a);
  CHECK(same.space() == mm.space());
  CHECK(same.cfg() == mm.cfg());

  const auto one = run_external_block(spec_for("one_variation.py"), mm, a);
  REQUIRE(one.space().size() == 2);
  const auto& r = one.space().records().back();
  CHECK(r.id == "m2.b0");
  CHECK(r.parent == std::optional<std::string>("m1.b0"));
  CHECK(r.edge == EdgeKind::Variation);
  CHECK(r.stage == Stage::Neural);
  CHECK(r.producer == "ext");
  CHECK(*r.metric("scale_sigma") == 0.5);
  CHECK(r.has_mark(marks::kCandidate));
  CHECK(one.cfg().find("PRUNING::tolerate_acc_loss")->get<double>() == 0.05);
  CHECK(*one.space().focus(Stage::Neural) == r.id);

  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(run_external_block(spec_for("sleepy.py", 0.5), mm, a), Timeout);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));

  try {
    run_external_block(spec_for("failing.py"), mm, a);
    FAIL("expected ChildFailed");
  } catch (const ChildFailed& e) {
    CHECK(std::string(e.what()).find("code 3") != std::string::npos);
  }
  CHECK_THROWS_AS(run_external_block(spec_for("garbage.py"), mm, a), ProtocolError);
  CHECK_THROWS_AS(run_external_block(spec_for("extra_field.py"), mm, a), ProtocolError);

  ExternalBlockSpec missing;
  missing.command = "/nonexistent/tool";
  CHECK_THROWS_AS(run_external_block(missing, mm, a), ChildFailed);

  ExternalBlockSpec bad;
  CHECK_THROWS_AS(bad.validate(), InvalidValue);
  bad.command = "x";
  bad.timeout_s = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidValue);
  CHECK_THROWS_AS(ExternalBlockSpec::from_json(Json{{"command", "x"}, {"retries", 2}}), InvalidValue);
  const auto parsed = ExternalBlockSpec::from_json(Json{{"command", "x"}, {"args", {"-v"}}, {"timeout_s", 2}});
  CHECK(parsed.args == std::vector<std::string>{"-v"});
  CHECK(parsed.timeout_s == 2.0);
}

TEST_CASE("external evaluator backend") {
  ExternalBackend b(spec_for("evaluator.py"), surrogate::ReferenceBackend{});
  auto net = surrogate::make_preset("jet-dnn");
  net.pruning_rate = 0.5;
  CHECK(b.evaluate(net, nullptr) == doctest::Approx(0.75));
  CHECK(b.part("zynq7020").dsp == 220);
  ExternalBackend broken(spec_for("garbage.py"), surrogate::ReferenceBackend{});
  CHECK_THROWS_AS(broken.evaluate(net, nullptr), BackendError);
}
