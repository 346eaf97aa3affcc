#include <cmath>
#include <random>

#include "doctest.h"
#include "metaml/errors.hpp"
#include "metaml/oblocks/virtual_layers.hpp"
#include "metaml/surrogate/payload.hpp"
#include "support.hpp"

using namespace testing;
using namespace metaml::surrogate;

namespace {

NetworkModel network(std::vector<Layer> layers) {
  NetworkModel n;
  n.name = "tiny-test";
  n.layers = std::move(layers);
  return n;
}

PrecisionConfig uniform(const NetworkModel& n, int total, const std::string& part = "zynq7020") {
  return default_precision(n, {total, std::min(8, total - 1)}, part, backend().part(part).default_clock_ns);
}

}  // namespace

TEST_CASE("presets") {
  const auto tiny = make_preset("tiny-test");
  REQUIRE(tiny.layers.size() == 3);
  CHECK(tiny.layers[0].kind == LayerKind::Input);
  CHECK(tiny.layers[1].kind == LayerKind::Dense);
  CHECK(tiny.layers[2].kind == LayerKind::Softmax);
  CHECK_THROWS_AS(make_preset("alexnet"), UnknownPreset);
  for (const auto& name : preset_names()) {
    const auto n = make_preset(name);
    CHECK_NOTHROW(n.validate());
    CHECK(NetworkModel::from_json(n.to_json()) == n);
  }
}

TEST_CASE("reference oracle values") {
  const auto jet = make_preset("jet-dnn");
  CHECK(backend().evaluate(jet, nullptr) == doctest::Approx(0.76).epsilon(1e-12));
  const auto p = uniform(jet, 18);
  CHECK(backend().evaluate(jet, &p) == doctest::Approx(0.76).epsilon(1e-12));

  auto pruned = jet;
  pruned.pruning_rate = 0.9375;
  CHECK(backend().evaluate(pruned, nullptr) == doctest::Approx(0.743125).epsilon(1e-12));

  auto scaled = jet;
  scaled.scale = 0.32768;
  CHECK(0.76 - backend().evaluate(scaled, nullptr) == doctest::Approx(0.00558).epsilon(1e-9));

  CHECK(backend().evaluate(make_preset("vgg7"), nullptr) == doctest::Approx(0.93));
  CHECK(backend().evaluate(make_preset("resnet9"), nullptr) == doctest::Approx(0.92));
  CHECK(backend().evaluate(make_preset("tiny-test"), nullptr) == doctest::Approx(0.90));
}

TEST_CASE("oracle is monotone along every axis") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto names = preset_names();
    auto n = make_preset(names[rng() % names.size()]);
    n.pruning_rate = u(rng) * 0.999;
    n.scale = 0.05 + 0.95 * u(rng);
    auto prec = uniform(n, 2 + static_cast<int>(rng() % 17));
    for (auto& l : prec.layers) {
      l.weight.total = 2 + static_cast<int>(rng() % 17);
      l.bias.total = 2 + static_cast<int>(rng() % 17);
      l.output().total = 2 + static_cast<int>(rng() % 17);
    }
    const double base = backend().evaluate(n, &prec);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);

    auto more_pruned = n;
    more_pruned.pruning_rate = n.pruning_rate + (0.999 - n.pruning_rate) * u(rng);
    CHECK(backend().evaluate(more_pruned, &prec) <= base);

    auto smaller = n;
    smaller.scale = n.scale * u(rng);
    if (smaller.scale > 0.0) CHECK(backend().evaluate(n, &prec) >= backend().evaluate(smaller, &prec));

    auto narrower = prec;
    auto& l = narrower.layers[rng() % narrower.layers.size()];
    auto& f = l.field(kPrecisionFields[rng() % 3]);
    if (f.total > 2) {
      --f.total;
      CHECK(backend().evaluate(n, &narrower) <= base);
    }
  }
}

TEST_CASE("estimator on a single dense layer") {
  const auto n = network({{"in", LayerKind::Input, 16}, {"fc", LayerKind::Dense, 64}});
  const auto r18 = backend().estimate(n, uniform(n, 18));
  CHECK(r18.dsp == 1024);
  CHECK(r18.lut == 40);
  CHECK(r18.ff == 64);

  auto p6 = uniform(n, 18);
  p6.layers[0].weight = {6, 5};
  const auto r6 = backend().estimate(n, p6);
  CHECK(r6.dsp == 0);
  CHECK(r6.lut == 1024 * 6 * 18 * 3 + 40);

  auto half = n;
  half.pruning_rate = 0.5;
  CHECK(backend().estimate(half, uniform(n, 18)).dsp == static_cast<std::int64_t>(std::ceil(0.5 * 1024)));
}

TEST_CASE("estimator on jet-dnn") {
  auto jet = make_preset("jet-dnn");
  const auto prec = uniform(jet, 18);
  const auto r = backend().estimate(jet, prec);
  CHECK(r.dsp == 4256);
  CHECK(r.dsp_util > 1.0);
  CHECK(r.latency_cycles == 14);
  CHECK(r.latency_ns == 140.0);
  CHECK(r.bram == 3);

  jet.pruning_rate = 0.9375;
  CHECK(backend().estimate(jet, prec).dsp == 266);
  CHECK(backend().estimate(jet, prec).dsp_util == doctest::Approx(266.0 / 220.0));
  jet.pruning_rate = 0.96875;
  CHECK(backend().estimate(jet, prec).dsp == 133);
  CHECK(backend().estimate(jet, prec).dsp_util <= 1.0);

  const auto u250 = uniform(jet, 18, "u250");
  CHECK(backend().estimate(jet, u250).latency_ns == 14 * 5.0);

  auto bad = prec;
  bad.fpga_part = "virtex2";
  CHECK_THROWS_AS(backend().estimate(jet, bad), UnknownPart);
}

TEST_CASE("estimator properties") {
  std::mt19937 rng(5);
  for (const auto& name : preset_names()) {
    for (int trial = 0; trial < 40; ++trial) {
      auto n = make_preset(name);
      n.pruning_rate = (rng() % 1000) / 1001.0;
      const auto prec = uniform(n, 4 + static_cast<int>(rng() % 15), rng() % 2 ? "vu9p" : "zynq7020");
      const auto r = backend().estimate(n, prec);
      CHECK(r == backend().estimate(n, prec));
      CHECK(r.latency_ns == static_cast<double>(r.latency_cycles) * prec.clock_period_ns);
      CHECK(r.dsp >= 0);
      CHECK(r.lut >= 0);

      auto halved = n;
      halved.scale = n.scale * 0.5;
      const auto h = backend().estimate(halved, default_precision(halved, prec.layers[0].weight, prec.fpga_part,
                                                                  prec.clock_period_ns));
      CHECK(h.dsp <= r.dsp);
      CHECK(h.lut <= r.lut);
      CHECK(h.ff <= r.ff);
      CHECK(h.bram <= r.bram);
    }
  }
}

TEST_CASE("virtual layers") {
  using oblocks::build_virtual_layers;
  const auto a = network({{"in", LayerKind::Input, 4},
                          {"d1", LayerKind::Dense, 8},
                          {"r1", LayerKind::Activation, 8},
                          {"d2", LayerKind::Dense, 3},
                          {"sm", LayerKind::Softmax, 3}});
  CHECK(build_virtual_layers(a).size() == 2);

  const auto b = network({{"in", LayerKind::Input, 3},
                          {"c1", LayerKind::Conv2d, 16, std::pair{3, 3}},
                          {"bn", LayerKind::BatchNorm, 16},
                          {"pool", LayerKind::Pool, 16},
                          {"relu", LayerKind::Activation, 16},
                          {"fc", LayerKind::Dense, 10},
                          {"sm", LayerKind::Softmax, 10}});
  const auto vls = build_virtual_layers(b);
  REQUIRE(vls.size() == 2);
  CHECK(vls[0].members == std::vector<std::string>{"c1", "bn", "pool", "relu"});
  CHECK(vls[1].members == std::vector<std::string>{"fc"});

  CHECK_THROWS_AS(build_virtual_layers(network({{"in", LayerKind::Input, 4}, {"r", LayerKind::Activation, 4}})),
                  NoWeightsLayer);
}

TEST_CASE("bit pairs parse") {
  CHECK(parse_bit_pair("ap_fixed<18,8>") == BitPair{18, 8});
  CHECK(parse_bit_pair("16,6") == BitPair{16, 6});
  CHECK(parse_bit_pair("ap_fixed<8,8>") == BitPair{8, 8});
  CHECK_THROWS(parse_bit_pair("ap_fixed<8,9>"));
  CHECK_THROWS(parse_bit_pair("wide"));
}

TEST_CASE("synthesis lowers to KERNEL and RTL") {
  const auto a = actor("synth", "SYNTHESIS");
  SynthesisParams p;
  auto mm = synthesize(generated(), p, backend(), a);
  const auto* rtl = mm.space().deepest_focus();
  REQUIRE(rtl);
  CHECK(rtl->stage == Stage::Rtl);
  CHECK(rtl->edge == EdgeKind::Specialization);
  CHECK(mm.space().at(*rtl->parent).stage == Stage::Kernel);
  CHECK(*rtl->metric("latency_ns") == *rtl->metric("latency_cycles") * 10.0);

  p.part = "u250";
  const auto fast = synthesize(generated(), p, backend(), a);
  const auto* r2 = fast.space().deepest_focus();
  CHECK(*r2->metric("latency_ns") == *r2->metric("latency_cycles") * 5.0);

  // Determinism.
  const auto again = synthesize(generated(), SynthesisParams{}, backend(), a);
  CHECK(again.space().deepest_focus()->metrics == rtl->metrics);

  p.part = "nope";
  CHECK_THROWS_AS(synthesize(generated(), p, backend(), a), UnknownPart);
  CHECK_THROWS_AS(synthesize(MetaModel{ConfigStore{}}, SynthesisParams{}, backend(), a), MissingFocus);

  // A second synthesis of the same NEURAL model keeps the KERNEL model.
  const auto twice = synthesize(mm, SynthesisParams{}, backend(), a);
  CHECK(twice.space().size() == mm.space().size() + 1);
}

TEST_CASE("backend constants can be overridden") {
  const auto b = ReferenceBackend::from_json(
      Json{{"oracle", {{"prune_gain", 24.0}, {"baseline", {{"jet-dnn", 0.8}}}}},
           {"parts", {{"tiny", {{"dsp", 10}, {"lut", 1000}, {"ff", 2000}, {"bram", 4}, {"default_clock_ns", 4.0}}}}}});
  auto jet = make_preset("jet-dnn");
  CHECK(b.evaluate(jet, nullptr) == doctest::Approx(0.8));
  jet.pruning_rate = 0.9375;
  CHECK(b.evaluate(jet, nullptr) == doctest::Approx(0.8 - 24 * 0.0375 * 0.0375));
  CHECK(b.part("tiny").dsp == 10);
  CHECK(b.part("zynq7020").dsp == 220);
}

TEST_CASE("model_gen commits a ROOT NEURAL model") {
  const auto mm = generated("tiny-test");
  REQUIRE(mm.space().size() == 1);
  const auto& r = mm.space().records().front();
  CHECK(r.id == "m1.b0");
  CHECK(r.edge == EdgeKind::Root);
  CHECK(r.stage == Stage::Neural);
  CHECK(*r.metric("accuracy") == doctest::Approx(0.90));
  CHECK(payload_network(r) == make_preset("tiny-test"));
  CHECK_THROWS_AS(generated("lenet"), UnknownPreset);
}
