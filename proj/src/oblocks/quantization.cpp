#include <algorithm>

#include "metaml/errors.hpp"
#include "metaml/oblocks/search.hpp"
#include "metaml/surrogate/payload.hpp"

namespace metaml::oblocks {

using surrogate::BitPair;
using surrogate::PrecisionConfig;
using surrogate::PrecisionField;

void QuantParams::validate() const {
  if (!(tolerate_acc_loss >= 0.0)) throw InvalidValue("tolerate_acc_loss must be >= 0");
  if (min_total_bits < 1) throw InvalidValue("min_total_bits must be >= 1");
  if (bit_step < 1) throw InvalidValue("bit_step must be >= 1");
}

PrecisionConfig normalize_precision(PrecisionConfig cfg) {
  for (auto& layer : cfg.layers) {
    auto& outs = layer.outputs;
    for (std::size_t i = outs.size() - 1; i-- > 0;) {
      const auto& consumer = outs[i + 1];
      auto& producer = outs[i];
      if (consumer.total < producer.total) {
        producer.total = consumer.total;
        producer.integer = std::min(producer.integer, consumer.integer);
      }
    }
  }
  return cfg;
}

QuantTrace search_precision(const QuantParams& params, PrecisionConfig start,
                            const std::function<double(const PrecisionConfig&)>& accuracy_of) {
  params.validate();
  QuantTrace t;
  t.baseline = accuracy_of(start);
  auto acceptable = [&](double acc) {
    const double loss = t.baseline - acc;
    return loss < params.tolerate_acc_loss || loss <= 0.0;
  };

  PrecisionConfig cur = std::move(start);
  bool changed = true;
  while (changed) {
    changed = false;
    ++t.sweeps;
    for (std::size_t li = 0; li < cur.layers.size(); ++li) {
      for (auto field : surrogate::kPrecisionFields) {
        while (true) {
          const BitPair before = cur.layers[li].field(field);
          const int total = before.total - params.bit_step;
          if (total < params.min_total_bits) break;
          auto& bits = cur.layers[li].field(field);
          bits.total = total;
          bits.integer = std::min(cur.default_integer_bits, total - 1);
          if (acceptable(accuracy_of(cur))) {
            t.accepted.push_back(cur);
            changed = true;
          } else {
            cur.layers[li].field(field) = before;
            break;
          }
        }
      }
    }
    cur = normalize_precision(std::move(cur));
  }
  t.final_accuracy = accuracy_of(cur);
  t.final_config = std::move(cur);
  return t;
}

namespace {

Metrics precision_metrics(const PrecisionConfig& p) {
  Metrics m;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const auto idx = std::to_string(i);
    m["w_bits_" + idx] = p.layers[i].weight.total;
    m["b_bits_" + idx] = p.layers[i].bias.total;
    m["o_bits_" + idx] = p.layers[i].effective_output_bits();
  }
  return m;
}

}  // namespace

MetaModel quant_search(MetaModel mm, const QuantParams& params, const surrogate::Backend& backend,
                       const Actor& actor) {
  const auto focus_id = mm.space().focus(Stage::Kernel);
  if (!focus_id) throw MissingFocus(actor.instance + ": no KERNEL model to quantize");
  const auto& focus = mm.space().at(*focus_id);
  const auto network = surrogate::payload_network(focus);
  const auto start = surrogate::payload_precision(focus);

  const auto trace =
      search_precision(params, start, [&](const PrecisionConfig& p) { return backend.evaluate(network, &p); });

  std::string parent = *focus_id;
  std::size_t step = 0;
  auto commit = [&](const PrecisionConfig& p) {
    CommitRequest req;
    req.parent = parent;
    req.edge = EdgeKind::Variation;
    req.stage = Stage::Kernel;
    req.payload = surrogate::kernel_payload(network, p);
    req.metrics = precision_metrics(p);
    req.metrics["accuracy"] = backend.evaluate(network, &p);
    req.metrics["step"] = static_cast<double>(++step);
    req.marks = {marks::kCandidate};
    parent = mm.commit_model(actor, std::move(req));
  };
  for (const auto& p : trace.accepted) commit(p);
  // Normalization after the last sweep may narrow outputs further.
  if (!trace.accepted.empty() && !(trace.accepted.back() == trace.final_config)) commit(trace.final_config);

  mm.mark(actor, parent, marks::kOptimal);
  mm.set_focus(Stage::Kernel, parent);
  return mm;
}

}  // namespace metaml::oblocks
