#include "metaml/surrogate/blocks.hpp"

#include "metaml/errors.hpp"
#include "metaml/surrogate/payload.hpp"

namespace metaml::surrogate {

MetaModel model_gen(MetaModel mm, const std::string& preset, const Backend& backend, const Actor& actor) {
  const auto net = make_preset(preset);
  CommitRequest req;
  req.edge = EdgeKind::Root;
  req.stage = Stage::Neural;
  req.payload = neural_payload(net);
  req.metrics = network_metrics(net);
  req.metrics["accuracy"] = backend.evaluate(net, nullptr);
  mm.commit_model(actor, std::move(req));
  return mm;
}

MetaModel lower_to_kernel(MetaModel mm, const SynthesisParams& params, const Backend& backend, const Actor& actor) {
  const auto focus_id = mm.space().focus(Stage::Neural);
  if (!focus_id) throw MissingFocus(actor.instance + ": no NEURAL model to lower");
  const auto net = payload_network(mm.space().at(*focus_id));
  const auto& part = backend.part(params.part);
  const double clock = params.clock_ns.value_or(part.default_clock_ns);
  if (!(clock > 0.0)) throw InvalidValue(actor.instance + ": clock_period must be positive");
  const auto precision = default_precision(net, params.default_bits, part.name, clock);

  CommitRequest req;
  req.parent = *focus_id;
  req.edge = EdgeKind::Specialization;
  req.stage = Stage::Kernel;
  req.payload = kernel_payload(net, precision);
  req.metrics = network_metrics(net);
  req.metrics["accuracy"] = backend.evaluate(net, &precision);
  mm.commit_model(actor, std::move(req));
  return mm;
}

MetaModel lower_to_rtl(MetaModel mm, const Backend& backend, const Actor& actor) {
  const auto focus_id = mm.space().focus(Stage::Kernel);
  if (!focus_id) throw MissingFocus(actor.instance + ": no KERNEL model to lower");
  const auto& kernel = mm.space().at(*focus_id);
  const auto net = payload_network(kernel);
  const auto precision = payload_precision(kernel);
  const auto report = backend.estimate(net, precision);

  CommitRequest req;
  req.parent = *focus_id;
  req.edge = EdgeKind::Specialization;
  req.stage = Stage::Rtl;
  req.payload = rtl_payload(net, precision, report);
  req.metrics = network_metrics(net);
  for (const auto& [k, v] : report.to_metrics()) req.metrics[k] = v;
  req.metrics["accuracy"] = backend.evaluate(net, &precision);
  mm.commit_model(actor, std::move(req));
  return mm;
}

namespace {

// Whether the KERNEL focus was lowered from the current NEURAL focus.
bool kernel_is_current(const MetaModel& mm) {
  const auto neural = mm.space().focus(Stage::Neural);
  const auto kernel = mm.space().focus(Stage::Kernel);
  if (!neural || !kernel) return false;
  std::string nearest;
  for (const auto& r : mm.lineage(*kernel)) {
    if (r.stage == Stage::Neural) nearest = r.id;
  }
  return nearest == *neural;
}

}  // namespace

MetaModel synthesize(MetaModel mm, const SynthesisParams& params, const Backend& backend, const Actor& actor) {
  if (!kernel_is_current(mm)) mm = lower_to_kernel(std::move(mm), params, backend, actor);
  return lower_to_rtl(std::move(mm), backend, actor);
}

}  // namespace metaml::surrogate
