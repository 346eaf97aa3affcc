#include <cmath>

#include "metaml/errors.hpp"
#include "metaml/oblocks/search.hpp"
#include "metaml/surrogate/payload.hpp"

namespace metaml::oblocks {

void ScalingParams::validate() const {
  if (!(scale_factor > 0.0 && scale_factor < 1.0)) throw InvalidValue("scale factor must be in (0,1)");
  if (!(tolerate_acc_loss >= 0.0)) throw InvalidValue("tolerate_acc_loss must be >= 0");
  if (max_trials_num < 1) throw InvalidValue("max_trials_num must be >= 1");
}

ScaleTrace search_scale(const ScalingParams& params, double entry_sigma,
                        const std::function<double(double)>& accuracy_at) {
  params.validate();
  ScaleTrace t;
  const double baseline = accuracy_at(entry_sigma);
  t.steps.push_back({entry_sigma, baseline});
  const std::int64_t trials = params.scale_auto ? params.max_trials_num : 1;
  for (std::int64_t i = 1; i <= trials; ++i) {
    const double sigma = entry_sigma * std::pow(params.scale_factor, static_cast<double>(i));
    const double acc = accuracy_at(sigma);
    t.steps.push_back({sigma, acc});
    if (baseline - acc > params.tolerate_acc_loss) break;
    t.selected_step = t.steps.size() - 1;
  }
  return t;
}

MetaModel scale_search(MetaModel mm, const ScalingParams& params, const surrogate::Backend& backend,
                       const Actor& actor) {
  const auto focus_id = mm.space().focus(Stage::Neural);
  if (!focus_id) throw MissingFocus(actor.instance + ": no NEURAL model to scale");
  const auto base = surrogate::payload_network(mm.space().at(*focus_id));

  bool shrinkable = false;
  for (auto i : base.weights_layers()) {
    if (base.is_hidden(i) && base.effective_width(i) > 1) shrinkable = true;
  }
  if (!shrinkable) throw DegenerateModel(actor.instance + ": no hidden layer of " + base.name + " can shrink");

  auto with_sigma = [&](double sigma) {
    auto n = base;
    n.scale = sigma;
    return n;
  };
  const auto trace =
      search_scale(params, base.scale, [&](double s) { return backend.evaluate(with_sigma(s), nullptr); });

  std::string selected;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto net = with_sigma(trace.steps[i].sigma);
    CommitRequest req;
    req.parent = *focus_id;
    req.edge = EdgeKind::Variation;
    req.stage = Stage::Neural;
    req.payload = surrogate::neural_payload(net);
    req.metrics = surrogate::network_metrics(net);
    req.metrics["accuracy"] = trace.steps[i].accuracy;
    req.metrics["step"] = static_cast<double>(i + 1);
    req.marks = {marks::kCandidate};
    auto id = mm.commit_model(actor, std::move(req));
    if (i == trace.selected_step) selected = id;
  }
  mm.mark(actor, selected, marks::kOptimal);
  mm.set_focus(Stage::Neural, selected);
  return mm;
}

}  // namespace metaml::oblocks
