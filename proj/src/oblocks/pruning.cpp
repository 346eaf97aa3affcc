#include <cmath>

#include "metaml/errors.hpp"
#include "metaml/oblocks/search.hpp"
#include "metaml/surrogate/payload.hpp"

namespace metaml::oblocks {

void PruningParams::validate() const {
  if (!(tolerate_acc_loss > 0.0 && tolerate_acc_loss <= 1.0)) {
    throw InvalidValue("tolerate_acc_loss must be in (0,1]");
  }
  if (!(pruning_rate_thresh > 0.0 && pruning_rate_thresh <= 0.5)) {
    throw InvalidValue("pruning_rate_thresh must be in (0,0.5]");
  }
  if (train_epochs < 0) throw InvalidValue("train_epochs must be >= 0");
}

int bisection_steps(double pruning_rate_thresh) {
  // Largest k with 2^-k >= beta; ldexp is exact, so powers of two land on
  // the boundary without rounding.
  int k = 0;
  while (std::ldexp(1.0, -(k + 1)) >= pruning_rate_thresh) ++k;
  return k;
}

PruneTrace bisect_pruning_rate(const PruningParams& params, const std::function<double(double)>& accuracy_at) {
  params.validate();
  PruneTrace t;
  t.baseline = accuracy_at(0.0);
  t.steps.push_back({0.0, t.baseline, true});
  const double floor_acc = t.baseline - params.tolerate_acc_loss;
  double lo = 0.0;
  double hi = 1.0;
  const int k = bisection_steps(params.pruning_rate_thresh);
  for (int i = 0; i < k; ++i) {
    const double mid = (lo + hi) / 2.0;
    const double acc = accuracy_at(mid);
    const bool feasible = acc >= floor_acc;
    t.steps.push_back({mid, acc, feasible});
    if (feasible) {
      lo = mid;
      t.selected_step = t.steps.size() - 1;
    } else {
      hi = mid;
    }
  }
  t.selected_rate = lo;
  return t;
}

MetaModel prune_search(MetaModel mm, const PruningParams& params, const surrogate::Backend& backend,
                       const Actor& actor) {
  const auto focus_id = mm.space().focus(Stage::Neural);
  if (!focus_id) throw MissingFocus(actor.instance + ": no NEURAL model to prune");
  const auto base = surrogate::payload_network(mm.space().at(*focus_id));

  auto with_rate = [&](double rate) {
    auto n = base;
    n.pruning_rate = rate;
    return n;
  };
  const auto trace = bisect_pruning_rate(params, [&](double rate) { return backend.evaluate(with_rate(rate), nullptr); });

  auto request = [&](std::size_t step) {
    const auto& s = trace.steps[step];
    const auto net = with_rate(s.rate);
    CommitRequest req;
    req.parent = *focus_id;
    req.edge = EdgeKind::Variation;
    req.stage = Stage::Neural;
    req.payload = surrogate::neural_payload(net);
    req.metrics = surrogate::network_metrics(net);
    req.metrics["accuracy"] = s.accuracy;
    req.metrics["step"] = static_cast<double>(step + 1);
    req.marks = {marks::kCandidate};
    return req;
  };

  std::string selected;
  if (params.keep_all_candidates) {
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      auto id = mm.commit_model(actor, request(i));
      if (i == trace.selected_step) selected = id;
    }
  } else {
    selected = mm.commit_model(actor, request(trace.selected_step));
  }
  mm.mark(actor, selected, marks::kOptimal);
  mm.set_focus(Stage::Neural, selected);
  return mm;
}

}  // namespace metaml::oblocks
