#include "metaml/kblocks/pareto.hpp"

#include <algorithm>

#include "metaml/errors.hpp"

namespace metaml::kblocks {

namespace {

double value(const ModelRecord& r, const Objective& o) {
  const double* v = r.metric(o.metric);
  if (!v) throw MissingMetric("model '" + r.id + "' has no metric '" + o.metric + "'");
  // Normalize to maximization.
  return o.direction == Direction::Max ? *v : -*v;
}

}  // namespace

Objective parse_objective(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) return {std::string(text), Direction::Max};
  auto dir = text.substr(colon + 1);
  Objective o{std::string(text.substr(0, colon)), Direction::Max};
  if (dir == "min") o.direction = Direction::Min;
  else if (dir != "max") throw InvalidValue("objective direction must be 'max' or 'min': " + std::string(text));
  if (o.metric.empty()) throw InvalidValue("objective without metric: " + std::string(text));
  return o;
}

std::string to_string(const Objective& o) {
  return o.metric + (o.direction == Direction::Max ? ":max" : ":min");
}

bool dominates(const ModelRecord& a, const ModelRecord& b, const std::vector<Objective>& objectives) {
  bool strictly = false;
  for (const auto& o : objectives) {
    const double va = value(a, o);
    const double vb = value(b, o);
    if (va < vb) return false;
    if (va > vb) strictly = true;
  }
  return strictly;
}

std::vector<ModelRecord> pareto_front(const std::vector<ModelRecord>& records,
                                      const std::vector<Objective>& objectives) {
  if (objectives.empty()) throw InvalidValue("pareto_front needs at least one objective");
  // Collect values up front so a missing metric fails before any filtering.
  for (const auto& r : records) {
    for (const auto& o : objectives) value(r, o);
  }
  // Sort by the first objective (descending), ties by the rest; a point can
  // then only be dominated by one that precedes it.
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    for (const auto& o : objectives) {
      const double vx = value(records[x], o);
      const double vy = value(records[y], o);
      if (vx != vy) return vx > vy;
    }
    return false;
  });
  std::vector<std::size_t> front;
  for (auto i : idx) {
    const bool dominated = std::any_of(front.begin(), front.end(), [&](std::size_t f) {
      return dominates(records[f], records[i], objectives);
    });
    if (!dominated) front.push_back(i);
  }
  std::vector<ModelRecord> out;
  out.reserve(front.size());
  for (auto i : front) out.push_back(records[i]);
  std::stable_sort(out.begin(), out.end(), [](const ModelRecord& a, const ModelRecord& b) { return a.id < b.id; });
  return out;
}

}  // namespace metaml::kblocks
