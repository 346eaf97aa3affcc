#include "metaml/cli/export.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace metaml::cli {

std::string format_number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  return Json(v).dump();
}

std::string csv_header() {
  std::string out;
  for (const char* c : kStepColumns) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + "\n";
}

std::string csv_row(const ModelRecord& r) {
  std::string out;
  bool first = true;
  for (const std::string c : kStepColumns) {
    if (!first) out += ',';
    first = false;
    if (c == "block") out += r.producer;
    else if (c == "model_id") out += r.id;
    else if (const double* v = r.metric(c)) out += format_number(*v);
  }
  return out + "\n";
}

std::vector<const ModelRecord*> step_records(const MetaModel& mm) {
  std::vector<const ModelRecord*> out;
  std::set<std::string> seen;
  for (const auto& e : mm.log()) {
    if (e.event != EventKind::Commit) continue;
    for (const auto& id : e.output_models) {
      const auto* r = mm.space().find(id);
      if (r && r->has_mark(marks::kCandidate) && seen.insert(id).second) out.push_back(r);
    }
  }
  return out;
}

std::vector<const ModelRecord*> pareto_records(const MetaModel& mm) {
  std::vector<const ModelRecord*> out;
  for (const auto& r : mm.space().records()) {
    if (r.has_mark(marks::kPareto)) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const ModelRecord* a, const ModelRecord* b) { return a->id < b->id; });
  return out;
}

std::vector<const ModelRecord*> lineage_records(const MetaModel& mm) {
  std::vector<const ModelRecord*> out;
  const auto* focus = mm.space().deepest_focus();
  if (!focus) return out;
  for (const auto& r : mm.lineage(focus->id)) out.push_back(&mm.space().at(r.id));
  return out;
}

std::string to_csv(const std::vector<const ModelRecord*>& rows) {
  std::string out = csv_header();
  for (const auto* r : rows) out += csv_row(*r);
  return out;
}

}  // namespace metaml::cli
