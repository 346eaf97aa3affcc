#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metaml/metamodel/records.hpp"

namespace metaml::kblocks {

enum class Direction { Max, Min };

struct Objective {
  std::string metric;
  Direction direction = Direction::Max;
  friend bool operator==(const Objective&, const Objective&) = default;
};

// "accuracy:max", "lut:min".
Objective parse_objective(std::string_view text);
std::string to_string(const Objective& o);

// True when `a` is at least as good as `b` everywhere and strictly better
// somewhere. Throws MissingMetric.
bool dominates(const ModelRecord& a, const ModelRecord& b, const std::vector<Objective>& objectives);

// Non-dominated subset, ordered by id. Duplicated points all survive.
// Throws MissingMetric.
std::vector<ModelRecord> pareto_front(const std::vector<ModelRecord>& records,
                                      const std::vector<Objective>& objectives);

}  // namespace metaml::kblocks
