#pragma once

#include <string>
#include <vector>

#include "metaml/metamodel/metamodel.hpp"

namespace metaml::cli {

inline constexpr const char* kStepColumns[] = {
    "step",     "block",    "model_id", "pruning_rate", "scale_sigma", "accuracy",       "dsp",       "lut",
    "ff",       "bram",     "dsp_util", "lut_util",     "ff_util",     "bram_util",      "latency_cycles",
    "latency_ns"};

// Shortest text that round-trips; integral values print without a
// fractional part.
std::string format_number(double v);

std::string csv_header();
std::string csv_row(const ModelRecord& r);

// One row per COMMIT of a candidate-marked model, in log order.
std::vector<const ModelRecord*> step_records(const MetaModel& mm);
// Records marked pareto, ordered by id like the front itself.
std::vector<const ModelRecord*> pareto_records(const MetaModel& mm);
// Root-to-focus chain of the most lowered focus.
std::vector<const ModelRecord*> lineage_records(const MetaModel& mm);

std::string to_csv(const std::vector<const ModelRecord*>& rows);

}  // namespace metaml::cli
