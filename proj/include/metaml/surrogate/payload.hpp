#pragma once

#include "metaml/metamodel/records.hpp"
#include "metaml/surrogate/backend.hpp"

namespace metaml::surrogate {

// Payload layout per stage:
//   NEURAL {"network"}, KERNEL {"network","precision"}, RTL {"network","precision","report"}
Json neural_payload(const NetworkModel& network);
Json kernel_payload(const NetworkModel& network, const PrecisionConfig& precision);
Json rtl_payload(const NetworkModel& network, const PrecisionConfig& precision, const ResourceReport& report);

NetworkModel payload_network(const ModelRecord& r);      // BackendError when absent
PrecisionConfig payload_precision(const ModelRecord& r);  // BackendError when absent

// pruning_rate, scale_sigma, param_count (nonzero weights + biases).
Metrics network_metrics(const NetworkModel& network);

}  // namespace metaml::surrogate
