#include "metaml/surrogate/payload.hpp"

#include "metaml/errors.hpp"

namespace metaml::surrogate {

Json neural_payload(const NetworkModel& network) { return Json{{"network", network.to_json()}}; }

Json kernel_payload(const NetworkModel& network, const PrecisionConfig& precision) {
  return Json{{"network", network.to_json()}, {"precision", precision.to_json()}};
}

Json rtl_payload(const NetworkModel& network, const PrecisionConfig& precision, const ResourceReport& report) {
  return Json{{"network", network.to_json()}, {"precision", precision.to_json()}, {"report", report.to_json()}};
}

NetworkModel payload_network(const ModelRecord& r) {
  if (!r.payload.contains("network")) throw BackendError("model " + r.id + " carries no network payload");
  try {
    return NetworkModel::from_json(r.payload.at("network"));
  } catch (const Json::exception& e) {
    throw BackendError("model " + r.id + ": malformed network payload: " + e.what());
  }
}

PrecisionConfig payload_precision(const ModelRecord& r) {
  if (!r.payload.contains("precision")) throw BackendError("model " + r.id + " carries no precision payload");
  try {
    return PrecisionConfig::from_json(r.payload.at("precision"));
  } catch (const Json::exception& e) {
    throw BackendError("model " + r.id + ": malformed precision payload: " + e.what());
  }
}

Metrics network_metrics(const NetworkModel& network) {
  return {{"pruning_rate", network.pruning_rate},
          {"scale_sigma", network.scale},
          {"param_count", static_cast<double>(network.nonzero_param_count())}};
}

}  // namespace metaml::surrogate
