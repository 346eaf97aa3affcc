#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "metaml/metamodel/records.hpp"
#include "metaml/surrogate/network.hpp"
#include "metaml/surrogate/precision.hpp"

namespace metaml::surrogate {

struct FpgaPart {
  std::string name;
  std::int64_t dsp = 0;
  std::int64_t lut = 0;
  std::int64_t ff = 0;
  std::int64_t bram = 0;  // 36 Kb blocks
  double default_clock_ns = 10.0;
};

struct ResourceReport {
  std::int64_t dsp = 0;
  std::int64_t lut = 0;
  std::int64_t ff = 0;
  std::int64_t bram = 0;
  double dsp_util = 0.0;
  double lut_util = 0.0;
  double ff_util = 0.0;
  double bram_util = 0.0;
  std::int64_t latency_cycles = 0;
  double latency_ns = 0.0;

  Metrics to_metrics() const;
  Json to_json() const;
  friend bool operator==(const ResourceReport&, const ResourceReport&) = default;
};

// Constants of the analytic accuracy oracle:
//   acc = A0 - gain_p*max(0, p - knee(s))^2 - gain_s*max(0, floor_s - s)
//             - sum gain_q*max(0, b* - bits)^2,   knee(s) = knee_base - knee_slope*(1 - s)
struct OracleConstants {
  std::map<std::string, double> baseline{{"jet-dnn", 0.76}, {"vgg7", 0.93}, {"resnet9", 0.92}, {"tiny-test", 0.90}};
  double prune_gain = 12.0;
  double knee_base = 0.90;
  double knee_slope = 0.25;
  double scale_gain = 0.25;
  double scale_floor = 0.35;
  double quant_gain = 0.005;
  int weight_knee = 6;
  int bias_knee = 4;
  int output_knee = 8;
};

struct EstimatorConstants {
  int dsp_weight_bits = 10;  // weights at or above this width map to DSPs
  int lut_per_bit_product = 3;
  int lut_per_layer = 40;
  int ff_per_layer = 64;
  int bram_bits = 36864;
  int cycles_per_layer = 2;
  int softmax_cycles = 5;
  int io_cycles = 1;
};

std::map<std::string, FpgaPart> default_parts();

// Evaluation backend seam: an accuracy oracle plus a resource estimator.
class Backend {
 public:
  virtual ~Backend() = default;
  // Accuracy in [0,1]; `precision` null means floating point.
  virtual double evaluate(const NetworkModel& network, const PrecisionConfig* precision) const = 0;
  virtual ResourceReport estimate(const NetworkModel& network, const PrecisionConfig& precision) const = 0;
  virtual const FpgaPart& part(const std::string& name) const = 0;  // UnknownPart
};

class ReferenceBackend : public Backend {
 public:
  ReferenceBackend() : parts_(default_parts()) {}
  ReferenceBackend(OracleConstants oracle, EstimatorConstants estimator, std::map<std::string, FpgaPart> parts)
      : oracle_(std::move(oracle)), estimator_(std::move(estimator)), parts_(std::move(parts)) {}

  double evaluate(const NetworkModel& network, const PrecisionConfig* precision) const override;
  ResourceReport estimate(const NetworkModel& network, const PrecisionConfig& precision) const override;
  const FpgaPart& part(const std::string& name) const override;

  const OracleConstants& oracle() const { return oracle_; }
  const EstimatorConstants& estimator() const { return estimator_; }

  // {"oracle": {...}, "estimator": {...}, "parts": {name: {dsp,lut,ff,bram,default_clock_ns}}};
  // absent fields keep their defaults.
  static ReferenceBackend from_json(const Json& j);

 private:
  OracleConstants oracle_;
  EstimatorConstants estimator_;
  std::map<std::string, FpgaPart> parts_;
};

}  // namespace metaml::surrogate
