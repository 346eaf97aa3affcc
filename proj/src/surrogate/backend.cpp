#include "metaml/surrogate/backend.hpp"

#include <algorithm>
#include <cmath>

#include "metaml/errors.hpp"
#include "metaml/oblocks/virtual_layers.hpp"

namespace metaml::surrogate {

namespace {

double sq(double x) { return x * x; }

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Metrics ResourceReport::to_metrics() const {
  return {{"dsp", static_cast<double>(dsp)},
          {"lut", static_cast<double>(lut)},
          {"ff", static_cast<double>(ff)},
          {"bram", static_cast<double>(bram)},
          {"dsp_util", dsp_util},
          {"lut_util", lut_util},
          {"ff_util", ff_util},
          {"bram_util", bram_util},
          {"latency_cycles", static_cast<double>(latency_cycles)},
          {"latency_ns", latency_ns}};
}

Json ResourceReport::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : to_metrics()) j[k] = v;
  return j;
}

std::map<std::string, FpgaPart> default_parts() {
  // Vendor datasheet capacities; BRAM in 36 Kb blocks.
  return {
      {"zynq7020", {"zynq7020", 220, 53200, 106400, 140, 10.0}},
      {"vu9p", {"vu9p", 6840, 1182240, 2364480, 2160, 5.0}},
      {"u250", {"u250", 12288, 1728000, 3456000, 2688, 5.0}},
  };
}

double ReferenceBackend::evaluate(const NetworkModel& network, const PrecisionConfig* precision) const {
  auto it = oracle_.baseline.find(network.name);
  if (it == oracle_.baseline.end()) throw BackendError("no baseline accuracy for network '" + network.name + "'");
  const auto& c = oracle_;
  const double knee = c.knee_base - c.knee_slope * (1.0 - network.scale);
  const double loss_p = c.prune_gain * sq(std::max(0.0, network.pruning_rate - knee));
  const double loss_s = c.scale_gain * std::max(0.0, c.scale_floor - network.scale);
  double loss_q = 0.0;
  if (precision) {
    for (const auto& l : precision->layers) {
      loss_q += c.quant_gain * sq(std::max(0, c.weight_knee - l.weight.total));
      loss_q += c.quant_gain * sq(std::max(0, c.bias_knee - l.bias.total));
      loss_q += c.quant_gain * sq(std::max(0, c.output_knee - l.effective_output_bits()));
    }
  }
  return std::clamp(it->second - loss_p - loss_s - loss_q, 0.0, 1.0);
}

ResourceReport ReferenceBackend::estimate(const NetworkModel& network, const PrecisionConfig& precision) const {
  const auto& fpga = part(precision.fpga_part);
  const auto vls = oblocks::build_virtual_layers(network);
  if (vls.size() != precision.layers.size()) {
    throw BackendError("precision has " + std::to_string(precision.layers.size()) + " layers, network has " +
                       std::to_string(vls.size()) + " virtual layers");
  }
  const auto& e = estimator_;
  ResourceReport r;
  double bram_bits = 0.0;
  for (std::size_t k = 0; k < vls.size(); ++k) {
    const auto li = vls[k].weights_layer;
    const auto& lp = precision.layers[k];
    const double weights = static_cast<double>(network.weight_count(li));
    const auto mults = static_cast<std::int64_t>(std::ceil(weights * (1.0 - network.pruning_rate)));
    if (lp.weight.total >= e.dsp_weight_bits) {
      r.dsp += mults;
    } else {
      r.lut += mults * lp.weight.total * lp.outputs.front().total * e.lut_per_bit_product;
    }
    r.lut += e.lut_per_layer;
    r.ff += e.ff_per_layer;
    const double nonzero = static_cast<double>(mults + network.effective_width(li));
    bram_bits += nonzero * lp.weight.total;
  }
  r.bram = static_cast<std::int64_t>(std::ceil(bram_bits / e.bram_bits));
  r.latency_cycles = static_cast<std::int64_t>(vls.size()) * e.cycles_per_layer +
                     (network.has_softmax() ? e.softmax_cycles : 0) + e.io_cycles;
  r.latency_ns = static_cast<double>(r.latency_cycles) * precision.clock_period_ns;
  r.dsp_util = static_cast<double>(r.dsp) / static_cast<double>(fpga.dsp);
  r.lut_util = static_cast<double>(r.lut) / static_cast<double>(fpga.lut);
  r.ff_util = static_cast<double>(r.ff) / static_cast<double>(fpga.ff);
  r.bram_util = static_cast<double>(r.bram) / static_cast<double>(fpga.bram);
  return r;
}

const FpgaPart& ReferenceBackend::part(const std::string& name) const {
  auto it = parts_.find(name);
  if (it == parts_.end()) throw UnknownPart("unknown FPGA part '" + name + "'");
  return it->second;
}

ReferenceBackend ReferenceBackend::from_json(const Json& j) {
  OracleConstants o;
  EstimatorConstants e;
  auto parts = default_parts();
  if (j.contains("oracle")) {
    const auto& oj = j["oracle"];
    if (oj.contains("baseline")) {
      for (const auto& [k, v] : oj["baseline"].items()) o.baseline[k] = v.get<double>();
    }
    read_if(oj, "prune_gain", o.prune_gain);
    read_if(oj, "knee_base", o.knee_base);
    read_if(oj, "knee_slope", o.knee_slope);
    read_if(oj, "scale_gain", o.scale_gain);
    read_if(oj, "scale_floor", o.scale_floor);
    read_if(oj, "quant_gain", o.quant_gain);
    read_if(oj, "weight_knee", o.weight_knee);
    read_if(oj, "bias_knee", o.bias_knee);
    read_if(oj, "output_knee", o.output_knee);
  }
  if (j.contains("estimator")) {
    const auto& ej = j["estimator"];
    read_if(ej, "dsp_weight_bits", e.dsp_weight_bits);
    read_if(ej, "lut_per_bit_product", e.lut_per_bit_product);
    read_if(ej, "lut_per_layer", e.lut_per_layer);
    read_if(ej, "ff_per_layer", e.ff_per_layer);
    read_if(ej, "bram_bits", e.bram_bits);
    read_if(ej, "cycles_per_layer", e.cycles_per_layer);
    read_if(ej, "softmax_cycles", e.softmax_cycles);
    read_if(ej, "io_cycles", e.io_cycles);
  }
  if (j.contains("parts")) {
    for (const auto& [name, pj] : j["parts"].items()) {
      FpgaPart p = parts.count(name) ? parts[name] : FpgaPart{name};
      read_if(pj, "dsp", p.dsp);
      read_if(pj, "lut", p.lut);
      read_if(pj, "ff", p.ff);
      read_if(pj, "bram", p.bram);
      read_if(pj, "default_clock_ns", p.default_clock_ns);
      if (p.dsp <= 0 || p.lut <= 0 || p.ff <= 0 || p.bram <= 0 || p.default_clock_ns <= 0) {
        throw InvalidValue("part '" + name + "' needs positive capacities");
      }
      parts[name] = p;
    }
  }
  return ReferenceBackend(std::move(o), std::move(e), std::move(parts));
}

}  // namespace metaml::surrogate
