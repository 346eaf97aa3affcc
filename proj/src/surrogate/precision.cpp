#include "metaml/surrogate/precision.hpp"

#include <algorithm>
#include <charconv>

#include "metaml/errors.hpp"
#include "metaml/oblocks/virtual_layers.hpp"

namespace metaml::surrogate {

namespace {

Json bits_json(const BitPair& b) { return Json::array({b.total, b.integer}); }
BitPair bits_from(const Json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

int parse_int(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InvalidValue("bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string_view to_string(PrecisionField f) {
  switch (f) {
    case PrecisionField::Weight: return "weight";
    case PrecisionField::Bias: return "bias";
    case PrecisionField::Output: return "output";
  }
  return "?";
}

int LayerPrecision::effective_output_bits() const {
  int m = outputs.front().total;
  for (const auto& o : outputs) m = std::min(m, o.total);
  return m;
}

BitPair& LayerPrecision::field(PrecisionField f) {
  switch (f) {
    case PrecisionField::Weight: return weight;
    case PrecisionField::Bias: return bias;
    case PrecisionField::Output: break;
  }
  return output();
}

const BitPair& LayerPrecision::field(PrecisionField f) const {
  return const_cast<LayerPrecision*>(this)->field(f);
}

Json PrecisionConfig::to_json() const {
  Json j{{"default_integer_bits", default_integer_bits},
         {"clock_period_ns", clock_period_ns},
         {"fpga_part", fpga_part},
         {"layers", Json::array()}};
  for (const auto& l : layers) {
    Json lj{{"weight", bits_json(l.weight)}, {"bias", bits_json(l.bias)}, {"outputs", Json::array()}};
    for (const auto& o : l.outputs) lj["outputs"].push_back(bits_json(o));
    j["layers"].push_back(lj);
  }
  return j;
}

PrecisionConfig PrecisionConfig::from_json(const Json& j) {
  PrecisionConfig p;
  p.default_integer_bits = j.at("default_integer_bits").get<int>();
  p.clock_period_ns = j.at("clock_period_ns").get<double>();
  p.fpga_part = j.at("fpga_part").get<std::string>();
  for (const auto& lj : j.at("layers")) {
    LayerPrecision l;
    l.weight = bits_from(lj.at("weight"));
    l.bias = bits_from(lj.at("bias"));
    l.outputs.clear();
    for (const auto& o : lj.at("outputs")) l.outputs.push_back(bits_from(o));
    if (l.outputs.empty()) throw InvalidValue("layer precision without outputs");
    p.layers.push_back(std::move(l));
  }
  return p;
}

BitPair parse_bit_pair(std::string_view text) {
  std::string_view s = text;
  if (s.rfind("ap_fixed<", 0) == 0 && s.back() == '>') {
    s.remove_prefix(9);
    s.remove_suffix(1);
  }
  auto comma = s.find(',');
  if (comma == std::string_view::npos) throw InvalidValue("precision '" + std::string(text) + "' is not <total,int>");
  BitPair b{parse_int(s.substr(0, comma)), parse_int(s.substr(comma + 1))};
  if (b.total < 1 || b.integer < 0 || b.integer > b.total) {
    throw InvalidValue("precision '" + std::string(text) + "' out of range");
  }
  return b;
}

PrecisionConfig default_precision(const NetworkModel& network, BitPair bits, std::string part, double clock_ns) {
  PrecisionConfig p;
  p.default_integer_bits = bits.integer;
  p.clock_period_ns = clock_ns;
  p.fpga_part = std::move(part);
  for (const auto& vl : oblocks::build_virtual_layers(network)) {
    LayerPrecision l;
    l.weight = bits;
    l.bias = bits;
    l.outputs.assign(vl.members.size(), bits);
    p.layers.push_back(std::move(l));
  }
  return p;
}

}  // namespace metaml::surrogate
