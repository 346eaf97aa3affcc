#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metaml/metamodel/config.hpp"
#include "metaml/surrogate/network.hpp"

namespace metaml::surrogate {

// Fixed-point width: total bits including `integer` integer bits.
struct BitPair {
  int total = 18;
  int integer = 8;
  friend bool operator==(const BitPair&, const BitPair&) = default;
};

enum class PrecisionField { Weight, Bias, Output };
inline constexpr PrecisionField kPrecisionFields[] = {PrecisionField::Weight, PrecisionField::Bias,
                                                      PrecisionField::Output};
std::string_view to_string(PrecisionField f);

// Precision of one virtual layer. `outputs[0]` is the weights-layer result,
// `outputs[k]` the k-th absorber's result; the group's output is the last.
struct LayerPrecision {
  BitPair weight;
  BitPair bias;
  std::vector<BitPair> outputs{BitPair{}};

  const BitPair& output() const { return outputs.back(); }
  BitPair& output() { return outputs.back(); }
  // Narrowest result width in the group; bounds the group's accuracy.
  int effective_output_bits() const;
  BitPair& field(PrecisionField f);
  const BitPair& field(PrecisionField f) const;

  friend bool operator==(const LayerPrecision&, const LayerPrecision&) = default;
};

struct PrecisionConfig {
  std::vector<LayerPrecision> layers;  // one per virtual layer
  int default_integer_bits = 8;
  double clock_period_ns = 10.0;
  std::string fpga_part = "zynq7020";

  Json to_json() const;
  static PrecisionConfig from_json(const Json& j);
  friend bool operator==(const PrecisionConfig&, const PrecisionConfig&) = default;
};

// "ap_fixed<18,8>" or "18,8".
BitPair parse_bit_pair(std::string_view text);

// Every field of every virtual layer (and every absorber output) at `bits`.
PrecisionConfig default_precision(const NetworkModel& network, BitPair bits, std::string part, double clock_ns);

}  // namespace metaml::surrogate
