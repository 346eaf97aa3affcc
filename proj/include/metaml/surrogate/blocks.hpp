#pragma once

#include <optional>
#include <string>

#include "metaml/metamodel/metamodel.hpp"
#include "metaml/surrogate/backend.hpp"

namespace metaml::surrogate {

// Source block: ROOT NEURAL commit of a preset with its baseline accuracy.
// Throws UnknownPreset.
MetaModel model_gen(MetaModel mm, const std::string& preset, const Backend& backend, const Actor& actor);

struct SynthesisParams {
  std::string part = "zynq7020";
  std::optional<double> clock_ns;  // part default when absent
  BitPair default_bits;            // 18 total, 8 integer
};

// NEURAL focus -> KERNEL specialization at the default precision.
// Throws MissingFocus, UnknownPart.
MetaModel lower_to_kernel(MetaModel mm, const SynthesisParams& params, const Backend& backend, const Actor& actor);

// KERNEL focus -> RTL specialization carrying the resource report.
MetaModel lower_to_rtl(MetaModel mm, const Backend& backend, const Actor& actor);

// Both lowerings. A KERNEL focus that already derives from the current
// NEURAL focus is reused rather than re-created, so quantized precision
// survives.
MetaModel synthesize(MetaModel mm, const SynthesisParams& params, const Backend& backend, const Actor& actor);

}  // namespace metaml::surrogate
