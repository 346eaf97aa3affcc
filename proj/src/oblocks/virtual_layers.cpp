#include "metaml/oblocks/virtual_layers.hpp"

#include "metaml/errors.hpp"

namespace metaml::oblocks {

using surrogate::LayerKind;

std::vector<VirtualLayer> build_virtual_layers(const surrogate::NetworkModel& network) {
  std::vector<VirtualLayer> out;
  for (std::size_t i = 0; i < network.layers.size(); ++i) {
    const auto& l = network.layers[i];
    if (surrogate::is_weights_layer(l.kind)) {
      VirtualLayer vl;
      vl.index = out.size();
      vl.weights_layer = i;
      vl.members.push_back(l.name);
      vl.member_layers.push_back(i);
      out.push_back(std::move(vl));
    } else if (surrogate::is_absorber(l.kind) && !out.empty()) {
      out.back().members.push_back(l.name);
      out.back().member_layers.push_back(i);
    }
  }
  if (out.empty()) throw NoWeightsLayer("network '" + network.name + "' has no dense or conv layer");
  return out;
}

}  // namespace metaml::oblocks
