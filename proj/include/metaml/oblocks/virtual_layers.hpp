#pragma once

#include <string>
#include <vector>

#include "metaml/surrogate/network.hpp"

namespace metaml::oblocks {

// One weights-layer plus the batchnorm/pool/activation/flatten layers that
// trail it. Softmax is never a member.
struct VirtualLayer {
  std::size_t index = 0;
  std::size_t weights_layer = 0;              // index into NetworkModel::layers
  std::vector<std::string> members;           // weights layer first
  std::vector<std::size_t> member_layers;     // indices, parallel to members

  std::size_t absorber_count() const { return members.size() - 1; }
  friend bool operator==(const VirtualLayer&, const VirtualLayer&) = default;
};

// Throws NoWeightsLayer.
std::vector<VirtualLayer> build_virtual_layers(const surrogate::NetworkModel& network);

}  // namespace metaml::oblocks
