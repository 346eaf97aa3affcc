#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaml/metamodel/config.hpp"

namespace metaml::surrogate {

enum class LayerKind { Input, Dense, Conv2d, BatchNorm, Pool, Activation, Flatten, Softmax };

std::string_view to_string(LayerKind k);
LayerKind layer_kind_from_string(std::string_view s);

inline bool is_weights_layer(LayerKind k) { return k == LayerKind::Dense || k == LayerKind::Conv2d; }
inline bool is_absorber(LayerKind k) {
  return k == LayerKind::BatchNorm || k == LayerKind::Pool || k == LayerKind::Activation || k == LayerKind::Flatten;
}

struct Layer {
  std::string name;
  LayerKind kind = LayerKind::Dense;
  int width = 1;  // units or channels; carried through unchanged by absorbers
  std::optional<std::pair<int, int>> kernel;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// A synthetic DNN description: layer list plus a global pruning rate and a
// cumulative width scale applied to hidden weights-layers.
struct NetworkModel {
  std::string name;
  std::vector<Layer> layers;
  double pruning_rate = 0.0;
  double scale = 1.0;

  // Throws InvalidValue when the network breaks its invariants.
  void validate() const;

  std::vector<std::size_t> weights_layers() const;
  bool is_hidden(std::size_t layer_index) const;
  int effective_width(std::size_t layer_index) const;
  // Inputs feeding weights-layer `layer_index` (in_channels * kh * kw for conv).
  std::int64_t fan_in(std::size_t layer_index) const;
  std::int64_t weight_count(std::size_t layer_index) const;
  std::int64_t param_count() const;  // weights + biases at effective widths
  std::int64_t nonzero_param_count() const;
  bool has_softmax() const;

  Json to_json() const;
  static NetworkModel from_json(const Json& j);
  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

// Known presets: jet-dnn, vgg7, resnet9, tiny-test. Shapes are conventional,
// not authoritative. Throws UnknownPreset.
NetworkModel make_preset(std::string_view preset);
std::vector<std::string> preset_names();

}  // namespace metaml::surrogate
