#include "metaml/surrogate/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "metaml/errors.hpp"

namespace metaml::surrogate {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 8> kKindNames{{
    {LayerKind::Input, "input"},
    {LayerKind::Dense, "dense"},
    {LayerKind::Conv2d, "conv2d"},
    {LayerKind::BatchNorm, "batchnorm"},
    {LayerKind::Pool, "pool"},
    {LayerKind::Activation, "activation"},
    {LayerKind::Flatten, "flatten"},
    {LayerKind::Softmax, "softmax"},
}};

Layer input(int w) { return {"input", LayerKind::Input, w, std::nullopt}; }
Layer dense(std::string name, int w) { return {std::move(name), LayerKind::Dense, w, std::nullopt}; }
Layer conv(std::string name, int ch) { return {std::move(name), LayerKind::Conv2d, ch, std::pair{3, 3}}; }
Layer absorb(std::string name, LayerKind k, int w) { return {std::move(name), k, w, std::nullopt}; }

// conv -> bn -> relu (-> pool)
void conv_block(std::vector<Layer>& ls, const std::string& tag, int ch, bool pool) {
  ls.push_back(conv("conv" + tag, ch));
  ls.push_back(absorb("bn" + tag, LayerKind::BatchNorm, ch));
  ls.push_back(absorb("relu" + tag, LayerKind::Activation, ch));
  if (pool) ls.push_back(absorb("pool" + tag, LayerKind::Pool, ch));
}

}  // namespace

std::string_view to_string(LayerKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw InvalidValue("unknown layer kind '" + std::string(s) + "'");
}

void NetworkModel::validate() const {
  if (layers.empty() || layers.front().kind != LayerKind::Input) {
    throw InvalidValue("network '" + name + "': first layer must be the input");
  }
  for (const auto& l : layers) {
    if (l.width < 1) throw InvalidValue("network '" + name + "': layer " + l.name + " has width < 1");
  }
  if (!(pruning_rate >= 0.0 && pruning_rate < 1.0)) {
    throw InvalidValue("network '" + name + "': pruning rate must be in [0,1)");
  }
  if (!(scale > 0.0 && scale <= 1.0)) throw InvalidValue("network '" + name + "': scale must be in (0,1]");
}

std::vector<std::size_t> NetworkModel::weights_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (is_weights_layer(layers[i].kind)) out.push_back(i);
  }
  return out;
}

bool NetworkModel::is_hidden(std::size_t layer_index) const {
  const auto w = weights_layers();
  return is_weights_layer(layers.at(layer_index).kind) && !w.empty() && layer_index != w.back();
}

int NetworkModel::effective_width(std::size_t layer_index) const {
  const auto& l = layers.at(layer_index);
  if (!is_hidden(layer_index)) return l.width;
  return std::max(1, static_cast<int>(std::lround(l.width * scale)));
}

std::int64_t NetworkModel::fan_in(std::size_t layer_index) const {
  // Nearest preceding layer that defines a width (input or weights-layer).
  std::int64_t in = 1;
  for (std::size_t i = layer_index; i-- > 0;) {
    if (layers[i].kind == LayerKind::Input || is_weights_layer(layers[i].kind)) {
      in = effective_width(i);
      break;
    }
  }
  const auto& l = layers.at(layer_index);
  if (l.kernel) in *= static_cast<std::int64_t>(l.kernel->first) * l.kernel->second;
  return in;
}

std::int64_t NetworkModel::weight_count(std::size_t layer_index) const {
  return fan_in(layer_index) * effective_width(layer_index);
}

std::int64_t NetworkModel::param_count() const {
  std::int64_t n = 0;
  for (auto i : weights_layers()) n += weight_count(i) + effective_width(i);
  return n;
}

std::int64_t NetworkModel::nonzero_param_count() const {
  std::int64_t n = 0;
  for (auto i : weights_layers()) {
    n += static_cast<std::int64_t>(std::ceil(static_cast<double>(weight_count(i)) * (1.0 - pruning_rate))) +
         effective_width(i);
  }
  return n;
}

bool NetworkModel::has_softmax() const {
  return std::any_of(layers.begin(), layers.end(), [](const Layer& l) { return l.kind == LayerKind::Softmax; });
}

Json NetworkModel::to_json() const {
  Json j{{"name", name}, {"pruning_rate", pruning_rate}, {"scale", scale}, {"layers", Json::array()}};
  for (const auto& l : layers) {
    Json lj{{"name", l.name}, {"kind", std::string(to_string(l.kind))}, {"width", l.width}};
    if (l.kernel) lj["kernel"] = Json::array({l.kernel->first, l.kernel->second});
    j["layers"].push_back(lj);
  }
  return j;
}

NetworkModel NetworkModel::from_json(const Json& j) {
  NetworkModel n;
  n.name = j.at("name").get<std::string>();
  n.pruning_rate = j.at("pruning_rate").get<double>();
  n.scale = j.at("scale").get<double>();
  for (const auto& lj : j.at("layers")) {
    Layer l;
    l.name = lj.at("name").get<std::string>();
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    l.width = lj.at("width").get<int>();
    if (lj.contains("kernel")) l.kernel = std::pair{lj["kernel"].at(0).get<int>(), lj["kernel"].at(1).get<int>()};
    n.layers.push_back(std::move(l));
  }
  n.validate();
  return n;
}

NetworkModel make_preset(std::string_view preset) {
  NetworkModel n;
  n.name = std::string(preset);
  auto& ls = n.layers;
  if (preset == "jet-dnn") {
    // 16 high-level jet features -> 64 -> 32 -> 32 -> 5 classes
    ls = {input(16),
          dense("fc1", 64), absorb("relu1", LayerKind::Activation, 64),
          dense("fc2", 32), absorb("relu2", LayerKind::Activation, 32),
          dense("fc3", 32), absorb("relu3", LayerKind::Activation, 32),
          dense("output", 5), absorb("softmax", LayerKind::Softmax, 5)};
  } else if (preset == "vgg7") {
    ls = {input(3)};
    conv_block(ls, "1", 16, false);
    conv_block(ls, "2", 16, true);
    conv_block(ls, "3", 32, false);
    conv_block(ls, "4", 32, true);
    conv_block(ls, "5", 64, false);
    conv_block(ls, "6", 64, true);
    ls.push_back(absorb("flatten", LayerKind::Flatten, 64));
    ls.push_back(dense("output", 10));
    ls.push_back(absorb("softmax", LayerKind::Softmax, 10));
  } else if (preset == "resnet9") {
    ls = {input(3)};
    conv_block(ls, "1", 16, false);
    conv_block(ls, "2", 32, true);
    conv_block(ls, "3", 32, false);
    conv_block(ls, "4", 32, false);
    conv_block(ls, "5", 64, true);
    conv_block(ls, "6", 128, true);
    conv_block(ls, "7", 128, false);
    conv_block(ls, "8", 128, true);
    ls.push_back(absorb("flatten", LayerKind::Flatten, 128));
    ls.push_back(dense("output", 10));
    ls.push_back(absorb("softmax", LayerKind::Softmax, 10));
  } else if (preset == "tiny-test") {
    ls = {input(4), dense("output", 3), absorb("softmax", LayerKind::Softmax, 3)};
  } else {
    throw UnknownPreset("unknown network preset '" + std::string(preset) + "'");
  }
  return n;
}

std::vector<std::string> preset_names() { return {"jet-dnn", "vgg7", "resnet9", "tiny-test"}; }

}  // namespace metaml::surrogate
