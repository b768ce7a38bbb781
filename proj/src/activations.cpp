#include "econet/activations.hpp"

#include "econet/error.hpp"

namespace econet {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Softmax: return "softmax";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "softmax") return Activation::Softmax;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace econet
