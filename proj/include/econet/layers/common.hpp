#pragma once

#include "econet/error.hpp"
#include "econet/tensor.hpp"

namespace econet {

enum class Mode { Train, Infer };

/// Tracks the one-shot use of a forward cache by its backward pass.
class CacheGuard {
 public:
  void consume(const char* layer) {
    if (consumed_) {
      throw ContractError(std::string(layer) +
                          ": backward called twice on the same forward cache");
    }
    consumed_ = true;
  }
  bool consumed() const noexcept { return consumed_; }

 private:
  bool consumed_ = false;
};

/// Output of a layer's forward pass together with what backward needs.
template <typename T, typename Cache>
struct Forward {
  Tensor<T> output;
  Cache cache;
};

}  // namespace econet
