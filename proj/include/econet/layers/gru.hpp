#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "econet/layers/common.hpp"

namespace econet {

/// Gate order used by every per-gate array below.
enum GruGate : std::size_t { kUpdateGate = 0, kResetGate = 1, kCandidate = 2 };

/// GRU weights with separate input-side and recurrent-side biases.
///
///   z  = σ(x·W[z] + h·U[z] + b[z] + rb[z])
///   r  = σ(x·W[r] + h·U[r] + b[r] + rb[r])
///   h~ = tanh(x·W[c] + b[c] + r ⊙ (h·U[c] + rb[c]))
///   h' = (1 - z) ⊙ h + z ⊙ h~
///
/// With all rb terms zero this is the single-bias cell.
template <typename T>
struct GRUParams {
  std::array<Tensor<T>, 3> input_weights;      // (input_dim, units)
  std::array<Tensor<T>, 3> recurrent_weights;  // (units, units)
  std::array<Tensor<T>, 3> input_bias;         // (units)
  std::array<Tensor<T>, 3> recurrent_bias;     // (units)

  static GRUParams zeros(std::size_t input_dim, std::size_t units) {
    GRUParams p;
    for (std::size_t g = 0; g < 3; ++g) {
      p.input_weights[g] = Tensor<T>({input_dim, units});
      p.recurrent_weights[g] = Tensor<T>({units, units});
      p.input_bias[g] = Tensor<T>({units});
      p.recurrent_bias[g] = Tensor<T>({units});
    }
    return p;
  }
  std::size_t input_dim() const { return input_weights[0].dim(0); }
  std::size_t units() const { return input_weights[0].dim(1); }
  std::size_t parameter_count() const {
    return 3 * units() * (input_dim() + units() + 2);
  }
};

template <typename T>
struct GRUCache {
  Tensor<T> input;  // (B, T, I)
  // Per time step, each (B, units).
  std::vector<Tensor<T>> h_prev, update, reset, candidate, recurrent_candidate;
  CacheGuard guard;
};

template <typename T>
struct GRUGrads {
  Tensor<T> input;    // (B, T, I)
  Tensor<T> initial;  // (B, units)
  GRUParams<T> params;
};

/// Runs the cell over x (batch, time, input_dim) from initial state h0
/// (batch, units) and returns every hidden state, (batch, time, units).
template <typename T>
Forward<T, GRUCache<T>> gru_forward(const Tensor<T>& x, const GRUParams<T>& p,
                                    const Tensor<T>& h0);

/// Same, starting from the zero state.
template <typename T>
Forward<T, GRUCache<T>> gru_forward(const Tensor<T>& x, const GRUParams<T>& p) {
  return gru_forward(x, p, Tensor<T>({x.dim(0), p.units()}));
}

/// Backpropagation through time. dh_seq has the shape of the forward output.
template <typename T>
GRUGrads<T> gru_backward(GRUCache<T>& cache, const Tensor<T>& dh_seq, const GRUParams<T>& p);

}  // namespace econet
