#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ince/rng.hpp"

namespace ince {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Linear {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

// Affine stack with tanh between layers and a linear output. Forward caches
// layer inputs so backward can return exact gradients of a scalar loss.
struct Mlp {
  std::vector<Linear> layers;
  bool tanh_output = false;  // squash the final layer too (latent encoders)

  static Mlp make(const std::vector<int>& dims, RngStream& rng);

  int in_dim() const { return layers.front().in; }
  int out_dim() const { return layers.back().out; }
  size_t param_count() const;
};

struct MlpCache {
  // inputs[i] feeds layer i; inputs.back() is the network output
  std::vector<std::vector<double>> inputs;
};

struct MlpGrads {
  std::vector<Linear> layers;  // same shapes, gradient accumulators

  static MlpGrads zeros_like(const Mlp& net);
  void add_scaled(const MlpGrads& other, double scale);
  void scale(double s);
  bool finite() const;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x,
                                MlpCache* cache = nullptr);

// dL/dx given dL/dy; accumulates parameter gradients into `grads`.
std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> dout,
                                 MlpGrads& grads);

// Plain gradient descent with momentum.
struct SgdMomentum {
  double learning_rate = 3e-4;
  double momentum = 0.9;
  std::vector<Linear> velocity;

  void init_like(const Mlp& net);
  void step(Mlp& net, const MlpGrads& grads);
};

// flat views used by checkpoints
std::vector<double> flatten(const Mlp& net);
void unflatten(Mlp& net, std::span<const double> flat);

}  // namespace ince
