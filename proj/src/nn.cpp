#include "ince/nn.hpp"

#include <cmath>

namespace ince {

Mlp Mlp::make(const std::vector<int>& dims, RngStream& rng) {
  if (dims.size() < 2) throw NumericError("Mlp::make: need at least two dims");
  Mlp net;
  net.layers.resize(dims.size() - 1);
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    Linear& l = net.layers[i];
    l.in = dims[i];
    l.out = dims[i + 1];
    l.w.resize(static_cast<size_t>(l.in) * l.out);
    l.b.assign(l.out, 0.0);
    const double limit = std::sqrt(6.0 / (l.in + l.out));
    for (double& v : l.w) v = rng.uniform(-limit, limit);
  }
  return net;
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  g.layers.resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    g.layers[i].in = net.layers[i].in;
    g.layers[i].out = net.layers[i].out;
    g.layers[i].w.assign(net.layers[i].w.size(), 0.0);
    g.layers[i].b.assign(net.layers[i].b.size(), 0.0);
  }
  return g;
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
  for (size_t i = 0; i < layers.size(); ++i) {
    for (size_t j = 0; j < layers[i].w.size(); ++j) {
      layers[i].w[j] += scale * other.layers[i].w[j];
    }
    for (size_t j = 0; j < layers[i].b.size(); ++j) {
      layers[i].b[j] += scale * other.layers[i].b[j];
    }
  }
}

void MlpGrads::scale(double s) {
  for (auto& l : layers) {
    for (double& v : l.w) v *= s;
    for (double& v : l.b) v *= s;
  }
}

bool MlpGrads::finite() const {
  for (const auto& l : layers) {
    for (double v : l.w) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x,
                                MlpCache* cache) {
  if (static_cast<int>(x.size()) != net.in_dim()) {
    throw NumericError("mlp_forward: input size mismatch");
  }
  std::vector<double> cur(x.begin(), x.end());
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(net.layers.size() + 1);
  }
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Linear& l = net.layers[i];
    if (cache) cache->inputs.push_back(cur);
    std::vector<double> next(l.out, 0.0);
    for (int r = 0; r < l.out; ++r) {
      double acc = l.b[r];
      const double* row = &l.w[static_cast<size_t>(r) * l.in];
      for (int c = 0; c < l.in; ++c) acc += row[c] * cur[c];
      next[r] = acc;
    }
    if (i + 1 < net.layers.size() || net.tanh_output) {
      for (double& v : next) v = std::tanh(v);
    }
    cur = std::move(next);
  }
  if (cache) cache->inputs.push_back(cur);
  return cur;
}

std::vector<double> mlp_backward(const Mlp& net, const MlpCache& cache,
                                 std::span<const double> dout,
                                 MlpGrads& grads) {
  std::vector<double> dcur(dout.begin(), dout.end());
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Linear& l = net.layers[i];
    const auto& x = cache.inputs[i];
    if (i + 1 < static_cast<int>(net.layers.size()) || net.tanh_output) {
      // undo the tanh on this layer's output
      const auto& y = cache.inputs[i + 1];
      for (int r = 0; r < l.out; ++r) dcur[r] *= 1.0 - y[r] * y[r];
    }
    std::vector<double> dx(l.in, 0.0);
    Linear& gl = grads.layers[i];
    for (int r = 0; r < l.out; ++r) {
      gl.b[r] += dcur[r];
      const double* row = &l.w[static_cast<size_t>(r) * l.in];
      double* grow = &gl.w[static_cast<size_t>(r) * l.in];
      for (int c = 0; c < l.in; ++c) {
        grow[c] += dcur[r] * x[c];
        dx[c] += dcur[r] * row[c];
      }
    }
    dcur = std::move(dx);
  }
  return dcur;
}

void SgdMomentum::init_like(const Mlp& net) {
  velocity.resize(net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    velocity[i].in = net.layers[i].in;
    velocity[i].out = net.layers[i].out;
    velocity[i].w.assign(net.layers[i].w.size(), 0.0);
    velocity[i].b.assign(net.layers[i].b.size(), 0.0);
  }
}

void SgdMomentum::step(Mlp& net, const MlpGrads& grads) {
  if (velocity.size() != net.layers.size()) init_like(net);
  for (size_t i = 0; i < net.layers.size(); ++i) {
    for (size_t j = 0; j < net.layers[i].w.size(); ++j) {
      velocity[i].w[j] = momentum * velocity[i].w[j] + grads.layers[i].w[j];
      net.layers[i].w[j] -= learning_rate * velocity[i].w[j];
    }
    for (size_t j = 0; j < net.layers[i].b.size(); ++j) {
      velocity[i].b[j] = momentum * velocity[i].b[j] + grads.layers[i].b[j];
      net.layers[i].b[j] -= learning_rate * velocity[i].b[j];
    }
  }
}

std::vector<double> flatten(const Mlp& net) {
  std::vector<double> flat;
  flat.reserve(net.param_count());
  for (const auto& l : net.layers) {
    flat.insert(flat.end(), l.w.begin(), l.w.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

void unflatten(Mlp& net, std::span<const double> flat) {
  if (flat.size() != net.param_count()) {
    throw NumericError("unflatten: size mismatch");
  }
  size_t off = 0;
  for (auto& l : net.layers) {
    std::copy(flat.begin() + off, flat.begin() + off + l.w.size(),
              l.w.begin());
    off += l.w.size();
    std::copy(flat.begin() + off, flat.begin() + off + l.b.size(),
              l.b.begin());
    off += l.b.size();
  }
}

}  // namespace ince
