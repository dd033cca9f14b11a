#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <vector>

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"

namespace lmpc {

// Dense feed-forward approximator, tanh hidden units, linear output.
// Forward and backward passes are hand-written; the backward pass is checked
// against central finite differences in the test suite.
struct Mlp {
  std::vector<Mat> W;
  std::vector<Vec> b;

  struct Cache {
    std::vector<Vec> inputs;  // inputs[l] = activation entering layer l
    std::vector<Vec> pre;     // pre[l] = W[l]*inputs[l] + b[l]
  };

  struct Grads {
    std::vector<Mat> dW;
    std::vector<Vec> db;
  };

  static Mlp make(const std::vector<int>& sizes, RandomStream& rs) {
    assert(sizes.size() >= 2);
    Mlp m;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Mat w(sizes[l + 1], sizes[l]);
      double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = scale * rs.normal();
      m.W.push_back(std::move(w));
      m.b.push_back(Vec::Zero(sizes[l + 1]));
    }
    return m;
  }

  int layer_count() const { return static_cast<int>(W.size()); }
  int input_dim() const { return static_cast<int>(W.front().cols()); }
  int output_dim() const { return static_cast<int>(W.back().rows()); }

  Vec forward(const Vec& x) const {
    Vec a = x;
    for (int l = 0; l < layer_count(); ++l) {
      Vec z = W[l] * a + b[l];
      a = (l + 1 < layer_count()) ? Vec(z.array().tanh()) : z;
    }
    return a;
  }

  Vec forward(const Vec& x, Cache& cache) const {
    cache.inputs.assign(1, x);
    cache.pre.clear();
    Vec a = x;
    for (int l = 0; l < layer_count(); ++l) {
      Vec z = W[l] * a + b[l];
      cache.pre.push_back(z);
      a = (l + 1 < layer_count()) ? Vec(z.array().tanh()) : z;
      if (l + 1 < layer_count()) cache.inputs.push_back(a);
    }
    return a;
  }

  Grads zero_grads() const {
    Grads g;
    for (int l = 0; l < layer_count(); ++l) {
      g.dW.push_back(Mat::Zero(W[l].rows(), W[l].cols()));
      g.db.push_back(Vec::Zero(b[l].size()));
    }
    return g;
  }

  // Accumulates d(loss)/d(params) into g given d(loss)/d(output); returns
  // d(loss)/d(input).
  Vec backward(const Cache& cache, const Vec& dout, Grads& g) const {
    Vec delta = dout;
    for (int l = layer_count() - 1; l >= 0; --l) {
      if (l + 1 < layer_count()) {
        // delta arrived at the tanh output of layer l
        delta = delta.cwiseProduct(
            Vec(1.0 - cache.pre[l].array().tanh().square()));
      }
      g.dW[l] += delta * cache.inputs[l].transpose();
      g.db[l] += delta;
      if (l > 0) delta = W[l].transpose() * delta;
      else return W[0].transpose() * delta;
    }
    return delta;  // unreachable
  }

  void apply_step(const Grads& g, double scale) {
    for (int l = 0; l < layer_count(); ++l) {
      W[l] += scale * g.dW[l];
      b[l] += scale * g.db[l];
    }
  }

  int param_count() const {
    int n = 0;
    for (int l = 0; l < layer_count(); ++l)
      n += static_cast<int>(W[l].size() + b[l].size());
    return n;
  }

  Vec flatten() const {
    Vec p(param_count());
    int k = 0;
    for (int l = 0; l < layer_count(); ++l) {
      for (Eigen::Index j = 0; j < W[l].cols(); ++j)
        for (Eigen::Index i = 0; i < W[l].rows(); ++i) p(k++) = W[l](i, j);
      for (Eigen::Index i = 0; i < b[l].size(); ++i) p(k++) = b[l](i);
    }
    return p;
  }

  void unflatten(const Vec& p) {
    int k = 0;
    for (int l = 0; l < layer_count(); ++l) {
      for (Eigen::Index j = 0; j < W[l].cols(); ++j)
        for (Eigen::Index i = 0; i < W[l].rows(); ++i) W[l](i, j) = p(k++);
      for (Eigen::Index i = 0; i < b[l].size(); ++i) b[l](i) = p(k++);
    }
    assert(k == param_count());
  }

  Vec flatten_grads(const Grads& g) const {
    Vec p(param_count());
    int k = 0;
    for (int l = 0; l < layer_count(); ++l) {
      for (Eigen::Index j = 0; j < W[l].cols(); ++j)
        for (Eigen::Index i = 0; i < W[l].rows(); ++i) p(k++) = g.dW[l](i, j);
      for (Eigen::Index i = 0; i < g.db[l].size(); ++i) p(k++) = g.db[l](i);
    }
    return p;
  }
};

}  // namespace lmpc
