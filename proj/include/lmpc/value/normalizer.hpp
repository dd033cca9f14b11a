#pragma once

#include <algorithm>
#include <cmath>

namespace lmpc {

// Exponential-moving z-score squashed into [0,1]. Statistics are fed from
// imagined-rollout scores only; normalize() itself is pure so a copied
// snapshot can serve an entire planning call (single writer, stale readers).
class RunningNormalizer {
 public:
  explicit RunningNormalizer(double decay = 0.99)
      : decay_(decay) {}

  // (z + 3)/6 maps +-3 sigma onto [0,1]; outside that band the output clamps.
  double normalize(double raw) const {
    double z = (raw - ema_mean_) / std::sqrt(ema_var_ + 1e-8);
    return std::clamp((z + 3.0) / 6.0, 0.0, 1.0);
  }

  void update(double raw) {
    double delta = raw - ema_mean_;
    ema_mean_ = decay_ * ema_mean_ + (1.0 - decay_) * raw;
    ema_var_ = decay_ * ema_var_ + (1.0 - decay_) * delta * delta;
  }

  double ema_mean() const { return ema_mean_; }
  double ema_var() const { return ema_var_; }
  double decay() const { return decay_; }

  void restore(double mean, double var) {
    ema_mean_ = mean;
    ema_var_ = var;
  }

 private:
  double decay_;
  double ema_mean_ = 0.0;
  double ema_var_ = 1.0;
};

}  // namespace lmpc
