#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace lmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One action per column; column t is the action applied at plan depth t.
using ActionSequence = Mat;

// Per-component action interval. Planner samples are clipped into it and the
// actor squashes into it, so every executed action satisfies lo <= a <= hi.
struct ActionBounds {
  Vec lo;
  Vec hi;

  static ActionBounds symmetric(int dim, double limit = 1.0) {
    ActionBounds b;
    b.lo = Vec::Constant(dim, -limit);
    b.hi = Vec::Constant(dim, limit);
    return b;
  }

  int dim() const { return static_cast<int>(lo.size()); }
  Vec range() const { return hi - lo; }
  Vec center() const { return 0.5 * (lo + hi); }

  bool contains(const Vec& a, double tol = 0.0) const {
    return (a.array() >= lo.array() - tol).all() &&
           (a.array() <= hi.array() + tol).all();
  }
};

inline Vec clip_action(const Vec& a, const ActionBounds& b) {
  return a.cwiseMax(b.lo).cwiseMin(b.hi);
}

// Clamps every action of the sequence into bounds; identity for sequences
// already inside. Idempotent.
inline ActionSequence clip_actions(const ActionSequence& seq,
                                   const ActionBounds& b) {
  ActionSequence out = seq;
  for (Eigen::Index t = 0; t < out.cols(); ++t) {
    out.col(t) = clip_action(out.col(t), b);
  }
  return out;
}

// Filtered latent state: deterministic memory h plus stochastic latent z.
struct Belief {
  Vec h;
  Vec z;

  Vec joint() const {
    Vec s(h.size() + z.size());
    s << h, z;
    return s;
  }

  bool all_finite() const { return h.allFinite() && z.allFinite(); }
};

struct PlannerConfig {
  int H = 15;              // planning horizon
  int M = 4;               // proposal modes
  int K = 256;             // candidates per mode
  int L = 6;               // refinement iterations
  double tau = 0.5;        // softmax temperature
  double delta = 1e-6;     // score-normalization stabilizer
  double epsilon = 1e-4;   // covariance floor
  double sigma_init_fraction = 0.5;  // initial stddev as fraction of range
  double blend_weight = 0.3;         // pull toward fresh init after warm start
  std::vector<double> alpha_schedule;  // policy-random mixing per mode

  // Evenly spaced from pure policy (1) down to pure random (0).
  static std::vector<double> default_alphas(int modes) {
    std::vector<double> a(modes);
    for (int m = 0; m < modes; ++m) {
      a[m] = modes == 1 ? 1.0
                        : 1.0 - static_cast<double>(m) / (modes - 1);
    }
    return a;
  }

  void validate() const {
    if (H < 1) throw std::invalid_argument("planner.H must be >= 1");
    if (M < 1) throw std::invalid_argument("planner.M must be >= 1");
    if (K < 2) throw std::invalid_argument("planner.K must be >= 2");
    if (L < 1) throw std::invalid_argument("planner.L must be >= 1");
    if (!(tau > 0)) throw std::invalid_argument("planner.tau must be > 0");
    if (!(delta > 0)) throw std::invalid_argument("planner.delta must be > 0");
    if (!(epsilon > 0))
      throw std::invalid_argument("planner.epsilon must be > 0");
    if (static_cast<int>(alpha_schedule.size()) != M)
      throw std::invalid_argument("planner.alpha_schedule needs M entries");
    for (double a : alpha_schedule) {
      if (a < 0.0 || a > 1.0)
        throw std::invalid_argument("alpha_schedule entries must be in [0,1]");
    }
  }
};

struct ValueConfig {
  int E = 5;                // critic ensemble size
  double beta = 1.0;        // optimism coefficient
  double lambda_min = 0.6;
  double lambda_max = 0.95;
  double gamma = 0.99;

  void validate() const {
    if (E < 2) throw std::invalid_argument("value.E must be >= 2");
    if (beta < 0) throw std::invalid_argument("value.beta must be >= 0");
    if (!(0.0 <= lambda_min && lambda_min <= lambda_max && lambda_max <= 1.0))
      throw std::invalid_argument("need 0 <= lambda_min <= lambda_max <= 1");
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("value.gamma must be in (0,1]");
  }
};

}  // namespace lmpc
