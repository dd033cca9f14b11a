#pragma once

#include <cmath>
#include <vector>

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"
#include "lmpc/value/mlp.hpp"

namespace lmpc {

// Ensemble of independently parameterized value heads over beliefs.
struct CriticEnsemble {
  std::vector<Mlp> members;

  static CriticEnsemble make(int ensemble_size, int belief_dim,
                             const std::vector<int>& hidden,
                             const SeedSpec& seeds) {
    CriticEnsemble ens;
    std::vector<int> sizes;
    sizes.push_back(belief_dim);
    for (int h : hidden) sizes.push_back(h);
    sizes.push_back(1);
    for (int i = 0; i < ensemble_size; ++i) {
      RandomStream rs = derive_stream(seeds, "critic_init",
                                      {static_cast<std::uint64_t>(i)});
      ens.members.push_back(Mlp::make(sizes, rs));
    }
    return ens;
  }

  int size() const { return static_cast<int>(members.size()); }

  Vec evaluate(const Belief& belief) const {
    Vec s = belief.joint();
    Vec out(size());
    for (int i = 0; i < size(); ++i) out(i) = members[i].forward(s)(0);
    return out;
  }
};

// Ensemble mean and sample standard deviation (unbiased, divisor E-1).
struct EnsembleMoments {
  double mu = 0.0;
  double sigma = 0.0;
};

inline EnsembleMoments moments_of(const Vec& values) {
  const int e = static_cast<int>(values.size());
  EnsembleMoments m;
  m.mu = values.mean();
  double ss = (values.array() - m.mu).square().sum();
  m.sigma = e > 1 ? std::sqrt(ss / (e - 1)) : 0.0;
  return m;
}

inline EnsembleMoments ensemble_moments(const CriticEnsemble& ens,
                                        const Belief& belief) {
  return moments_of(ens.evaluate(belief));
}

// Optimism-weighted score: mean plus beta times ensemble dispersion.
inline double ucb(const EnsembleMoments& m, double beta) {
  return m.mu + beta * m.sigma;
}

}  // namespace lmpc
