#pragma once

#include <stdexcept>
#include <vector>

#include "lmpc/core/types.hpp"
#include "lmpc/value/critic.hpp"
#include "lmpc/value/normalizer.hpp"

namespace lmpc {

// Rewards, bootstrap means, per-step lambdas and the resulting returns of one
// imagined rollout. returns(H-1) == mus(H-1) exactly: the terminal step
// contributes its bootstrap value only.
struct ReturnTrace {
  Vec rewards;  // length H
  Vec mus;      // length H
  Vec lambdas;  // length H-1
  Vec returns;  // length H
};

// High normalized score -> small lambda (trust the bootstrap, truncate deep
// imagination); low score -> large lambda (keep looking ahead).
inline double lambda_gate(double norm_ucb, const ValueConfig& cfg) {
  return cfg.lambda_max - (cfg.lambda_max - cfg.lambda_min) * norm_ucb;
}

// Backward recursion
//   G_t = r_t + gamma * ((1 - lambda_t) * mu_{t+1} + lambda_t * G_{t+1}),
//   G_{H-1} = mu_{H-1}.
inline ReturnTrace lambda_return(const Vec& rewards, const Vec& mus,
                                 const Vec& lambdas, double gamma) {
  const int h = static_cast<int>(rewards.size());
  if (h < 1) throw std::invalid_argument("lambda_return: empty trace");
  if (mus.size() != h || lambdas.size() != h - 1)
    throw std::invalid_argument("lambda_return: length mismatch");
  ReturnTrace tr;
  tr.rewards = rewards;
  tr.mus = mus;
  tr.lambdas = lambdas;
  tr.returns = Vec(h);
  tr.returns(h - 1) = mus(h - 1);
  for (int t = h - 2; t >= 0; --t) {
    tr.returns(t) = rewards(t) + gamma * ((1.0 - lambdas(t)) * mus(t + 1) +
                                          lambdas(t) * tr.returns(t + 1));
  }
  return tr;
}

// Per-step uncertainty bookkeeping of a scored rollout. raw ucbs are kept so
// the caller can fold them into the live normalizer after the parallel phase.
struct ScoredTrace {
  Vec mus;
  Vec sigmas;
  Vec ucbs;
  Vec norm_ucbs;
  ReturnTrace trace;

  double score() const { return trace.returns(0); }
};

// The shared uncertainty-aware return: identical code path for planner
// candidate scoring and for learner targets, so the two are bit-identical on
// identical traces and normalizer snapshots.
inline ScoredTrace score_trace(const std::vector<Belief>& beliefs,
                               const Vec& rewards, const CriticEnsemble& ens,
                               const RunningNormalizer& snapshot,
                               const ValueConfig& cfg) {
  const int h = static_cast<int>(beliefs.size());
  if (rewards.size() != h)
    throw std::invalid_argument("score_trace: rewards/beliefs mismatch");
  ScoredTrace st;
  st.mus = Vec(h);
  st.sigmas = Vec(h);
  st.ucbs = Vec(h);
  st.norm_ucbs = Vec(h);
  for (int t = 0; t < h; ++t) {
    EnsembleMoments m = ensemble_moments(ens, beliefs[t]);
    st.mus(t) = m.mu;
    st.sigmas(t) = m.sigma;
    st.ucbs(t) = ucb(m, cfg.beta);
    st.norm_ucbs(t) = snapshot.normalize(st.ucbs(t));
  }
  Vec lambdas(std::max(0, h - 1));
  for (int t = 0; t + 1 < h; ++t) lambdas(t) = lambda_gate(st.norm_ucbs(t), cfg);
  st.trace = lambda_return(rewards, st.mus, lambdas, cfg.gamma);
  return st;
}

}  // namespace lmpc
