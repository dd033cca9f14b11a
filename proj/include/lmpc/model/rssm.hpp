#pragma once

#include <optional>
#include <vector>

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"

namespace lmpc {

struct DiagGaussian {
  Vec mean;
  Vec std;  // strictly positive
};

// Latent state-space model with deterministic memory and stochastic latent:
//
//   h_{t+1} = act(A h_t + B z_t + C a_t + b_h)        act: identity | tanh
//   z_t     ~ N(W h_t + b_p, diag exp(2 ls_p))        latent prior
//   o_t     ~ N(D [h_t; z_t] + b_d, diag exp(2 ls_d)) observation decoder
//   r_t     ~ N(r_mean(h_t, z_t), 1)                  reward head
//   z_t     ~ N(E [h_t; o_t] + b_e, diag exp(2 ls_e)) posterior encoder
//
// With act = identity and a linear reward head this is the linear-Gaussian
// family, for which the conditional evidence is available in closed form
// (exact_evidence below). With act = tanh and a one-hidden-layer reward head
// it is the small nonlinear family.
struct RssmModel {
  int d_h = 0, d_z = 0, d_a = 0, d_obs = 0;
  bool tanh_transition = false;
  bool hidden_reward = false;

  Mat A, B, C;
  Vec b_h;
  Mat W;
  Vec b_p, ls_p;
  Mat D;
  Vec b_d, ls_d;
  // reward head: linear  r_mean = u . [h;z] + b_r
  //              hidden  r_mean = u . tanh(P [h;z] + q) + b_r
  Mat P;
  Vec q;
  Vec u;
  double b_r = 0.0;
  Mat E;
  Vec b_e, ls_e;

  bool linear_gaussian() const { return !tanh_transition && !hidden_reward; }
  Belief initial_belief() const;  // h = 0, z = 0
};

Vec transition_step(const RssmModel& m, const Vec& h, const Vec& z,
                    const Vec& a);
DiagGaussian prior_stats(const RssmModel& m, const Vec& h);
DiagGaussian posterior_stats(const RssmModel& m, const Vec& h, const Vec& o);
DiagGaussian decode_stats(const RssmModel& m, const Vec& h, const Vec& z);
double reward_mean(const RssmModel& m, const Vec& h, const Vec& z);

// A logged interaction fragment: observations o_0..o_T (possibly withheld),
// actions a_0..a_{T-1}, and optionally rewards r_0..r_T (empty = no reward
// channel).
struct Sequence {
  std::vector<std::optional<Vec>> obs;
  std::vector<Vec> actions;
  std::vector<double> rewards;

  int steps() const { return static_cast<int>(obs.size()); }  // T+1
  bool has_rewards() const { return !rewards.empty(); }
  void validate(const RssmModel& m) const;
};

// Filtering pass: h_0 = 0; z_t from the posterior where o_t is present, from
// the prior where it is withheld; h advances through the transition. Returns
// beliefs at t = 0..T. Draws d_z normals per step from `rs`.
std::vector<Belief> posterior_filter(const RssmModel& m, const Sequence& seq,
                                     RandomStream& rs);

// One belief-update step of the same filter (online form).
Belief filter_step(const RssmModel& m, const Belief& prev, const Vec& action,
                   const std::optional<Vec>& obs, RandomStream& rs);
Belief filter_init(const RssmModel& m, const std::optional<Vec>& obs,
                   RandomStream& rs);

// Imagined rollout under the prior: beliefs[t] is the state after applying
// actions 0..t, rewards(t) the reward mean it emits.
struct LatentTrajectory {
  std::vector<Belief> beliefs;  // length H
  Vec rewards;                  // length H
};

LatentTrajectory prior_rollout(const RssmModel& m, const Belief& start,
                               const ActionSequence& actions, RandomStream& rs);

struct ElboResult {
  double value = 0.0;
  double mc_se = 0.0;
  Vec samples;      // per-sample estimates
  double min_kl = 0.0;  // smallest per-step KL term seen (>= 0 analytically)
};

// Monte-Carlo evidence lower bound: analytic diagonal-Gaussian KL per step,
// reconstruction and reward log-densities under reparameterized posterior
// samples. Consumes n_samples * (T+1) * d_z normals.
ElboResult elbo(const RssmModel& m, const Sequence& seq, int n_samples,
                RandomStream& rs);

// log p(o_{0:T} [, r_{0:T}] | a_{0:T-1}) for the linear-Gaussian family,
// by stacking latents into one joint Gaussian and marginalizing. Requires a
// fully observed sequence; throws on a singular joint covariance.
double exact_evidence(const RssmModel& m, const Sequence& seq);

// Exact conditional p(z | h, o) for the linear-Gaussian family via
// information-form conditioning. Returns the full covariance.
struct ConditionalGaussian {
  Vec mean;
  Mat cov;
};
ConditionalGaussian exact_conditional(const RssmModel& m, const Vec& h,
                                      const Vec& o);

// Overwrites the encoder with the affine map of the exact conditional mean
// and the diagonal of its covariance. The encoder family is exactly the
// conditional when that covariance is diagonal.
void set_exact_conditional_encoder(RssmModel& m);

// Gradient of the Monte-Carlo ELBO with respect to every parameter, by
// reverse sweep through the unrolled filter (reparameterized samples).
struct RssmGrads {
  Mat A, B, C;
  Vec b_h;
  Mat W;
  Vec b_p, ls_p;
  Mat D;
  Vec b_d, ls_d;
  Mat P;
  Vec q;
  Vec u;
  double b_r = 0.0;
  Mat E;
  Vec b_e, ls_e;
};

struct ElboGradResult {
  ElboResult elbo;
  RssmGrads grads;
};

ElboGradResult elbo_with_gradient(const RssmModel& m, const Sequence& seq,
                                  int n_samples, RandomStream& rs);

RssmGrads zero_grads(const RssmModel& m);
void accumulate(RssmGrads& acc, const RssmGrads& g, double scale);
void apply_step(RssmModel& m, const RssmGrads& g, double scale);

// Flat parameter vector (fixed ordering shared with flatten_grads); used by
// finite-difference checks and serialization-free snapshots.
int param_count(const RssmModel& m);
Vec flatten_params(const RssmModel& m);
void unflatten_params(RssmModel& m, const Vec& p);
Vec flatten_grads(const RssmModel& m, const RssmGrads& g);

// Randomly parameterized instance; `spread` scales all weight magnitudes.
RssmModel make_random_model(int d_h, int d_z, int d_a, int d_obs,
                            bool tanh_transition, bool hidden_reward,
                            RandomStream& rs, double spread = 0.5);

}  // namespace lmpc
