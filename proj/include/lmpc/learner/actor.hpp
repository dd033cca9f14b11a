#pragma once

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"
#include "lmpc/model/rssm.hpp"
#include "lmpc/value/mlp.hpp"

namespace lmpc {

struct ActorSample {
  Vec action;      // squashed, inside bounds
  Vec pre_squash;  // the Gaussian draw that produced it
  double log_prob; // density of `action` under the squashed Gaussian
};

// Stochastic policy: an MLP emits per-dimension mean and raw scale of a
// Gaussian over pre-squash actions; tanh squashing maps into bounds with the
// usual log-det correction. The scale is floored so exploration never
// vanishes.
class ActorPrior {
 public:
  ActorPrior() = default;

  static ActorPrior make(int belief_dim, const std::vector<int>& hidden,
                         const ActionBounds& bounds, double noise_floor,
                         const SeedSpec& seeds);

  ActorSample sample(const Belief& belief, RandomStream& rs) const;
  Vec mean_action(const Belief& belief) const;  // squash of the Gaussian mean
  double log_prob(const Belief& belief, const Vec& pre_squash) const;
  double entropy(const Belief& belief) const;  // pre-squash Gaussian entropy

  // d log pi(pre_squash | belief) / d params, scaled and accumulated into g.
  // The squash correction does not depend on the parameters, so it drops out.
  void accumulate_logprob_grad(const Belief& belief, const Vec& pre_squash,
                               double scale, Mlp::Grads& g) const;
  void accumulate_entropy_grad(const Belief& belief, double scale,
                               Mlp::Grads& g) const;

  void apply_step(const Mlp::Grads& g, double scale) { net_.apply_step(g, scale); }
  Mlp::Grads zero_grads() const { return net_.zero_grads(); }

  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  const ActionBounds& bounds() const { return bounds_; }
  double noise_floor() const { return noise_floor_; }
  int action_dim() const { return bounds_.dim(); }

  void set_state(Mlp net, ActionBounds bounds, double floor) {
    net_ = std::move(net);
    bounds_ = std::move(bounds);
    noise_floor_ = floor;
  }

 private:
  struct Head {
    Vec mean;
    Vec std;
    Vec std_raw;
  };
  Head head(const Vec& input) const;
  Head head(const Vec& input, Mlp::Cache& cache) const;

  Mlp net_;
  ActionBounds bounds_;
  double noise_floor_ = 0.1;
};

// Actions obtained by rolling the actor through the model's prior dynamics
// from `belief`; the sequence used as the policy end of the policy-random
// mode initialization.
ActionSequence actor_rollout_actions(const RssmModel& m, const ActorPrior& actor,
                                     const Belief& belief, int horizon,
                                     RandomStream& rs);

}  // namespace lmpc
