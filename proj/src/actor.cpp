#include "lmpc/learner/actor.hpp"

#include <cmath>

namespace lmpc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double softplus(double x) {
  return x > 20.0 ? x : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 - tanh(u)^2), evaluated stably.
double log_sech2(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

}  // namespace

ActorPrior ActorPrior::make(int belief_dim, const std::vector<int>& hidden,
                            const ActionBounds& bounds, double noise_floor,
                            const SeedSpec& seeds) {
  ActorPrior a;
  std::vector<int> sizes;
  sizes.push_back(belief_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(2 * bounds.dim());
  RandomStream rs = derive_stream(seeds, "actor_init");
  a.net_ = Mlp::make(sizes, rs);
  a.bounds_ = bounds;
  a.noise_floor_ = noise_floor;
  return a;
}

ActorPrior::Head ActorPrior::head(const Vec& input) const {
  Vec out = net_.forward(input);
  const int d = bounds_.dim();
  Head h;
  h.mean = out.head(d);
  h.std_raw = out.tail(d);
  h.std = Vec(d);
  for (int i = 0; i < d; ++i) h.std(i) = noise_floor_ + softplus(h.std_raw(i));
  return h;
}

ActorPrior::Head ActorPrior::head(const Vec& input, Mlp::Cache& cache) const {
  Vec out = net_.forward(input, cache);
  const int d = bounds_.dim();
  Head h;
  h.mean = out.head(d);
  h.std_raw = out.tail(d);
  h.std = Vec(d);
  for (int i = 0; i < d; ++i) h.std(i) = noise_floor_ + softplus(h.std_raw(i));
  return h;
}

ActorSample ActorPrior::sample(const Belief& belief, RandomStream& rs) const {
  Head hd = head(belief.joint());
  const int d = bounds_.dim();
  Vec u = hd.mean + hd.std.cwiseProduct(rs.normal_vec(d));
  ActorSample s;
  s.pre_squash = u;
  s.action = bounds_.center() +
             0.5 * bounds_.range().cwiseProduct(Vec(u.array().tanh()));
  s.log_prob = log_prob(belief, u);
  return s;
}

Vec ActorPrior::mean_action(const Belief& belief) const {
  Head hd = head(belief.joint());
  return bounds_.center() +
         0.5 * bounds_.range().cwiseProduct(Vec(hd.mean.array().tanh()));
}

double ActorPrior::log_prob(const Belief& belief, const Vec& u) const {
  Head hd = head(belief.joint());
  double lp = 0.0;
  for (int i = 0; i < bounds_.dim(); ++i) {
    double r = (u(i) - hd.mean(i)) / hd.std(i);
    lp += -0.5 * kLog2Pi - std::log(hd.std(i)) - 0.5 * r * r;
    // change of variables through a = c + 0.5*range*tanh(u)
    lp -= std::log(0.5 * bounds_.range()(i)) + log_sech2(u(i));
  }
  return lp;
}

double ActorPrior::entropy(const Belief& belief) const {
  Head hd = head(belief.joint());
  double ent = 0.0;
  for (int i = 0; i < bounds_.dim(); ++i)
    ent += 0.5 * (1.0 + kLog2Pi) + std::log(hd.std(i));
  return ent;
}

void ActorPrior::accumulate_logprob_grad(const Belief& belief, const Vec& u,
                                         double scale, Mlp::Grads& g) const {
  Mlp::Cache cache;
  Head hd = head(belief.joint(), cache);
  const int d = bounds_.dim();
  Vec dout = Vec::Zero(2 * d);
  for (int i = 0; i < d; ++i) {
    double z = (u(i) - hd.mean(i)) / hd.std(i);
    double dmean = z / hd.std(i);
    double dstd = (z * z - 1.0) / hd.std(i);
    dout(i) = scale * dmean;
    dout(d + i) = scale * dstd * sigmoid(hd.std_raw(i));
  }
  net_.backward(cache, dout, g);
}

void ActorPrior::accumulate_entropy_grad(const Belief& belief, double scale,
                                         Mlp::Grads& g) const {
  Mlp::Cache cache;
  Head hd = head(belief.joint(), cache);
  const int d = bounds_.dim();
  Vec dout = Vec::Zero(2 * d);
  for (int i = 0; i < d; ++i)
    dout(d + i) = scale * (1.0 / hd.std(i)) * sigmoid(hd.std_raw(i));
  net_.backward(cache, dout, g);
}

ActionSequence actor_rollout_actions(const RssmModel& m, const ActorPrior& actor,
                                     const Belief& belief, int horizon,
                                     RandomStream& rs) {
  ActionSequence actions(actor.action_dim(), horizon);
  Belief b = belief;
  for (int t = 0; t < horizon; ++t) {
    ActorSample s = actor.sample(b, rs);
    actions.col(t) = s.action;
    Vec h = transition_step(m, b.h, b.z, s.action);
    DiagGaussian pz = prior_stats(m, h);
    Vec z = pz.mean + pz.std.cwiseProduct(rs.normal_vec(m.d_z));
    b = Belief{h, z};
  }
  return actions;
}

}  // namespace lmpc
