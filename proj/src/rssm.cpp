#include "lmpc/model/rssm.hpp"

#include <cmath>
#include <stdexcept>

namespace lmpc {

namespace {

Vec joint_hz(const Vec& h, const Vec& z) {
  Vec s(h.size() + z.size());
  s << h, z;
  return s;
}

Vec joint_ho(const Vec& h, const Vec& o) {
  Vec s(h.size() + o.size());
  s << h, o;
  return s;
}

}  // namespace

Belief RssmModel::initial_belief() const {
  return Belief{Vec::Zero(d_h), Vec::Zero(d_z)};
}

Vec transition_step(const RssmModel& m, const Vec& h, const Vec& z,
                    const Vec& a) {
  Vec pre = m.A * h + m.B * z + m.C * a + m.b_h;
  return m.tanh_transition ? Vec(pre.array().tanh()) : pre;
}

DiagGaussian prior_stats(const RssmModel& m, const Vec& h) {
  return {m.W * h + m.b_p, m.ls_p.array().exp()};
}

DiagGaussian posterior_stats(const RssmModel& m, const Vec& h, const Vec& o) {
  return {m.E * joint_ho(h, o) + m.b_e, m.ls_e.array().exp()};
}

DiagGaussian decode_stats(const RssmModel& m, const Vec& h, const Vec& z) {
  return {m.D * joint_hz(h, z) + m.b_d, m.ls_d.array().exp()};
}

double reward_mean(const RssmModel& m, const Vec& h, const Vec& z) {
  Vec s = joint_hz(h, z);
  if (m.hidden_reward) {
    Vec t = (m.P * s + m.q).array().tanh();
    return m.u.dot(t) + m.b_r;
  }
  return m.u.dot(s) + m.b_r;
}

void Sequence::validate(const RssmModel& m) const {
  if (obs.empty()) throw std::invalid_argument("sequence: no observations");
  if (actions.size() + 1 != obs.size())
    throw std::invalid_argument("sequence: need T actions for T+1 observations");
  if (has_rewards() && rewards.size() != obs.size())
    throw std::invalid_argument("sequence: rewards length mismatch");
  for (const auto& o : obs) {
    if (o && o->size() != m.d_obs)
      throw std::invalid_argument("sequence: observation dimension mismatch");
  }
  for (const auto& a : actions) {
    if (a.size() != m.d_a)
      throw std::invalid_argument("sequence: action dimension mismatch");
  }
}

Belief filter_init(const RssmModel& m, const std::optional<Vec>& obs,
                   RandomStream& rs) {
  Vec h0 = Vec::Zero(m.d_h);
  DiagGaussian g = obs ? posterior_stats(m, h0, *obs) : prior_stats(m, h0);
  Vec z = g.mean + g.std.cwiseProduct(rs.normal_vec(m.d_z));
  return Belief{h0, z};
}

Belief filter_step(const RssmModel& m, const Belief& prev, const Vec& action,
                   const std::optional<Vec>& obs, RandomStream& rs) {
  Vec h = transition_step(m, prev.h, prev.z, action);
  DiagGaussian g = obs ? posterior_stats(m, h, *obs) : prior_stats(m, h);
  Vec z = g.mean + g.std.cwiseProduct(rs.normal_vec(m.d_z));
  return Belief{h, z};
}

std::vector<Belief> posterior_filter(const RssmModel& m, const Sequence& seq,
                                     RandomStream& rs) {
  seq.validate(m);
  std::vector<Belief> beliefs;
  beliefs.reserve(seq.steps());
  beliefs.push_back(filter_init(m, seq.obs[0], rs));
  for (std::size_t t = 0; t < seq.actions.size(); ++t) {
    beliefs.push_back(
        filter_step(m, beliefs.back(), seq.actions[t], seq.obs[t + 1], rs));
  }
  return beliefs;
}

LatentTrajectory prior_rollout(const RssmModel& m, const Belief& start,
                               const ActionSequence& actions,
                               RandomStream& rs) {
  const int horizon = static_cast<int>(actions.cols());
  LatentTrajectory traj;
  traj.beliefs.reserve(horizon);
  traj.rewards = Vec(horizon);
  Vec h = start.h;
  Vec z = start.z;
  for (int t = 0; t < horizon; ++t) {
    h = transition_step(m, h, z, actions.col(t));
    DiagGaussian g = prior_stats(m, h);
    z = g.mean + g.std.cwiseProduct(rs.normal_vec(m.d_z));
    traj.beliefs.push_back(Belief{h, z});
    traj.rewards(t) = reward_mean(m, h, z);
  }
  return traj;
}

RssmGrads zero_grads(const RssmModel& m) {
  RssmGrads g;
  g.A = Mat::Zero(m.A.rows(), m.A.cols());
  g.B = Mat::Zero(m.B.rows(), m.B.cols());
  g.C = Mat::Zero(m.C.rows(), m.C.cols());
  g.b_h = Vec::Zero(m.b_h.size());
  g.W = Mat::Zero(m.W.rows(), m.W.cols());
  g.b_p = Vec::Zero(m.b_p.size());
  g.ls_p = Vec::Zero(m.ls_p.size());
  g.D = Mat::Zero(m.D.rows(), m.D.cols());
  g.b_d = Vec::Zero(m.b_d.size());
  g.ls_d = Vec::Zero(m.ls_d.size());
  if (m.hidden_reward) {
    g.P = Mat::Zero(m.P.rows(), m.P.cols());
    g.q = Vec::Zero(m.q.size());
  }
  g.u = Vec::Zero(m.u.size());
  g.b_r = 0.0;
  g.E = Mat::Zero(m.E.rows(), m.E.cols());
  g.b_e = Vec::Zero(m.b_e.size());
  g.ls_e = Vec::Zero(m.ls_e.size());
  return g;
}

void accumulate(RssmGrads& acc, const RssmGrads& g, double scale) {
  acc.A += scale * g.A;
  acc.B += scale * g.B;
  acc.C += scale * g.C;
  acc.b_h += scale * g.b_h;
  acc.W += scale * g.W;
  acc.b_p += scale * g.b_p;
  acc.ls_p += scale * g.ls_p;
  acc.D += scale * g.D;
  acc.b_d += scale * g.b_d;
  acc.ls_d += scale * g.ls_d;
  if (g.P.size() > 0) {
    acc.P += scale * g.P;
    acc.q += scale * g.q;
  }
  acc.u += scale * g.u;
  acc.b_r += scale * g.b_r;
  acc.E += scale * g.E;
  acc.b_e += scale * g.b_e;
  acc.ls_e += scale * g.ls_e;
}

void apply_step(RssmModel& m, const RssmGrads& g, double scale) {
  m.A += scale * g.A;
  m.B += scale * g.B;
  m.C += scale * g.C;
  m.b_h += scale * g.b_h;
  m.W += scale * g.W;
  m.b_p += scale * g.b_p;
  m.ls_p += scale * g.ls_p;
  m.D += scale * g.D;
  m.b_d += scale * g.b_d;
  m.ls_d += scale * g.ls_d;
  if (m.hidden_reward) {
    m.P += scale * g.P;
    m.q += scale * g.q;
  }
  m.u += scale * g.u;
  m.b_r += scale * g.b_r;
  m.E += scale * g.E;
  m.b_e += scale * g.b_e;
  m.ls_e += scale * g.ls_e;
}

namespace {

// Fixed traversal order shared by flatten/unflatten; b_r is appended last.
template <typename Model>
auto mat_fields(Model& m) {
  std::vector<decltype(&m.A)> f = {&m.A, &m.B, &m.C, &m.W, &m.D, &m.E};
  if (m.P.size() > 0) f.push_back(&m.P);
  return f;
}

template <typename Model>
auto vec_fields(Model& m) {
  std::vector<decltype(&m.b_h)> f = {&m.b_h, &m.b_p, &m.ls_p, &m.b_d, &m.ls_d,
                                     &m.u,   &m.b_e, &m.ls_e};
  if (m.q.size() > 0) f.push_back(&m.q);
  return f;
}

}  // namespace

int param_count(const RssmModel& m) {
  int n = 1;  // b_r
  for (auto* w : mat_fields(m)) n += static_cast<int>(w->size());
  for (auto* v : vec_fields(m)) n += static_cast<int>(v->size());
  return n;
}

Vec flatten_params(const RssmModel& m) {
  Vec p(param_count(m));
  int k = 0;
  for (auto* w : mat_fields(m))
    for (Eigen::Index i = 0; i < w->size(); ++i) p(k++) = (*w)(i);
  for (auto* v : vec_fields(m))
    for (Eigen::Index i = 0; i < v->size(); ++i) p(k++) = (*v)(i);
  p(k++) = m.b_r;
  return p;
}

void unflatten_params(RssmModel& m, const Vec& p) {
  int k = 0;
  for (auto* w : mat_fields(m))
    for (Eigen::Index i = 0; i < w->size(); ++i) (*w)(i) = p(k++);
  for (auto* v : vec_fields(m))
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = p(k++);
  m.b_r = p(k++);
}

Vec flatten_grads(const RssmModel& m, const RssmGrads& g) {
  Vec p(param_count(m));
  int k = 0;
  for (auto* w : mat_fields(g))
    for (Eigen::Index i = 0; i < w->size(); ++i) p(k++) = (*w)(i);
  for (auto* v : vec_fields(g))
    for (Eigen::Index i = 0; i < v->size(); ++i) p(k++) = (*v)(i);
  p(k++) = g.b_r;
  return p;
}

RssmModel make_random_model(int d_h, int d_z, int d_a, int d_obs,
                            bool tanh_transition, bool hidden_reward,
                            RandomStream& rs, double spread) {
  RssmModel m;
  m.d_h = d_h;
  m.d_z = d_z;
  m.d_a = d_a;
  m.d_obs = d_obs;
  m.tanh_transition = tanh_transition;
  m.hidden_reward = hidden_reward;
  auto randm = [&](int r, int c, double s) {
    Mat w(r, c);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = s * rs.normal();
    return w;
  };
  auto randv = [&](int n, double s) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = s * rs.normal();
    return v;
  };
  const double sh = spread / std::sqrt(static_cast<double>(d_h));
  m.A = randm(d_h, d_h, sh);
  m.B = randm(d_h, d_z, spread / std::sqrt(static_cast<double>(d_z)));
  m.C = randm(d_h, d_a, spread / std::sqrt(static_cast<double>(d_a)));
  m.b_h = randv(d_h, 0.1 * spread);
  m.W = randm(d_z, d_h, sh);
  m.b_p = randv(d_z, 0.1 * spread);
  m.ls_p = randv(d_z, 0.2).array() + std::log(0.5);
  const int d_s = d_h + d_z;
  m.D = randm(d_obs, d_s, spread / std::sqrt(static_cast<double>(d_s)));
  m.b_d = randv(d_obs, 0.1 * spread);
  m.ls_d = randv(d_obs, 0.2).array() + std::log(0.5);
  if (hidden_reward) {
    const int d_r = std::max(4, d_h);
    m.P = randm(d_r, d_s, 1.0 / std::sqrt(static_cast<double>(d_s)));
    m.q = randv(d_r, 0.1);
    m.u = randv(d_r, spread / std::sqrt(static_cast<double>(d_r)));
  } else {
    m.u = randv(d_s, spread / std::sqrt(static_cast<double>(d_s)));
  }
  m.b_r = 0.1 * spread * rs.normal();
  m.E = randm(d_z, d_h + d_obs, spread / std::sqrt(static_cast<double>(d_h + d_obs)));
  m.b_e = randv(d_z, 0.1 * spread);
  m.ls_e = randv(d_z, 0.2).array() + std::log(0.5);
  return m;
}

}  // namespace lmpc
