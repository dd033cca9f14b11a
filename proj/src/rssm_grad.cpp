#include <cmath>
#include <stdexcept>
#include <vector>

#include "lmpc/model/rssm.hpp"

namespace lmpc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_diag(const Vec& x, const Vec& mean, const Vec& std) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double r = (x(i) - mean(i)) / std(i);
    ll += -0.5 * kLog2Pi - std::log(std(i)) - 0.5 * r * r;
  }
  return ll;
}

// KL(N(me, diag se^2) || N(mp, diag sp^2)), elementwise sum.
double kl_diag(const Vec& me, const Vec& se, const Vec& mp, const Vec& sp,
               double* min_term) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < me.size(); ++i) {
    double d = me(i) - mp(i);
    double term = std::log(sp(i)) - std::log(se(i)) +
                  (se(i) * se(i) + d * d) / (2.0 * sp(i) * sp(i)) - 0.5;
    kl += term;
    if (min_term && term < *min_term) *min_term = term;
  }
  return kl;
}

// Everything the backward sweep needs from one filtered pass.
struct StepTape {
  Vec h;
  Vec z;
  Vec eps;
  bool observed = false;
  DiagGaussian enc;    // posterior stats (observed steps)
  DiagGaussian prior;  // prior stats (every step)
  Vec pre;             // transition preactivation (steps with a successor)
  Vec reward_pre;      // hidden reward preactivation tanh input
};

// One reparameterized pass; returns the per-sample ELBO estimate and fills
// the tape when requested.
double forward_pass(const RssmModel& m, const Sequence& seq, RandomStream& rs,
                    std::vector<StepTape>* tape, double* min_kl) {
  const int steps = seq.steps();
  double ll = 0.0;
  Vec h = Vec::Zero(m.d_h);
  Vec z;
  if (tape) tape->assign(steps, StepTape{});
  for (int t = 0; t < steps; ++t) {
    StepTape st;
    st.h = h;
    st.prior = prior_stats(m, h);
    st.eps = rs.normal_vec(m.d_z);
    st.observed = seq.obs[t].has_value();
    if (st.observed) {
      const Vec& o = *seq.obs[t];
      st.enc = posterior_stats(m, h, o);
      z = st.enc.mean + st.enc.std.cwiseProduct(st.eps);
      ll -= kl_diag(st.enc.mean, st.enc.std, st.prior.mean, st.prior.std,
                    min_kl);
      DiagGaussian dec = decode_stats(m, h, z);
      ll += log_normal_diag(o, dec.mean, dec.std);
    } else {
      z = st.prior.mean + st.prior.std.cwiseProduct(st.eps);
    }
    st.z = z;
    if (seq.has_rewards()) {
      Vec s(m.d_h + m.d_z);
      s << h, z;
      if (m.hidden_reward) st.reward_pre = m.P * s + m.q;
      double rm = reward_mean(m, h, z);
      double r = seq.rewards[t] - rm;
      ll += -0.5 * kLog2Pi - 0.5 * r * r;  // unit reward variance
    }
    if (t + 1 < steps) {
      st.pre = m.A * h + m.B * z + m.C * seq.actions[t] + m.b_h;
      h = m.tanh_transition ? Vec(st.pre.array().tanh()) : st.pre;
    }
    if (tape) (*tape)[t] = std::move(st);
  }
  return ll;
}

// Reverse sweep over one tape; accumulates d(sample ll)/d(params) into g.
void backward_pass(const RssmModel& m, const Sequence& seq,
                   const std::vector<StepTape>& tape, RssmGrads& g) {
  const int steps = seq.steps();
  const int dh = m.d_h, dz = m.d_z;
  Vec gh_next;  // d ll / d h_{t+1}
  for (int t = steps - 1; t >= 0; --t) {
    const StepTape& st = tape[t];
    Vec gs = Vec::Zero(dh + dz);  // d ll / d [h_t; z_t]
    Vec s(dh + dz);
    s << st.h, st.z;

    if (seq.has_rewards()) {
      double rm;
      if (m.hidden_reward) {
        Vec th = st.reward_pre.array().tanh();
        rm = m.u.dot(th) + m.b_r;
        double rr = seq.rewards[t] - rm;  // d ll / d reward_mean
        g.u += rr * th;
        g.b_r += rr;
        Vec dpre = (rr * m.u).cwiseProduct(Vec(1.0 - th.array().square()));
        g.P += dpre * s.transpose();
        g.q += dpre;
        gs += m.P.transpose() * dpre;
      } else {
        rm = m.u.dot(s) + m.b_r;
        double rr = seq.rewards[t] - rm;
        g.u += rr * s;
        g.b_r += rr;
        gs += rr * m.u;
      }
    }

    if (st.observed) {
      DiagGaussian dec = decode_stats(m, st.h, st.z);
      const Vec& o = *seq.obs[t];
      Vec var = dec.std.cwiseProduct(dec.std);
      Vec rd = (o - dec.mean).cwiseQuotient(var);  // d ll / d dec.mean
      g.D += rd * s.transpose();
      g.b_d += rd;
      g.ls_d += Vec((o - dec.mean).cwiseQuotient(dec.std).array().square() - 1.0);
      gs += m.D.transpose() * rd;
    }

    if (t + 1 < steps) {
      Vec dpre = m.tanh_transition
                     ? Vec(gh_next.cwiseProduct(
                           Vec(1.0 - st.pre.array().tanh().square())))
                     : gh_next;
      g.A += dpre * st.h.transpose();
      g.B += dpre * st.z.transpose();
      g.C += dpre * seq.actions[t].transpose();
      g.b_h += dpre;
      gs.head(dh) += m.A.transpose() * dpre;
      gs.tail(dz) += m.B.transpose() * dpre;
    }

    Vec gh = gs.head(dh);
    Vec gz = gs.tail(dz);

    const Vec sp = st.prior.std;
    const Vec sp2 = sp.cwiseProduct(sp);
    if (st.observed) {
      const Vec& se = st.enc.std;
      Vec diff = st.enc.mean - st.prior.mean;
      // z = enc.mean + enc.std .* eps
      Vec dmu_e = gz;
      g.ls_e += gz.cwiseProduct(se).cwiseProduct(st.eps);
      // ll includes -KL
      dmu_e -= diff.cwiseQuotient(sp2);
      Vec dmu_p = diff.cwiseQuotient(sp2);
      g.ls_e += Vec(1.0 - (se.cwiseProduct(se).cwiseQuotient(sp2)).array());
      g.ls_p += Vec(((se.cwiseProduct(se) + diff.cwiseProduct(diff))
                         .cwiseQuotient(sp2))
                        .array() -
                    1.0);
      Vec ho(dh + m.d_obs);
      ho << st.h, *seq.obs[t];
      g.E += dmu_e * ho.transpose();
      g.b_e += dmu_e;
      gh += m.E.leftCols(dh).transpose() * dmu_e;
      g.W += dmu_p * st.h.transpose();
      g.b_p += dmu_p;
      gh += m.W.transpose() * dmu_p;
    } else {
      // z = prior.mean + prior.std .* eps
      Vec dmu_p = gz;
      g.ls_p += gz.cwiseProduct(sp).cwiseProduct(st.eps);
      g.W += dmu_p * st.h.transpose();
      g.b_p += dmu_p;
      gh += m.W.transpose() * dmu_p;
    }

    gh_next = gh;  // becomes d ll / d h_t for step t-1
  }
}

}  // namespace

ElboResult elbo(const RssmModel& m, const Sequence& seq, int n_samples,
                RandomStream& rs) {
  seq.validate(m);
  if (n_samples < 1) throw std::invalid_argument("elbo: n_samples >= 1");
  ElboResult res;
  res.samples = Vec(n_samples);
  res.min_kl = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    res.samples(s) = forward_pass(m, seq, rs, nullptr, &res.min_kl);
  }
  res.value = res.samples.mean();
  if (n_samples > 1) {
    double var = (res.samples.array() - res.value).square().sum() /
                 (n_samples - 1);
    res.mc_se = std::sqrt(var / n_samples);
  }
  return res;
}

ElboGradResult elbo_with_gradient(const RssmModel& m, const Sequence& seq,
                                  int n_samples, RandomStream& rs) {
  seq.validate(m);
  if (n_samples < 1) throw std::invalid_argument("elbo: n_samples >= 1");
  ElboGradResult out;
  out.grads = zero_grads(m);
  out.elbo.samples = Vec(n_samples);
  out.elbo.min_kl = 0.0;
  std::vector<StepTape> tape;
  for (int s = 0; s < n_samples; ++s) {
    out.elbo.samples(s) = forward_pass(m, seq, rs, &tape, &out.elbo.min_kl);
    backward_pass(m, seq, tape, out.grads);
  }
  out.elbo.value = out.elbo.samples.mean();
  if (n_samples > 1) {
    double var = (out.elbo.samples.array() - out.elbo.value).square().sum() /
                 (n_samples - 1);
    out.elbo.mc_se = std::sqrt(var / n_samples);
  }
  RssmGrads scaled = zero_grads(m);
  accumulate(scaled, out.grads, 1.0 / n_samples);
  out.grads = scaled;
  return out;
}

}  // namespace lmpc
