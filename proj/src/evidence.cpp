#include <cmath>
#include <stdexcept>

#include "lmpc/model/rssm.hpp"

namespace lmpc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log N(y; mean, S) with S symmetric positive definite.
double log_mvn(const Vec& y, const Vec& mean, const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("exact_evidence: singular joint covariance");
  Vec r = y - mean;
  Vec w = llt.matrixL().solve(r);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (y.size() * kLog2Pi + logdet + w.squaredNorm());
}

}  // namespace

double exact_evidence(const RssmModel& m, const Sequence& seq) {
  if (!m.linear_gaussian())
    throw std::invalid_argument(
        "exact_evidence: requires the linear-Gaussian family");
  seq.validate(m);
  for (const auto& o : seq.obs) {
    if (!o)
      throw std::invalid_argument("exact_evidence: needs a fully observed sequence");
  }

  const int steps = seq.steps();
  const int dz = m.d_z, dh = m.d_h, dobs = m.d_obs;
  const int n = dz * steps;
  const bool with_rewards = seq.has_rewards();
  const int y_dim = steps * (dobs + (with_rewards ? 1 : 0));

  // h_t is affine in the stacked latents zeta = [z_0; ...; z_T]:
  //   h_t = Hcoef_t * zeta + hconst_t.
  // The prior chain z_t = W h_t + b_p + xi_t then reads
  //   zeta = L zeta + c + xi  with strictly block-lower L,
  // so zeta is Gaussian with mean (I-L)^{-1} c and covariance
  // (I-L)^{-1} diag(prior var) (I-L)^{-T}.
  Mat L = Mat::Zero(n, n);
  Vec c(n);
  Vec prior_var(n);
  Mat Hcoef = Mat::Zero(dh, n);
  Vec hconst = Vec::Zero(dh);

  Mat Dh = m.D.leftCols(dh);
  Mat Dz = m.D.rightCols(dz);

  Mat My = Mat::Zero(y_dim, n);
  Vec dy(y_dim);
  Vec noise_var(y_dim);
  Vec y(y_dim);

  Vec u_h, u_z;
  if (with_rewards) {
    u_h = m.u.head(dh);
    u_z = m.u.tail(dz);
  }

  Vec prior_sd = m.ls_p.array().exp();
  Vec obs_sd = m.ls_d.array().exp();

  int row = 0;
  for (int t = 0; t < steps; ++t) {
    // z_t rows
    L.block(t * dz, 0, dz, n) = m.W * Hcoef;
    c.segment(t * dz, dz) = m.W * hconst + m.b_p;
    prior_var.segment(t * dz, dz) = prior_sd.cwiseProduct(prior_sd);

    // o_t rows
    My.block(row, 0, dobs, n) = Dh * Hcoef;
    My.block(row, t * dz, dobs, dz) += Dz;
    dy.segment(row, dobs) = Dh * hconst + m.b_d;
    noise_var.segment(row, dobs) = obs_sd.cwiseProduct(obs_sd);
    y.segment(row, dobs) = *seq.obs[t];
    row += dobs;

    if (with_rewards) {
      My.row(row) = u_h.transpose() * Hcoef;
      My.block(row, t * dz, 1, dz) += u_z.transpose();
      dy(row) = u_h.dot(hconst) + m.b_r;
      noise_var(row) = 1.0;
      y(row) = seq.rewards[t];
      row += 1;
    }

    if (t + 1 < steps) {
      Hcoef = m.A * Hcoef;
      Hcoef.block(0, t * dz, dh, dz) += m.B;
      hconst = m.A * hconst + m.C * seq.actions[t] + m.b_h;
    }
  }

  Mat IL = Mat::Identity(n, n) - L;
  Mat IL_inv = IL.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
  Vec mu_zeta = IL_inv * c;
  Mat cov_zeta =
      IL_inv * prior_var.asDiagonal() * IL_inv.transpose();

  Vec mean_y = My * mu_zeta + dy;
  Mat S = My * cov_zeta * My.transpose();
  S += Mat(noise_var.asDiagonal());
  return log_mvn(y, mean_y, S);
}

ConditionalGaussian exact_conditional(const RssmModel& m, const Vec& h,
                                      const Vec& o) {
  if (m.tanh_transition)
    throw std::invalid_argument(
        "exact_conditional: requires the linear-Gaussian family");
  DiagGaussian prior = prior_stats(m, h);
  Vec sp2 = prior.std.cwiseProduct(prior.std);
  Vec rd2 = Vec(m.ls_d.array().exp()).cwiseProduct(Vec(m.ls_d.array().exp()));
  Mat Dh = m.D.leftCols(m.d_h);
  Mat Dz = m.D.rightCols(m.d_z);

  Mat precision = Mat(sp2.cwiseInverse().asDiagonal()) +
                  Dz.transpose() * rd2.cwiseInverse().asDiagonal() * Dz;
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("exact_conditional: singular precision");
  Mat cov = llt.solve(Mat::Identity(m.d_z, m.d_z));
  Vec info = prior.mean.cwiseQuotient(sp2) +
             Dz.transpose() *
                 (o - Dh * h - m.b_d).cwiseQuotient(rd2);
  ConditionalGaussian cg;
  cg.mean = cov * info;
  cg.cov = cov;
  return cg;
}

void set_exact_conditional_encoder(RssmModel& m) {
  if (m.tanh_transition)
    throw std::invalid_argument(
        "set_exact_conditional_encoder: linear-Gaussian family only");
  Vec sp2 = Vec(m.ls_p.array().exp()).array().square();
  Vec rd2 = Vec(m.ls_d.array().exp()).array().square();
  Mat Dh = m.D.leftCols(m.d_h);
  Mat Dz = m.D.rightCols(m.d_z);
  Mat precision = Mat(sp2.cwiseInverse().asDiagonal()) +
                  Dz.transpose() * rd2.cwiseInverse().asDiagonal() * Dz;
  Mat cov = precision.llt().solve(Mat::Identity(m.d_z, m.d_z));
  // conditional mean = G_h h + G_o o + g, an affine map the encoder family
  // can represent exactly; its covariance is representable when diagonal.
  Mat G_h = cov * (Mat(sp2.cwiseInverse().asDiagonal()) * m.W -
                   Dz.transpose() * rd2.cwiseInverse().asDiagonal() * Dh);
  Mat G_o = cov * Dz.transpose() * rd2.cwiseInverse().asDiagonal();
  Vec g = cov * (m.b_p.cwiseQuotient(sp2) -
                 Dz.transpose() * m.b_d.cwiseQuotient(rd2));
  m.E.resize(m.d_z, m.d_h + m.d_obs);
  m.E << G_h, G_o;
  m.b_e = g;
  m.ls_e = cov.diagonal().array().sqrt().log();
}

}  // namespace lmpc
