#include "lmpc/planner/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lmpc/core/parallel.hpp"

namespace lmpc {

namespace {

Mat init_variance(const PlannerConfig& cfg, const ActionBounds& bounds) {
  Vec sd = cfg.sigma_init_fraction * bounds.range();
  Mat var(bounds.dim(), cfg.H);
  var.colwise() = Vec(sd.array().square());
  return var;
}

ActionSequence random_sequence(const ActionBounds& bounds, int horizon,
                               RandomStream& rs) {
  ActionSequence a(bounds.dim(), horizon);
  Vec half = 0.5 * bounds.range();
  for (int t = 0; t < horizon; ++t) {
    a.col(t) = bounds.center() + half.cwiseProduct(rs.normal_vec(bounds.dim()));
  }
  return clip_actions(a, bounds);
}

}  // namespace

ModeSet init_modes(const RssmModel& model, const ActorPrior& actor,
                   const Belief& belief, const PlannerConfig& cfg,
                   const ActionBounds& bounds, RandomStream& rs) {
  ModeSet set;
  set.alphas = cfg.alpha_schedule;
  ActionSequence policy_seq =
      actor_rollout_actions(model, actor, belief, cfg.H, rs);
  Mat var = init_variance(cfg, bounds);
  for (int m = 0; m < cfg.M; ++m) {
    ActionSequence rand_seq = random_sequence(bounds, cfg.H, rs);
    ProposalMode mode;
    mode.mu = set.alphas[m] * policy_seq + (1.0 - set.alphas[m]) * rand_seq;
    mode.var = var;
    set.modes.push_back(std::move(mode));
  }
  return set;
}

ModeSet warm_start_shift(const ModeSet& modes, const PlannerConfig& cfg,
                         const ActionBounds& bounds) {
  ModeSet out;
  out.alphas = modes.alphas;
  Vec init_var =
      Vec((cfg.sigma_init_fraction * bounds.range()).array().square());
  for (const ProposalMode& m : modes.modes) {
    const int h = static_cast<int>(m.mu.cols());
    ProposalMode s;
    s.mu = Mat(m.mu.rows(), h);
    s.var = Mat(m.var.rows(), h);
    for (int t = 0; t + 1 < h; ++t) {
      s.mu.col(t) = m.mu.col(t + 1);
      s.var.col(t) = m.var.col(t + 1);
    }
    s.mu.col(h - 1) = m.mu.col(h - 1);
    s.var.col(h - 1) = init_var;
    out.modes.push_back(std::move(s));
  }
  return out;
}

ActionSequence sample_candidate(const ProposalMode& mode,
                                const ActionBounds& bounds, RandomStream& rs) {
  const int d = static_cast<int>(mode.mu.rows());
  const int h = static_cast<int>(mode.mu.cols());
  ActionSequence a(d, h);
  for (int t = 0; t < h; ++t) {
    a.col(t) = mode.mu.col(t) +
               mode.var.col(t).cwiseSqrt().cwiseProduct(rs.normal_vec(d));
  }
  return clip_actions(a, bounds);
}

std::vector<ActionSequence> sample_candidates(const ProposalMode& mode, int K,
                                              const ActionBounds& bounds,
                                              RandomStream& rs) {
  if (K < 2) throw std::invalid_argument("sample_candidates: K >= 2");
  std::vector<ActionSequence> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) out.push_back(sample_candidate(mode, bounds, rs));
  return out;
}

void score_candidates(std::vector<ScoredCandidate>& candidates,
                      const RssmModel& model, const CriticEnsemble& critics,
                      const RunningNormalizer& snapshot, const ValueConfig& vcfg,
                      const Belief& start, RandomStream& rs) {
  for (ScoredCandidate& c : candidates) {
    c.trajectory = prior_rollout(model, start, c.actions, rs);
    c.scored = score_trace(c.trajectory.beliefs, c.trajectory.rewards, critics,
                           snapshot, vcfg);
    if (!std::isfinite(c.score()))
      throw std::runtime_error("score_candidates: non-finite score");
  }
}

BestRollout global_best(const std::vector<std::vector<double>>& scores) {
  BestRollout best;
  bool found = false;
  for (std::size_t m = 0; m < scores.size(); ++m) {
    for (std::size_t k = 0; k < scores[m].size(); ++k) {
      double s = scores[m][k];
      if (!found || s > best.score) {
        best = BestRollout{static_cast<int>(m), static_cast<int>(k), s};
        found = true;
      }
    }
  }
  if (!found) throw std::invalid_argument("global_best: no candidates");
  return best;
}

Vec mode_weights(const Vec& shifted_scores, double shifted_gstar, double tau,
                 double delta) {
  if (!shifted_scores.allFinite() || !std::isfinite(shifted_gstar))
    throw std::runtime_error("mode_weights: non-finite scores");
  const double denom = std::max(shifted_gstar, delta);
  Vec u = shifted_scores / denom / tau;
  double umax = u.maxCoeff();
  Vec w = (u.array() - umax).exp();
  return w / w.sum();
}

ProposalMode update_mode(const std::vector<ActionSequence>& candidates,
                         const Vec& weights, double epsilon) {
  const int d = static_cast<int>(candidates.front().rows());
  const int h = static_cast<int>(candidates.front().cols());
  ProposalMode out;
  out.mu = Mat::Zero(d, h);
  for (std::size_t k = 0; k < candidates.size(); ++k)
    out.mu += weights(static_cast<Eigen::Index>(k)) * candidates[k];
  out.var = Mat::Constant(d, h, epsilon);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    Mat diff = candidates[k] - out.mu;
    out.var += weights(static_cast<Eigen::Index>(k)) *
               Mat(diff.array().square());
  }
  return out;
}

PlanResult Planner::plan(const Belief& belief, const RssmModel& model,
                         const CriticEnsemble& critics, const ActorPrior& actor,
                         RunningNormalizer& normalizer, const SeedSpec& seeds,
                         std::uint64_t step, int workers) {
  auto t_start = std::chrono::steady_clock::now();
  const RunningNormalizer snapshot = normalizer;  // stale within this call

  RandomStream rs_init = derive_stream(seeds, "plan_init", {step});
  ModeSet fresh = init_modes(model, actor, belief, cfg_, bounds_, rs_init);
  if (warm_) {
    ModeSet shifted = warm_start_shift(modes_, cfg_, bounds_);
    for (int m = 0; m < cfg_.M; ++m) {
      shifted.modes[m].mu = (1.0 - cfg_.blend_weight) * shifted.modes[m].mu +
                            cfg_.blend_weight * fresh.modes[m].mu;
    }
    modes_ = std::move(shifted);
  } else {
    modes_ = std::move(fresh);
  }

  PlanDiagnostics diag;
  std::vector<ScoredCandidate> last_iter;
  const int total = cfg_.M * cfg_.K;
  std::vector<double> ucb_log;
  ucb_log.reserve(static_cast<std::size_t>(cfg_.L) * total * cfg_.H);

  for (int iter = 0; iter < cfg_.L; ++iter) {
    std::vector<ScoredCandidate> cands(total);
    parallel_for(total, workers, [&](int i) {
      const int m = i / cfg_.K;
      const int k = i % cfg_.K;
      RandomStream rs = derive_stream(
          seeds, "plan_cand",
          {step, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(m),
           static_cast<std::uint64_t>(k)});
      ScoredCandidate c;
      c.mode = m;
      c.index = k;
      c.actions = sample_candidate(modes_.modes[m], bounds_, rs);
      c.trajectory = prior_rollout(model, belief, c.actions, rs);
      c.scored = score_trace(c.trajectory.beliefs, c.trajectory.rewards,
                             critics, snapshot, vcfg_);
      if (!std::isfinite(c.score()))
        throw std::runtime_error("plan: non-finite candidate score");
      cands[i] = std::move(c);
    });

    for (const ScoredCandidate& c : cands)
      for (Eigen::Index t = 0; t < c.scored.ucbs.size(); ++t)
        ucb_log.push_back(c.scored.ucbs(t));

    std::vector<std::vector<double>> scores(cfg_.M,
                                            std::vector<double>(cfg_.K));
    double gmin = std::numeric_limits<double>::infinity();
    for (const ScoredCandidate& c : cands) {
      scores[c.mode][c.index] = c.score();
      gmin = std::min(gmin, c.score());
    }
    BestRollout best = global_best(scores);
    diag.gstar_per_iter.push_back(best.score);
    std::vector<double> mode_best(cfg_.M, -std::numeric_limits<double>::infinity());
    for (int m = 0; m < cfg_.M; ++m)
      for (int k = 0; k < cfg_.K; ++k)
        mode_best[m] = std::max(mode_best[m], scores[m][k]);
    diag.mode_best_per_iter.push_back(std::move(mode_best));

    const double shifted_gstar = best.score - gmin;
    for (int m = 0; m < cfg_.M; ++m) {
      Vec shifted(cfg_.K);
      for (int k = 0; k < cfg_.K; ++k) shifted(k) = scores[m][k] - gmin;
      Vec w = mode_weights(shifted, shifted_gstar, cfg_.tau, cfg_.delta);
      std::vector<ActionSequence> mode_cands;
      mode_cands.reserve(cfg_.K);
      for (int k = 0; k < cfg_.K; ++k)
        mode_cands.push_back(cands[m * cfg_.K + k].actions);
      modes_.modes[m] = update_mode(mode_cands, w, cfg_.epsilon);
    }

    if (iter + 1 == cfg_.L) last_iter = std::move(cands);
  }

  // winner of the final iteration decides which mode's mean executes
  std::vector<std::vector<double>> final_scores(cfg_.M,
                                                std::vector<double>(cfg_.K));
  for (const ScoredCandidate& c : last_iter)
    final_scores[c.mode][c.index] = c.score();
  BestRollout winner = global_best(final_scores);
  diag.selected_mode = winner.mode;
  diag.selected_candidate = winner.index;

  diag.mean_lambda_by_depth = Vec::Zero(std::max(0, cfg_.H - 1));
  diag.mean_sigma_by_depth = Vec::Zero(cfg_.H);
  for (const ScoredCandidate& c : last_iter) {
    diag.mean_lambda_by_depth += c.scored.trace.lambdas;
    diag.mean_sigma_by_depth += c.scored.sigmas;
  }
  diag.mean_lambda_by_depth /= total;
  diag.mean_sigma_by_depth /= total;

  // single-writer fold of this call's raw scores, in canonical order
  for (double raw : ucb_log) normalizer.update(raw);

  warm_ = true;
  PlanResult res;
  res.action = clip_action(modes_.modes[winner.mode].mu.col(0), bounds_);
  auto t_end = std::chrono::steady_clock::now();
  diag.wall_ms =
      std::chrono::duration<double, std::milli>(t_end - t_start).count();
  res.diagnostics = std::move(diag);
  return res;
}

}  // namespace lmpc
