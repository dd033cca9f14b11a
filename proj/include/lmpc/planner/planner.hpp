#pragma once

#include <cstdint>
#include <vector>

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"
#include "lmpc/learner/actor.hpp"
#include "lmpc/model/rssm.hpp"
#include "lmpc/value/critic.hpp"
#include "lmpc/value/normalizer.hpp"
#include "lmpc/value/returns.hpp"

namespace lmpc {

// One Gaussian over action sequences: time-indexed mean and variance
// diagonal, one column per plan depth.
struct ProposalMode {
  Mat mu;   // d_a x H
  Mat var;  // d_a x H, every entry >= epsilon after an update
};

struct ModeSet {
  std::vector<ProposalMode> modes;
  std::vector<double> alphas;

  int size() const { return static_cast<int>(modes.size()); }
};

struct ScoredCandidate {
  int mode = 0;
  int index = 0;
  ActionSequence actions;
  LatentTrajectory trajectory;
  ScoredTrace scored;

  double score() const { return scored.score(); }
};

// Fresh policy-random initialization: one actor rollout shared across modes,
// an independent bound-respecting Gaussian sequence per mode, blended with
// each mode's mixing ratio. Variances start at (sigma_init_fraction * range)^2.
ModeSet init_modes(const RssmModel& model, const ActorPrior& actor,
                   const Belief& belief, const PlannerConfig& cfg,
                   const ActionBounds& bounds, RandomStream& rs);

// Receding-horizon shift: means move one slot forward, the last slot repeats,
// and the last slot's variance is re-inflated to its initialization value.
ModeSet warm_start_shift(const ModeSet& modes, const PlannerConfig& cfg,
                         const ActionBounds& bounds);

// One per-timestep Gaussian draw from the mode, clipped to bounds.
ActionSequence sample_candidate(const ProposalMode& mode,
                                const ActionBounds& bounds, RandomStream& rs);

// K independent draws (K >= 2), each consuming its own d_a*H normals.
std::vector<ActionSequence> sample_candidates(const ProposalMode& mode, int K,
                                              const ActionBounds& bounds,
                                              RandomStream& rs);

// Rolls out and scores candidates (serial utility; the planner itself fans
// the same work out over per-candidate streams).
void score_candidates(std::vector<ScoredCandidate>& candidates,
                      const RssmModel& model, const CriticEnsemble& critics,
                      const RunningNormalizer& snapshot, const ValueConfig& vcfg,
                      const Belief& start, RandomStream& rs);

struct BestRollout {
  int mode = 0;
  int index = 0;
  double score = 0.0;
};

// Maximum score over all modes and candidates; ties resolve to the lowest
// (mode, candidate) pair.
BestRollout global_best(const std::vector<std::vector<double>>& scores);

// Mode-wise softmax of scores normalized by the global best:
//   w_k  proportional to  exp((1/tau) * s_k / max(s_star, delta)),
// where s_k are scores shifted by the global minimum so s_star >= 0. The
// max() stabilizer keeps the ratio exactly invariant under positive scaling
// of all scores (delta only guards the all-equal case).
Vec mode_weights(const Vec& shifted_scores, double shifted_gstar, double tau,
                 double delta);

// Weighted moment matching with covariance floor epsilon.
ProposalMode update_mode(const std::vector<ActionSequence>& candidates,
                         const Vec& weights, double epsilon);

struct PlanDiagnostics {
  std::vector<double> gstar_per_iter;
  std::vector<std::vector<double>> mode_best_per_iter;  // [iter][mode]
  int selected_mode = 0;
  int selected_candidate = 0;
  Vec mean_lambda_by_depth;  // H-1, over final-iteration candidates
  Vec mean_sigma_by_depth;   // H
  double wall_ms = 0.0;
};

struct PlanResult {
  Vec action;
  PlanDiagnostics diagnostics;
};

// Receding-horizon planner state. One instance per control thread; plan()
// itself parallelizes candidate work over derived streams, so results do not
// depend on the worker count.
class Planner {
 public:
  Planner() = default;
  Planner(PlannerConfig cfg, ValueConfig vcfg, ActionBounds bounds)
      : cfg_(std::move(cfg)), vcfg_(vcfg), bounds_(std::move(bounds)) {
    cfg_.validate();
    vcfg_.validate();
  }

  // Drop warm-start state (call at episode boundaries).
  void reset() { warm_ = false; }

  PlanResult plan(const Belief& belief, const RssmModel& model,
                  const CriticEnsemble& critics, const ActorPrior& actor,
                  RunningNormalizer& normalizer, const SeedSpec& seeds,
                  std::uint64_t step, int workers = 1);

  const ModeSet& modes() const { return modes_; }
  const PlannerConfig& config() const { return cfg_; }

 private:
  PlannerConfig cfg_;
  ValueConfig vcfg_;
  ActionBounds bounds_;
  ModeSet modes_;
  bool warm_ = false;
};

}  // namespace lmpc
