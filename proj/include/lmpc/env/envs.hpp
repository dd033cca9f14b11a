#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "lmpc/core/rng.hpp"
#include "lmpc/core/types.hpp"

namespace lmpc::env {

struct StepResult {
  std::optional<Vec> obs;  // withheld with probability p_occ
  double reward = 0.0;
  bool done = false;
};

// Point mass in the unit square. A horizontal wall with two gaps separates
// the start (below) from the goal (above); the straight-line route is
// blocked, so the optimal first actions split into two families, one per gap.
// Reward: -step_penalty - distance to goal, -collision_penalty on wall hits,
// +terminal_bonus inside the goal disc (which ends the episode).
struct CorridorConfig {
  double step_scale = 0.1;
  double dyn_noise = 0.01;
  double obs_noise = 0.01;
  double p_occ = 0.2;
  int episode_steps = 30;
  double start_x = 0.5, start_y = 0.15;
  double goal_x = 0.5, goal_y = 0.85;
  double goal_radius = 0.08;
  double wall_y_lo = 0.48, wall_y_hi = 0.52;
  double gap1_lo = 0.12, gap1_hi = 0.28;
  double gap2_lo = 0.72, gap2_hi = 0.88;
  double step_penalty = 0.01;
  double shaping_weight = 1.0;
  double collision_penalty = 0.1;
  double terminal_bonus = 10.0;
};

class CorridorEnv {
 public:
  explicit CorridorEnv(CorridorConfig cfg = {}) : cfg_(cfg) {}

  std::optional<Vec> reset(RandomStream& rs);
  StepResult step(const Vec& action, RandomStream& rs);

  bool done() const { return done_; }
  int steps_taken() const { return t_; }
  Eigen::Vector2d position() const { return pos_; }
  const CorridorConfig& config() const { return cfg_; }

  static bool in_wall(const CorridorConfig& c, const Eigen::Vector2d& p);
  // Earliest segment parameter in [0,1] at which p0 -> p1 enters the wall;
  // +inf when the move is unobstructed.
  static double first_blocked_t(const CorridorConfig& c,
                                const Eigen::Vector2d& p0,
                                const Eigen::Vector2d& p1);
  // Noise-free move resolution shared with the dynamic-programming oracle.
  struct Move {
    Eigen::Vector2d pos;
    bool collided;
  };
  static Move resolve_move(const CorridorConfig& c, const Eigen::Vector2d& from,
                           const Eigen::Vector2d& intended);
  static double move_reward(const CorridorConfig& c, const Move& mv,
                            bool* reached);

 private:
  CorridorConfig cfg_;
  Eigen::Vector2d pos_{0.0, 0.0};
  int t_ = 0;
  bool done_ = true;

  std::optional<Vec> observe(RandomStream& rs) const;
};

// Velocity-controlled point with three equally rewarded goals 120 degrees
// apart; reward is the best Gaussian bump. Symmetric ties stress the
// planner's tie-breaking and mode-keeping.
struct ReacherConfig {
  double dt = 0.15;
  double damping = 0.8;
  double obs_noise = 0.01;
  double p_occ = 0.2;
  int episode_steps = 30;
  double goal_dist = 0.6;
  double reward_sigma = 0.15;
};

class ReacherEnv {
 public:
  explicit ReacherEnv(ReacherConfig cfg = {}) : cfg_(cfg) {}

  std::optional<Vec> reset(RandomStream& rs);
  StepResult step(const Vec& action, RandomStream& rs);

  bool done() const { return done_; }
  int steps_taken() const { return t_; }
  Eigen::Vector2d position() const { return pos_; }
  Eigen::Vector2d velocity() const { return vel_; }
  const ReacherConfig& config() const { return cfg_; }

  static Eigen::Vector2d goal(const ReacherConfig& c, int g);
  static double reward_at(const ReacherConfig& c, const Eigen::Vector2d& p);

 private:
  ReacherConfig cfg_;
  Eigen::Vector2d pos_{0.0, 0.0};
  Eigen::Vector2d vel_{0.0, 0.0};
  int t_ = 0;
  bool done_ = true;

  std::optional<Vec> observe(RandomStream& rs) const;
};

using AnyEnv = std::variant<CorridorEnv, ReacherEnv>;

struct EnvSpec {
  std::string name = "two_gap_corridor";  // or "multi_goal_reacher"
  double p_occ = 0.2;
  int episode_steps = 30;
};

AnyEnv make_env(const EnvSpec& spec);

inline std::optional<Vec> reset(AnyEnv& e, RandomStream& rs) {
  return std::visit([&](auto& env) { return env.reset(rs); }, e);
}

inline StepResult step(AnyEnv& e, const Vec& a, RandomStream& rs) {
  return std::visit([&](auto& env) { return env.step(a, rs); }, e);
}

inline bool done(const AnyEnv& e) {
  return std::visit([](const auto& env) { return env.done(); }, e);
}

constexpr int kActionDim = 2;
constexpr int kObsDim = 2;

}  // namespace lmpc::env
