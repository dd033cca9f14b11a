#include "lmpc/env/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmpc::env {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Vector2d clamp_unit(Eigen::Vector2d p) {
  p.x() = std::clamp(p.x(), 0.0, 1.0);
  p.y() = std::clamp(p.y(), 0.0, 1.0);
  return p;
}

bool x_in_gap(const CorridorConfig& c, double x) {
  return (x >= c.gap1_lo && x <= c.gap1_hi) ||
         (x >= c.gap2_lo && x <= c.gap2_hi);
}

}  // namespace

bool CorridorEnv::in_wall(const CorridorConfig& c, const Eigen::Vector2d& p) {
  return p.y() >= c.wall_y_lo && p.y() <= c.wall_y_hi && !x_in_gap(c, p.x());
}

double CorridorEnv::first_blocked_t(const CorridorConfig& c,
                                    const Eigen::Vector2d& p0,
                                    const Eigen::Vector2d& p1) {
  const Eigen::Vector2d d = p1 - p0;
  // t-range with y inside the wall band
  double ty0 = 0.0, ty1 = 1.0;
  if (std::abs(d.y()) < 1e-15) {
    if (p0.y() < c.wall_y_lo || p0.y() > c.wall_y_hi) return kInf;
  } else {
    double ta = (c.wall_y_lo - p0.y()) / d.y();
    double tb = (c.wall_y_hi - p0.y()) / d.y();
    ty0 = std::max(0.0, std::min(ta, tb));
    ty1 = std::min(1.0, std::max(ta, tb));
    if (ty0 > ty1) return kInf;
  }
  // earliest t in [ty0, ty1] with x outside both gaps
  auto x_at = [&](double t) { return p0.x() + t * d.x(); };
  if (std::abs(d.x()) < 1e-15) {
    return x_in_gap(c, p0.x()) ? kInf : ty0;
  }
  // blocked x-intervals inside the band
  const double blocked[3][2] = {{-kInf, c.gap1_lo},
                                {c.gap1_hi, c.gap2_lo},
                                {c.gap2_hi, kInf}};
  double best = kInf;
  for (const auto& seg : blocked) {
    double ta = (seg[0] - x_at(0.0)) / d.x();
    double tb = (seg[1] - x_at(0.0)) / d.x();
    double lo = std::max(ty0, std::min(ta, tb));
    double hi = std::min(ty1, std::max(ta, tb));
    if (lo <= hi) best = std::min(best, lo);
  }
  return best;
}

CorridorEnv::Move CorridorEnv::resolve_move(const CorridorConfig& c,
                                            const Eigen::Vector2d& from,
                                            const Eigen::Vector2d& intended) {
  Eigen::Vector2d target = clamp_unit(intended);
  double t = first_blocked_t(c, from, target);
  if (t == kInf) return {target, false};
  // stop just short of the wall, on the start side
  double tb = std::max(0.0, t - 1e-3);
  return {from + tb * (target - from), true};
}

double CorridorEnv::move_reward(const CorridorConfig& c, const Move& mv,
                                bool* reached) {
  Eigen::Vector2d goal(c.goal_x, c.goal_y);
  double dist = (mv.pos - goal).norm();
  bool hit_goal = dist <= c.goal_radius;
  if (reached) *reached = hit_goal;
  double r = -c.step_penalty - c.shaping_weight * dist;
  if (mv.collided) r -= c.collision_penalty;
  if (hit_goal) r += c.terminal_bonus;
  return r;
}

std::optional<Vec> CorridorEnv::observe(RandomStream& rs) const {
  double occ = rs.uniform();
  Vec noise = rs.normal_vec(2);
  if (occ < cfg_.p_occ) return std::nullopt;
  Vec o(2);
  o << pos_.x() + cfg_.obs_noise * noise(0), pos_.y() + cfg_.obs_noise * noise(1);
  return o;
}

std::optional<Vec> CorridorEnv::reset(RandomStream& rs) {
  pos_ = Eigen::Vector2d(cfg_.start_x, cfg_.start_y);
  t_ = 0;
  done_ = false;
  return observe(rs);
}

StepResult CorridorEnv::step(const Vec& action, RandomStream& rs) {
  if (done_) throw std::logic_error("CorridorEnv: step after done");
  Vec noise = rs.normal_vec(2);
  Eigen::Vector2d intended =
      pos_ + cfg_.step_scale * Eigen::Vector2d(action(0), action(1)) +
      cfg_.dyn_noise * Eigen::Vector2d(noise(0), noise(1));
  Move mv = resolve_move(cfg_, pos_, intended);
  pos_ = mv.pos;
  bool reached = false;
  double reward = move_reward(cfg_, mv, &reached);
  ++t_;
  done_ = reached || t_ >= cfg_.episode_steps;
  StepResult res;
  res.obs = observe(rs);
  res.reward = reward;
  res.done = done_;
  return res;
}

Eigen::Vector2d ReacherEnv::goal(const ReacherConfig& c, int g) {
  double ang = M_PI / 2.0 + g * 2.0 * M_PI / 3.0;
  return c.goal_dist * Eigen::Vector2d(std::cos(ang), std::sin(ang));
}

double ReacherEnv::reward_at(const ReacherConfig& c, const Eigen::Vector2d& p) {
  double best = -kInf;
  for (int g = 0; g < 3; ++g) {
    double d2 = (p - goal(c, g)).squaredNorm();
    best = std::max(best, std::exp(-d2 / (2.0 * c.reward_sigma * c.reward_sigma)));
  }
  return best;
}

std::optional<Vec> ReacherEnv::observe(RandomStream& rs) const {
  double occ = rs.uniform();
  Vec noise = rs.normal_vec(2);
  if (occ < cfg_.p_occ) return std::nullopt;
  Vec o(2);
  o << pos_.x() + cfg_.obs_noise * noise(0), pos_.y() + cfg_.obs_noise * noise(1);
  return o;
}

std::optional<Vec> ReacherEnv::reset(RandomStream& rs) {
  pos_.setZero();
  vel_.setZero();
  t_ = 0;
  done_ = false;
  return observe(rs);
}

StepResult ReacherEnv::step(const Vec& action, RandomStream& rs) {
  if (done_) throw std::logic_error("ReacherEnv: step after done");
  vel_ = cfg_.damping * vel_ + cfg_.dt * Eigen::Vector2d(action(0), action(1));
  pos_ += cfg_.dt * vel_;
  double reward = reward_at(cfg_, pos_);
  ++t_;
  done_ = t_ >= cfg_.episode_steps;
  StepResult res;
  res.obs = observe(rs);
  res.reward = reward;
  res.done = done_;
  return res;
}

AnyEnv make_env(const EnvSpec& spec) {
  if (spec.name == "two_gap_corridor") {
    CorridorConfig c;
    c.p_occ = spec.p_occ;
    c.episode_steps = spec.episode_steps;
    return CorridorEnv(c);
  }
  if (spec.name == "multi_goal_reacher") {
    ReacherConfig c;
    c.p_occ = spec.p_occ;
    c.episode_steps = spec.episode_steps;
    return ReacherEnv(c);
  }
  throw std::invalid_argument("unknown environment: " + spec.name);
}

}  // namespace lmpc::env
