#include "fishmpc/geometry.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fishmpc {

double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("wrap_angle: non-finite angle");
  }
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (theta > -kPi && theta <= kPi) return theta;
  double r = std::fmod(theta + kPi, kTwoPi);  // (-2pi, 2pi)
  if (r <= 0.0) r += kTwoPi;                  // (0, 2pi]
  return r - kPi;
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

LocalState world_to_local(const WorldState& s) {
  const Vec2 v = rotate({s.vx_mm_s, s.vy_mm_s}, -s.theta_rad);
  return {v.x, v.y, s.omega_rad_s};
}

WorldState local_to_world(const Pose2& pose, const LocalState& local) {
  const Vec2 v = rotate({local.vx_mm_s, local.vy_mm_s}, pose.theta_rad);
  return {pose.x_mm, pose.y_mm, pose.theta_rad, v.x, v.y, local.omega_rad_s};
}

WorldState compose_world(const WorldState& pose_k, const LocalNextState& next) {
  const Vec2 d = rotate({next.dx_mm, next.dy_mm}, pose_k.theta_rad);
  const Vec2 v = rotate({next.vx_mm_s, next.vy_mm_s}, pose_k.theta_rad);
  return {pose_k.x_mm + d.x,
          pose_k.y_mm + d.y,
          wrap_angle(pose_k.theta_rad + next.dtheta_rad),
          v.x,
          v.y,
          next.omega_rad_s};
}

LocalState rebase(const LocalNextState& next) {
  const Vec2 v = rotate({next.vx_mm_s, next.vy_mm_s}, -next.dtheta_rad);
  return {v.x, v.y, next.omega_rad_s};
}

bool is_finite(const WorldState& s) {
  return std::isfinite(s.x_mm) && std::isfinite(s.y_mm) &&
         std::isfinite(s.theta_rad) && std::isfinite(s.vx_mm_s) &&
         std::isfinite(s.vy_mm_s) && std::isfinite(s.omega_rad_s);
}

bool is_finite(const LocalState& s) {
  return std::isfinite(s.vx_mm_s) && std::isfinite(s.vy_mm_s) &&
         std::isfinite(s.omega_rad_s);
}

bool is_finite(const LocalNextState& s) {
  return std::isfinite(s.dx_mm) && std::isfinite(s.dy_mm) &&
         std::isfinite(s.dtheta_rad) && std::isfinite(s.vx_mm_s) &&
         std::isfinite(s.vy_mm_s) && std::isfinite(s.omega_rad_s);
}

}  // namespace fishmpc
