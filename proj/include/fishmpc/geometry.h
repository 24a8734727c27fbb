#ifndef FISHMPC_GEOMETRY_H_
#define FISHMPC_GEOMETRY_H_

// Planar frame bookkeeping. Units are mm, rad, mm/s, rad/s everywhere.
//
// Three kinds of state appear:
//   WorldState      pose and velocity in the tank frame.
//   LocalState      velocity expressed in the robot frame at step k. The
//                   robot sits at the origin of its own frame, so position
//                   and heading are implicitly zero and not stored.
//   LocalNextState  the state after one action, expressed in the frame of
//                   step k (displacement, heading change, velocities).
//
// A learned or simulated step maps LocalState -> LocalNextState. To chain
// steps, compose_world() lifts the result into the tank frame and rebase()
// re-expresses the velocities in the frame of step k+1.

namespace fishmpc {

struct WorldState {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double theta_rad = 0.0;
  double vx_mm_s = 0.0;
  double vy_mm_s = 0.0;
  double omega_rad_s = 0.0;
};

struct LocalState {
  double vx_mm_s = 0.0;
  double vy_mm_s = 0.0;
  double omega_rad_s = 0.0;
};

struct LocalNextState {
  double dx_mm = 0.0;
  double dy_mm = 0.0;
  double dtheta_rad = 0.0;
  double vx_mm_s = 0.0;
  double vy_mm_s = 0.0;
  double omega_rad_s = 0.0;
};

// Pose-only view used by path tracking.
struct Pose2 {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double theta_rad = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Wraps to (-pi, pi]. Throws std::domain_error on non-finite input.
double wrap_angle(double theta);

// Rotates v by angle (counter-clockwise positive).
Vec2 rotate(Vec2 v, double angle);

LocalState world_to_local(const WorldState& s);

// Inverse of world_to_local for the velocity part: places the local
// velocities back into the tank frame at the given pose.
WorldState local_to_world(const Pose2& pose, const LocalState& local);

WorldState compose_world(const WorldState& pose_k, const LocalNextState& next);

// Velocities of `next` re-expressed in the frame of step k+1.
LocalState rebase(const LocalNextState& next);

inline Pose2 pose_of(const WorldState& s) {
  return {s.x_mm, s.y_mm, s.theta_rad};
}

bool is_finite(const WorldState& s);
bool is_finite(const LocalState& s);
bool is_finite(const LocalNextState& s);

}  // namespace fishmpc

#endif  // FISHMPC_GEOMETRY_H_
