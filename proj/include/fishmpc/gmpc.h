#ifndef FISHMPC_GMPC_H_
#define FISHMPC_GMPC_H_

// Gradient-based MPC through the learned dynamics model.
//
// For a start state and an H-step on-time sequence, the model is rolled out
// step by step. Before each step the reference point is picked from the
// path by get_ref() at the current predicted pose; the pose after the step
// is charged a diagonal quadratic cost against it. The sum J is minimized
// over the normalized on-times with AdamW and a box projection onto [0, 1]
// after every update. Reference selection is not differentiated.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "fishmpc/fdm.h"
#include "fishmpc/geometry.h"
#include "fishmpc/path.h"
#include "fishmpc/tinynn.h"

namespace fishmpc {

struct GmpcConfig {
  int horizon = 10;
  int iterations = 1000;
  double lookahead_mm = 50.0;
  double lr = 0.005;
  std::array<double, 3> cost_weights{5.0, 5.0, 1.0};  // x, y, yaw
  double heading_weight = 100.0;                       // mm^2 / rad^2
  ActionBounds bounds;
  nn::AdamWConfig adamw{.beta1 = 0.9, .beta2 = 0.999, .epsilon = 1e-8,
                        .weight_decay = 0.0};

  void validate() const;
};

// |p_xy - pose_xy|^2 + w_h * wrap(p_theta - pose_theta)^2
double ref_error(const Pose2& pose, const PathPoint& p, double heading_weight);

struct RefSelection {
  std::size_t nearest_index = 0;
  std::size_t index = 0;
  PathPoint point;
};

// Nearest index by ref_error, then the point at or after it whose distance
// from the pose is closest to the look-ahead. Ties go to the smaller index.
RefSelection get_ref(const Pose2& pose, const TargetPath& path,
                     double lookahead_mm, double heading_weight);

std::size_t nearest_index(const Pose2& pose, const TargetPath& path,
                          double heading_weight);

double step_cost(const Pose2& pose, const PathPoint& ref,
                 const std::array<double, 3>& weights);

struct HorizonEvaluation {
  double cost = 0.0;
  std::vector<PathPoint> refs;     // refs[j] is charged against poses[j + 1]
  std::vector<WorldState> poses;   // start plus one per step
};

HorizonEvaluation horizon_objective(const FdmModel& m, const WorldState& s0,
                                    std::span<const Action> actions,
                                    const TargetPath& path,
                                    const GmpcConfig& cfg);

// Same objective over normalized on-times laid out (b_0, d_0, b_1, d_1, ...).
double horizon_objective_normalized(const FdmModel& m, const WorldState& s0,
                                    std::span<const double> actions_norm,
                                    const TargetPath& path,
                                    const GmpcConfig& cfg);

// dJ / d(normalized on-times), same layout as actions_norm.
std::vector<double> objective_gradient(const FdmModel& m, const WorldState& s0,
                                       std::span<const double> actions_norm,
                                       const TargetPath& path,
                                       const GmpcConfig& cfg);

struct OptimizeResult {
  std::vector<Action> actions;
  // J of the initial (projected) sequence followed by J after each update;
  // iterations + 1 entries.
  std::vector<double> cost_history;
};

// Called after every projected update with the iteration number (1-based)
// and the current sequence in ms.
using IterateObserver = std::function<void(int, std::span<const Action>)>;

// `seed` is accepted for interface stability; the optimizer itself is
// deterministic and draws no random numbers.
OptimizeResult optimize_actions(const FdmModel& m, const WorldState& s0,
                                const TargetPath& path,
                                std::span<const Action> initial,
                                const GmpcConfig& cfg, std::uint64_t seed = 0,
                                const IterateObserver& observe = {});

// One real (or simulated) step of the robot.
using Plant = std::function<LocalNextState(const LocalState&, const Action&)>;

Plant model_plant(const FdmModel& m);

struct StepRecord {
  int step = 0;
  WorldState pose;  // after the step
  Action action;
  PathPoint ref;    // reference selected before the step
  double dt_s = 0.0;
  double cost_final = 0.0;
};

struct TrajectoryLog {
  WorldState start;
  std::vector<StepRecord> steps;

  double elapsed_s() const;
};

// Receding-horizon loop: optimize, apply the first action to the plant,
// shift the plan left (repeating its last action) as the next warm start.
// Stops after max_steps or once the nearest path index is the final point.
TrajectoryLog receding_horizon(const FdmModel& m, const Plant& plant,
                               const WorldState& s0, const TargetPath& path,
                               const GmpcConfig& cfg, int max_steps,
                               std::uint64_t seed = 0);

// step,x_mm,y_mm,theta_rad,b_ms,d_ms,ref_x,ref_y,ref_theta,dt_s,J_final
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);

nlohmann::json to_json(const GmpcConfig& cfg);
GmpcConfig gmpc_config_from_json(const nlohmann::json& j);

}  // namespace fishmpc

#endif  // FISHMPC_GMPC_H_
