#ifndef FISHMPC_ILC_H_
#define FISHMPC_ILC_H_

// Imitation-learning controller distilled from G-MPC runs. The policy sees
// the robot-frame velocity and the reference point expressed in the robot
// frame, so it is invariant to rigid motions of the whole scene.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fishmpc/fdm.h"
#include "fishmpc/gmpc.h"
#include "fishmpc/path.h"

namespace fishmpc {

struct RefRel {
  double dx_mm = 0.0;
  double dy_mm = 0.0;
  double dtheta_rad = 0.0;
};

RefRel ref_in_robot_frame(const Pose2& pose, const PathPoint& ref);

struct IlcSample {
  LocalState state;
  RefRel ref_rel;
  Action action;
};

struct IlcModel {
  nn::Mlp net;  // 6 -> ... -> 2, outputs are normalized on-times
  Standardizer input;
  ActionBounds bounds;

  void validate() const;
};

// Start poses of the expert runs: every (x, y, yaw) combination, ordered
// x-major then y then yaw.
struct StartGrid {
  std::vector<double> xs_mm{50.0, 100.0, 150.0};
  std::vector<double> ys_mm{350.0, 400.0, 450.0};
  std::vector<double> yaws_rad;  // defaults to {-pi/18, 0, pi/18}

  StartGrid();
  std::vector<WorldState> starts() const;
};

// Converts a closed-loop log into one sample per control step.
std::vector<IlcSample> samples_from_log(const TrajectoryLog& log);

// Runs receding_horizon from every grid start against `plant` and
// concatenates the samples in grid order.
std::vector<IlcSample> generate_ilc_dataset(const FdmModel& m,
                                            const GmpcConfig& cfg,
                                            const TargetPath& path,
                                            const StartGrid& grid, int max_steps,
                                            std::uint64_t seed,
                                            const Plant& plant);

// Same, with the learned model itself as the plant.
std::vector<IlcSample> generate_ilc_dataset(const FdmModel& m,
                                            const GmpcConfig& cfg,
                                            const TargetPath& path,
                                            const StartGrid& grid, int max_steps,
                                            std::uint64_t seed);

struct IlcTrainConfig {
  std::vector<int> hidden_layers = {8};
  nn::TrainConfig train{.epochs = 1000, .batch_size = 32, .lr = 0.1, .adamw = {}};
  ActionBounds bounds;
};

struct IlcTrainResult {
  IlcModel model;
  std::vector<double> loss_history;
};

IlcTrainResult train_ilc(const std::vector<IlcSample>& samples,
                         const IlcTrainConfig& cfg, std::uint64_t seed);

// One forward pass, denormalized and clamped to the bounds.
Action ilc_act(const IlcModel& p, const LocalState& s, const RefRel& ref_rel);

// Closed loop with the same reference selection and stopping rule as
// receding_horizon. cost_final is NaN in the log.
TrajectoryLog ilc_control_loop(const IlcModel& p, const Plant& plant,
                               const WorldState& s0, const TargetPath& path,
                               const GmpcConfig& cfg, int max_steps);

// vx,vy,omega,ref_dx,ref_dy,ref_dtheta,b_ms,d_ms
void write_ilc_csv(std::ostream& out, const std::vector<IlcSample>& samples);
std::vector<IlcSample> read_ilc_csv(std::istream& in);

nlohmann::json to_json(const IlcModel& m);
IlcModel ilc_from_json(const nlohmann::json& j);

}  // namespace fishmpc

#endif  // FISHMPC_ILC_H_
