#ifndef FISHMPC_SIMHARNESS_H_
#define FISHMPC_SIMHARNESS_H_

// Synthetic ground-truth plant, transition collection, and closed-loop
// scenario runs scored by RMSE against the per-step reference points.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fishmpc/fdm.h"
#include "fishmpc/gmpc.h"
#include "fishmpc/ilc.h"
#include "fishmpc/path.h"

namespace fishmpc {

// Closed-form stand-in for the swimming robot. With on-times normalized to
// [0, 1] and dt = (b + d) / 1000 s:
//   dtheta = k_turn * (d_n - b_n)
//   dx     = k_fwd * (b_n + d_n) / 2 + momentum * vx * dt
//   dy     = k_lat * (d_n - b_n) / 2 + momentum * vy * dt
// and the exit velocity is (dx, dy) / dt in the frame of the step, with
// omega = dtheta / dt.
struct SurrogateParams {
  double k_fwd = 40.0;   // mm
  double k_turn = 0.6;   // rad
  double k_lat = 5.0;    // mm
  double momentum = 0.3;
  ActionBounds bounds;

  void validate() const;
};

LocalNextState surrogate_step(const SurrogateParams& p, const LocalState& s,
                              const Action& a);

// Deterministic unless noise_std_mm > 0, in which case zero-mean Gaussian
// noise is added to dx and dy from a generator seeded with `seed`.
Plant surrogate_plant(const SurrogateParams& p, double noise_std_mm = 0.0,
                      std::uint64_t seed = 0);

using ActionSampler = std::function<Action(std::mt19937_64&)>;

ActionSampler uniform_action_sampler(const ActionBounds& bounds);

// n transitions from one chained run of the surrogate under sampled actions.
std::vector<TransitionSample> collect_transitions(const SurrogateParams& p, int n,
                                                  std::uint64_t seed,
                                                  const ActionSampler& sampler = {});

// Distance between each step's reference point and the position reached.
std::vector<double> step_deviations(const TrajectoryLog& log);

double rmse(const TrajectoryLog& log);

enum class ControllerKind { kExpert, kDistilled };
enum class PlantKind { kSurrogate, kModel };

struct PathSpec {
  PathPoint start{100.0, 400.0, 0.0};
  double radius_scale_mm = 150.0;
  int points = 200;

  TargetPath build() const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  WorldState start{100.0, 400.0, 0.0, 0.0, 0.0, 0.0};
  PathSpec path;
  ControllerKind controller = ControllerKind::kExpert;
  PlantKind plant = PlantKind::kSurrogate;
  SurrogateParams surrogate;
  double plant_noise_std_mm = 0.0;
  GmpcConfig gmpc;
  int max_steps = 40;
  std::uint64_t seed = 0;
  double tank_size_mm = 600.0;
};

struct RunReport {
  std::string name;
  TrajectoryLog log;
  double rmse_mm = 0.0;
  std::vector<double> deviations_mm;
  double elapsed_s = 0.0;
  bool stayed_in_tank = true;
};

// Expert runs need `fdm`; distilled runs need `ilc` (and `fdm` only when
// the plant is the learned model). Throws std::invalid_argument for a
// missing model or a start outside the tank.
RunReport run_scenario(const ScenarioConfig& cfg, const FdmModel* fdm,
                       const IlcModel* ilc);

// The three reference starts: above (y+50), on, and below (y-50) the path
// start, other state zero.
std::vector<ScenarioConfig> three_start_scenarios(const ScenarioConfig& base);

nlohmann::json to_json(const RunReport& r, const ScenarioConfig& cfg);
nlohmann::json to_json(const SurrogateParams& p);
SurrogateParams surrogate_params_from_json(const nlohmann::json& j);

}  // namespace fishmpc

#endif  // FISHMPC_SIMHARNESS_H_
