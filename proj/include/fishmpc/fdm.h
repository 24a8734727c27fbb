#ifndef FISHMPC_FDM_H_
#define FISHMPC_FDM_H_

// Learned forward dynamics: (robot-frame velocity, coil on-times) ->
// state after the action, expressed in the robot frame of the current step.
//
// Network input (5): standardized vx, vy, omega, then the two on-times
// mapped linearly to [0, 1] by the action bounds. Network output (6):
// standardized dx, dy, dtheta, vx', vy', omega'.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fishmpc/geometry.h"
#include "fishmpc/tinynn.h"

namespace fishmpc {

// Coil on-times in milliseconds. b drives the left coil, d the right.
struct Action {
  double b_ms = 550.0;
  double d_ms = 550.0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct ActionBounds {
  double min_ms = 200.0;
  double max_ms = 900.0;

  double range() const { return max_ms - min_ms; }
  // Throws std::invalid_argument unless max > min and both finite.
  void validate() const;
  bool contains(const Action& a) const;
};

// Physical duration of one control step. The coils fire back to back.
inline double step_duration_s(const Action& a) {
  return (a.b_ms + a.d_ms) / 1000.0;
}

// (v - min) / (max - min) for each on-time; no clamping.
std::array<double, 2> normalize_action(const Action& a,
                                       const ActionBounds& bounds);
Action denormalize_action(double b_norm, double d_norm,
                          const ActionBounds& bounds);
Action clamp_action(const Action& a, const ActionBounds& bounds);

// Per-dimension affine standardization (v - mean) / scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  // Population mean and standard deviation; dimensions with (near) zero
  // spread get scale 1.
  static Standardizer fit(const std::vector<std::vector<double>>& rows);
  static Standardizer identity(std::size_t dim);

  std::size_t dim() const { return mean.size(); }
  void validate(std::size_t expected_dim) const;
  double encode(std::size_t i, double v) const { return (v - mean[i]) / scale[i]; }
  double decode(std::size_t i, double z) const { return z * scale[i] + mean[i]; }
};

struct FdmNormalization {
  Standardizer state;   // vx, vy, omega
  Standardizer target;  // dx, dy, dtheta, vx', vy', omega'
  ActionBounds bounds;
};

struct FdmModel {
  nn::Mlp net;
  FdmNormalization norm;

  // Throws std::logic_error unless the network is 5 -> ... -> 6 and the
  // normalization blocks are complete.
  void validate() const;
};

struct TransitionSample {
  LocalState state;
  Action action;
  LocalNextState next;
};

std::array<double, 5> encode_input(const LocalState& s, const Action& a,
                                   const FdmNormalization& norm);
LocalState decode_state(std::span<const double> encoded,
                        const FdmNormalization& norm);

struct FdmTrainConfig {
  std::vector<int> hidden_layers = {8, 8};
  nn::TrainConfig train{.epochs = 100, .batch_size = 8, .lr = 1e-3, .adamw = {}};
  double validation_fraction = 0.1;
  ActionBounds bounds;
};

struct FdmTrainResult {
  FdmModel model;
  std::vector<double> loss_history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
  double validation_mse = 0.0;  // standardized units; 0 with no validation split
};

FdmTrainResult train_fdm(const std::vector<TransitionSample>& samples,
                         const FdmTrainConfig& cfg, std::uint64_t seed);

LocalNextState predict(const FdmModel& m, const LocalState& s, const Action& a);

// Prediction from already-normalized on-times, keeping the network cache so
// the step can be differentiated.
struct FdmEvaluation {
  nn::ForwardCache cache;
  LocalNextState next;
};
void predict_normalized(const FdmModel& m, const LocalState& s, double b_norm,
                        double d_norm, FdmEvaluation& out);

// Pulls a gradient on (dx, dy, dtheta, vx', vy', omega') back to the input
// velocities and the normalized on-times. The heading wrap is treated as
// the identity.
struct FdmInputGradient {
  std::array<double, 3> state{};   // d/d(vx, vy, omega)
  std::array<double, 2> action{};  // d/d(b_norm, d_norm)
};
FdmInputGradient predict_backward(const FdmModel& m, const FdmEvaluation& eval,
                                  const std::array<double, 6>& grad_next);

struct Rollout {
  std::vector<WorldState> poses;       // start plus one per action
  std::vector<double> step_duration_s; // one per action
};

Rollout rollout(const FdmModel& m, const WorldState& start,
                std::span<const Action> actions);

// Transition CSV: vx,vy,omega,b_ms,d_ms,dx,dy,dtheta,vx_next,vy_next,omega_next
void write_transitions_csv(std::ostream& out,
                           const std::vector<TransitionSample>& samples);
std::vector<TransitionSample> read_transitions_csv(std::istream& in);

nlohmann::json to_json(const FdmModel& m);
FdmModel fdm_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActionBounds& b);
ActionBounds action_bounds_from_json(const nlohmann::json& j);

}  // namespace fishmpc

#endif  // FISHMPC_FDM_H_
