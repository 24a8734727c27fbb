#include "fishmpc/gmpc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "fishmpc/csv.h"

namespace fishmpc {

void GmpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("gmpc: horizon must be >= 1");
  if (iterations < 0) throw std::invalid_argument("gmpc: iterations must be >= 0");
  if (!(lookahead_mm > 0.0)) throw std::invalid_argument("gmpc: lookahead must be > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("gmpc: lr must be > 0");
  for (double w : cost_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("gmpc: cost weights must be finite and >= 0");
    }
  }
  if (!(heading_weight >= 0.0) || !std::isfinite(heading_weight)) {
    throw std::invalid_argument("gmpc: heading weight must be finite and >= 0");
  }
  bounds.validate();
}

double ref_error(const Pose2& pose, const PathPoint& p, double heading_weight) {
  const double dx = p.x_mm - pose.x_mm;
  const double dy = p.y_mm - pose.y_mm;
  const double dth = wrap_angle(p.theta_rad - pose.theta_rad);
  return dx * dx + dy * dy + heading_weight * dth * dth;
}

std::size_t nearest_index(const Pose2& pose, const TargetPath& path,
                          double heading_weight) {
  if (path.empty()) throw std::invalid_argument("get_ref: empty path");
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double e = ref_error(pose, path[i], heading_weight);
    if (e < best_err) {
      best_err = e;
      best = i;
    }
  }
  return best;
}

RefSelection get_ref(const Pose2& pose, const TargetPath& path,
                     double lookahead_mm, double heading_weight) {
  RefSelection sel;
  sel.nearest_index = nearest_index(pose, path, heading_weight);
  sel.index = sel.nearest_index;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = sel.nearest_index; i < path.size(); ++i) {
    const double dx = path[i].x_mm - pose.x_mm;
    const double dy = path[i].y_mm - pose.y_mm;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double gap = std::abs(d - lookahead_mm);
    if (gap < best_gap) {
      best_gap = gap;
      sel.index = i;
    }
  }
  sel.point = path[sel.index];
  return sel;
}

double step_cost(const Pose2& pose, const PathPoint& ref,
                 const std::array<double, 3>& weights) {
  const double ex = pose.x_mm - ref.x_mm;
  const double ey = pose.y_mm - ref.y_mm;
  const double eth = wrap_angle(pose.theta_rad - ref.theta_rad);
  return weights[0] * ex * ex + weights[1] * ey * ey + weights[2] * eth * eth;
}

namespace {

// Forward rollout with everything the reverse pass needs.
class HorizonTape {
 public:
  HorizonTape(const FdmModel& m, const GmpcConfig& cfg) : m_(m), cfg_(cfg) {
    steps_.resize(cfg.horizon);
  }

  double run(const WorldState& s0, std::span<const double> a_norm,
             const TargetPath& path) {
    if (a_norm.size() != 2 * steps_.size()) {
      throw std::invalid_argument(fmt::format(
          "gmpc: expected {} normalized on-times, got {}", 2 * steps_.size(),
          a_norm.size()));
    }
    WorldState pose = s0;
    LocalState local = world_to_local(s0);
    double total = 0.0;
    for (std::size_t j = 0; j < steps_.size(); ++j) {
      Step& st = steps_[j];
      st.pose = pose;
      st.ref = get_ref(pose_of(pose), path, cfg_.lookahead_mm,
                       cfg_.heading_weight).point;
      predict_normalized(m_, local, a_norm[2 * j], a_norm[2 * j + 1], st.eval);
      if (!is_finite(st.eval.next)) {
        throw std::runtime_error(
            fmt::format("gmpc: non-finite model prediction at horizon step {}", j));
      }
      pose = compose_world(pose, st.eval.next);
      local = rebase(st.eval.next);
      st.pose_next = pose;
      total += step_cost(pose_of(pose), st.ref, cfg_.cost_weights);
    }
    if (!std::isfinite(total)) throw std::runtime_error("gmpc: non-finite cost");
    return total;
  }

  void gradient(std::span<double> grad) const {
    const auto& w = cfg_.cost_weights;
    double gx = 0.0, gy = 0.0, gth = 0.0;
    std::array<double, 3> gl{0.0, 0.0, 0.0};
    for (std::size_t jj = steps_.size(); jj-- > 0;) {
      const Step& st = steps_[jj];
      gx += 2.0 * w[0] * (st.pose_next.x_mm - st.ref.x_mm);
      gy += 2.0 * w[1] * (st.pose_next.y_mm - st.ref.y_mm);
      gth += 2.0 * w[2] * wrap_angle(st.pose_next.theta_rad - st.ref.theta_rad);

      const LocalNextState& n = st.eval.next;
      const double c = std::cos(st.pose.theta_rad);
      const double s = std::sin(st.pose.theta_rad);
      const double cr = std::cos(n.dtheta_rad);
      const double sr = std::sin(n.dtheta_rad);

      std::array<double, 6> gn;
      gn[0] = gx * c + gy * s;
      gn[1] = -gx * s + gy * c;
      gn[2] = gth + gl[0] * (-sr * n.vx_mm_s + cr * n.vy_mm_s) +
              gl[1] * (-cr * n.vx_mm_s - sr * n.vy_mm_s);
      gn[3] = cr * gl[0] - sr * gl[1];
      gn[4] = sr * gl[0] + cr * gl[1];
      gn[5] = gl[2];

      const double gth_pose = gx * (-s * n.dx_mm - c * n.dy_mm) +
                              gy * (c * n.dx_mm - s * n.dy_mm);
      const FdmInputGradient gin = predict_backward(m_, st.eval, gn);
      grad[2 * jj] = gin.action[0];
      grad[2 * jj + 1] = gin.action[1];
      if (!std::isfinite(grad[2 * jj]) || !std::isfinite(grad[2 * jj + 1])) {
        throw std::runtime_error(
            fmt::format("gmpc: non-finite gradient at horizon step {}", jj));
      }
      gth += gth_pose;
      gl = gin.state;
    }
  }

  void export_to(HorizonEvaluation& out) const {
    out.refs.clear();
    out.poses.clear();
    if (steps_.empty()) return;
    out.poses.push_back(steps_.front().pose);
    for (const Step& st : steps_) {
      out.refs.push_back(st.ref);
      out.poses.push_back(st.pose_next);
    }
  }

 private:
  struct Step {
    WorldState pose;       // before the step
    WorldState pose_next;  // after the step
    PathPoint ref;
    FdmEvaluation eval;
  };

  const FdmModel& m_;
  const GmpcConfig& cfg_;
  std::vector<Step> steps_;
};

std::vector<double> normalize_sequence(std::span<const Action> actions,
                                       const ActionBounds& bounds) {
  std::vector<double> out;
  out.reserve(2 * actions.size());
  for (const Action& a : actions) {
    const auto an = normalize_action(a, bounds);
    out.push_back(an[0]);
    out.push_back(an[1]);
  }
  return out;
}

void check_inputs(const FdmModel& m, const GmpcConfig& cfg,
                  const TargetPath& path) {
  cfg.validate();
  m.validate();
  if (path.empty()) throw std::invalid_argument("gmpc: empty path");
}

}  // namespace

HorizonEvaluation horizon_objective(const FdmModel& m, const WorldState& s0,
                                    std::span<const Action> actions,
                                    const TargetPath& path,
                                    const GmpcConfig& cfg) {
  check_inputs(m, cfg, path);
  GmpcConfig local_cfg = cfg;
  local_cfg.horizon = static_cast<int>(actions.size());
  HorizonEvaluation out;
  if (actions.empty()) {
    out.poses.push_back(s0);
    return out;
  }
  HorizonTape tape(m, local_cfg);
  out.cost = tape.run(s0, normalize_sequence(actions, cfg.bounds), path);
  tape.export_to(out);
  return out;
}

double horizon_objective_normalized(const FdmModel& m, const WorldState& s0,
                                    std::span<const double> actions_norm,
                                    const TargetPath& path,
                                    const GmpcConfig& cfg) {
  check_inputs(m, cfg, path);
  HorizonTape tape(m, cfg);
  return tape.run(s0, actions_norm, path);
}

std::vector<double> objective_gradient(const FdmModel& m, const WorldState& s0,
                                       std::span<const double> actions_norm,
                                       const TargetPath& path,
                                       const GmpcConfig& cfg) {
  check_inputs(m, cfg, path);
  HorizonTape tape(m, cfg);
  tape.run(s0, actions_norm, path);
  std::vector<double> grad(actions_norm.size());
  tape.gradient(grad);
  return grad;
}

OptimizeResult optimize_actions(const FdmModel& m, const WorldState& s0,
                                const TargetPath& path,
                                std::span<const Action> initial,
                                const GmpcConfig& cfg, std::uint64_t /*seed*/,
                                const IterateObserver& observe) {
  check_inputs(m, cfg, path);
  if (initial.size() != static_cast<std::size_t>(cfg.horizon)) {
    throw std::invalid_argument(fmt::format(
        "optimize_actions: initial sequence has {} actions, horizon is {}",
        initial.size(), cfg.horizon));
  }
  std::vector<double> a = normalize_sequence(initial, cfg.bounds);
  for (double& v : a) v = std::clamp(v, 0.0, 1.0);

  auto to_actions = [&](std::vector<Action>& out) {
    out.clear();
    for (int j = 0; j < cfg.horizon; ++j) {
      // Normalized values are in [0, 1]; clamp guards the affine rounding.
      out.push_back(clamp_action(
          denormalize_action(a[2 * j], a[2 * j + 1], cfg.bounds), cfg.bounds));
    }
  };

  HorizonTape tape(m, cfg);
  nn::AdamWState opt(a.size(), cfg.adamw);
  std::vector<Action> current;
  std::vector<double> grad(a.size());
  OptimizeResult result;
  result.cost_history.reserve(cfg.iterations + 1);
  for (int it = 0; it < cfg.iterations; ++it) {
    result.cost_history.push_back(tape.run(s0, a, path));
    tape.gradient(grad);
    nn::adamw_step(a, grad, opt, cfg.lr);
    for (double& v : a) {
      v = std::clamp(v, 0.0, 1.0);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::logic_error("optimize_actions: projection failed");
      }
    }
    if (observe) {
      to_actions(current);
      observe(it + 1, current);
    }
  }
  result.cost_history.push_back(tape.run(s0, a, path));

  to_actions(result.actions);
  return result;
}

Plant model_plant(const FdmModel& m) {
  m.validate();
  return [&m](const LocalState& s, const Action& a) { return predict(m, s, a); };
}

double TrajectoryLog::elapsed_s() const {
  double t = 0.0;
  for (const StepRecord& r : steps) t += r.dt_s;
  return t;
}

TrajectoryLog receding_horizon(const FdmModel& m, const Plant& plant,
                               const WorldState& s0, const TargetPath& path,
                               const GmpcConfig& cfg, int max_steps,
                               std::uint64_t seed) {
  check_inputs(m, cfg, path);
  if (max_steps < 0) throw std::invalid_argument("receding_horizon: max_steps < 0");
  TrajectoryLog log;
  log.start = s0;
  WorldState pose = s0;
  LocalState local = world_to_local(s0);
  const Action mid{0.5 * (cfg.bounds.min_ms + cfg.bounds.max_ms),
                   0.5 * (cfg.bounds.min_ms + cfg.bounds.max_ms)};
  std::vector<Action> plan(cfg.horizon, mid);

  for (int k = 0; k < max_steps; ++k) {
    if (nearest_index(pose_of(pose), path, cfg.heading_weight) + 1 == path.size()) {
      break;
    }
    const RefSelection ref =
        get_ref(pose_of(pose), path, cfg.lookahead_mm, cfg.heading_weight);
    OptimizeResult opt = optimize_actions(m, pose, path, plan, cfg, seed + k);
    const Action applied = opt.actions.front();
    const LocalNextState next = plant(local, applied);
    if (!is_finite(next)) {
      throw std::runtime_error(fmt::format("receding_horizon: plant diverged at step {}", k));
    }
    pose = compose_world(pose, next);
    local = rebase(next);
    log.steps.push_back({k + 1, pose, applied, ref.point, step_duration_s(applied),
                         opt.cost_history.back()});

    std::rotate(opt.actions.begin(), opt.actions.begin() + 1, opt.actions.end());
    if (opt.actions.size() > 1) opt.actions.back() = opt.actions[opt.actions.size() - 2];
    plan = std::move(opt.actions);
  }
  return log;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  out << "step,x_mm,y_mm,theta_rad,b_ms,d_ms,ref_x,ref_y,ref_theta,dt_s,J_final\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << csv_row({0.0, log.start.x_mm, log.start.y_mm, log.start.theta_rad, nan,
                  nan, nan, nan, nan, 0.0, nan})
      << '\n';
  for (const StepRecord& r : log.steps) {
    out << csv_row({static_cast<double>(r.step), r.pose.x_mm, r.pose.y_mm,
                    r.pose.theta_rad, r.action.b_ms, r.action.d_ms, r.ref.x_mm,
                    r.ref.y_mm, r.ref.theta_rad, r.dt_s, r.cost_final})
        << '\n';
  }
}

nlohmann::json to_json(const GmpcConfig& cfg) {
  return {{"horizon", cfg.horizon},
          {"iterations", cfg.iterations},
          {"lookahead_mm", cfg.lookahead_mm},
          {"lr", cfg.lr},
          {"cost_weights", cfg.cost_weights},
          {"heading_weight", cfg.heading_weight},
          {"action_bounds", to_json(cfg.bounds)},
          {"adamw",
           {{"beta1", cfg.adamw.beta1},
            {"beta2", cfg.adamw.beta2},
            {"epsilon", cfg.adamw.epsilon},
            {"weight_decay", cfg.adamw.weight_decay}}}};
}

GmpcConfig gmpc_config_from_json(const nlohmann::json& j) {
  GmpcConfig cfg;
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.lookahead_mm = j.value("lookahead_mm", cfg.lookahead_mm);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.cost_weights = j.value("cost_weights", cfg.cost_weights);
  cfg.heading_weight = j.value("heading_weight", cfg.heading_weight);
  if (j.contains("action_bounds")) cfg.bounds = action_bounds_from_json(j["action_bounds"]);
  if (j.contains("adamw")) {
    const auto& a = j["adamw"];
    cfg.adamw.beta1 = a.value("beta1", cfg.adamw.beta1);
    cfg.adamw.beta2 = a.value("beta2", cfg.adamw.beta2);
    cfg.adamw.epsilon = a.value("epsilon", cfg.adamw.epsilon);
    cfg.adamw.weight_decay = a.value("weight_decay", cfg.adamw.weight_decay);
  }
  cfg.validate();
  return cfg;
}

}  // namespace fishmpc
