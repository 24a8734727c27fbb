#include "fishmpc/simharness.h"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

namespace fishmpc {

void SurrogateParams::validate() const {
  if (!(k_fwd > 0.0)) throw std::invalid_argument("surrogate: k_fwd must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("surrogate: momentum must be in [0, 1)");
  }
  if (!std::isfinite(k_turn) || !std::isfinite(k_lat)) {
    throw std::invalid_argument("surrogate: gains must be finite");
  }
  bounds.validate();
}

LocalNextState surrogate_step(const SurrogateParams& p, const LocalState& s,
                              const Action& a) {
  const auto an = normalize_action(a, p.bounds);
  const double dt = step_duration_s(a);
  if (!(dt > 0.0)) throw std::invalid_argument("surrogate: step duration must be > 0");
  const double diff = an[1] - an[0];
  LocalNextState n;
  n.dtheta_rad = wrap_angle(p.k_turn * diff);
  n.dx_mm = p.k_fwd * (an[0] + an[1]) / 2.0 + p.momentum * s.vx_mm_s * dt;
  n.dy_mm = p.k_lat * diff / 2.0 + p.momentum * s.vy_mm_s * dt;
  n.vx_mm_s = n.dx_mm / dt;
  n.vy_mm_s = n.dy_mm / dt;
  n.omega_rad_s = n.dtheta_rad / dt;
  return n;
}

Plant surrogate_plant(const SurrogateParams& p, double noise_std_mm,
                      std::uint64_t seed) {
  p.validate();
  if (!(noise_std_mm > 0.0)) {
    return [p](const LocalState& s, const Action& a) { return surrogate_step(p, s, a); };
  }
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [p, rng, noise_std_mm](const LocalState& s, const Action& a) {
    LocalNextState n = surrogate_step(p, s, a);
    std::normal_distribution<double> noise(0.0, noise_std_mm);
    n.dx_mm += noise(*rng);
    n.dy_mm += noise(*rng);
    return n;
  };
}

ActionSampler uniform_action_sampler(const ActionBounds& bounds) {
  bounds.validate();
  return [bounds](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(bounds.min_ms, bounds.max_ms);
    const double b = u(rng);
    const double d = u(rng);
    return Action{b, d};
  };
}

std::vector<TransitionSample> collect_transitions(const SurrogateParams& p, int n,
                                                  std::uint64_t seed,
                                                  const ActionSampler& sampler) {
  p.validate();
  if (n < 1) throw std::invalid_argument("collect_transitions: n must be >= 1");
  const ActionSampler draw = sampler ? sampler : uniform_action_sampler(p.bounds);
  std::mt19937_64 rng(seed);
  std::vector<TransitionSample> out;
  out.reserve(n);
  LocalState local;
  for (int i = 0; i < n; ++i) {
    const Action a = clamp_action(draw(rng), p.bounds);
    const LocalNextState next = surrogate_step(p, local, a);
    out.push_back({local, a, next});
    local = rebase(next);
  }
  return out;
}

std::vector<double> step_deviations(const TrajectoryLog& log) {
  std::vector<double> out;
  out.reserve(log.steps.size());
  for (const StepRecord& r : log.steps) {
    out.push_back(std::hypot(r.pose.x_mm - r.ref.x_mm, r.pose.y_mm - r.ref.y_mm));
  }
  return out;
}

double rmse(const TrajectoryLog& log) {
  if (log.steps.empty()) throw std::invalid_argument("rmse: log has no steps");
  double sum = 0.0;
  for (const StepRecord& r : log.steps) {
    const double dx = r.pose.x_mm - r.ref.x_mm;
    const double dy = r.pose.y_mm - r.ref.y_mm;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(log.steps.size()));
}

TargetPath PathSpec::build() const {
  return make_right_turn_path(start, radius_scale_mm, points);
}

RunReport run_scenario(const ScenarioConfig& cfg, const FdmModel* fdm,
                       const IlcModel* ilc) {
  const auto inside = [&](double x, double y) {
    return x >= 0.0 && x <= cfg.tank_size_mm && y >= 0.0 && y <= cfg.tank_size_mm;
  };
  if (!is_finite(cfg.start) || !inside(cfg.start.x_mm, cfg.start.y_mm)) {
    throw std::invalid_argument(fmt::format(
        "scenario '{}': start ({}, {}) outside the {} mm tank", cfg.name,
        cfg.start.x_mm, cfg.start.y_mm, cfg.tank_size_mm));
  }
  if (cfg.controller == ControllerKind::kExpert && fdm == nullptr) {
    throw std::invalid_argument(
        fmt::format("scenario '{}': expert controller needs a dynamics model", cfg.name));
  }
  if (cfg.controller == ControllerKind::kDistilled && ilc == nullptr) {
    throw std::invalid_argument(
        fmt::format("scenario '{}': distilled controller needs a policy model", cfg.name));
  }
  if (cfg.plant == PlantKind::kModel && fdm == nullptr) {
    throw std::invalid_argument(
        fmt::format("scenario '{}': model plant needs a dynamics model", cfg.name));
  }

  const TargetPath path = cfg.path.build();
  const Plant plant = cfg.plant == PlantKind::kSurrogate
                          ? surrogate_plant(cfg.surrogate, cfg.plant_noise_std_mm,
                                            cfg.seed)
                          : model_plant(*fdm);

  RunReport report;
  report.name = cfg.name;
  report.log = cfg.controller == ControllerKind::kExpert
                   ? receding_horizon(*fdm, plant, cfg.start, path, cfg.gmpc,
                                      cfg.max_steps, cfg.seed)
                   : ilc_control_loop(*ilc, plant, cfg.start, path, cfg.gmpc,
                                      cfg.max_steps);
  report.deviations_mm = step_deviations(report.log);
  report.rmse_mm = report.log.steps.empty() ? 0.0 : rmse(report.log);
  report.elapsed_s = report.log.elapsed_s();
  for (const StepRecord& r : report.log.steps) {
    if (!inside(r.pose.x_mm, r.pose.y_mm)) report.stayed_in_tank = false;
  }
  return report;
}

std::vector<ScenarioConfig> three_start_scenarios(const ScenarioConfig& base) {
  std::vector<ScenarioConfig> out;
  const struct {
    const char* name;
    double offset;
  } starts[] = {{"above", 50.0}, {"on", 0.0}, {"below", -50.0}};
  for (const auto& s : starts) {
    ScenarioConfig c = base;
    c.name = s.name;
    c.start = {base.path.start.x_mm, base.path.start.y_mm + s.offset,
               base.path.start.theta_rad, 0.0, 0.0, 0.0};
    out.push_back(c);
  }
  return out;
}

nlohmann::json to_json(const SurrogateParams& p) {
  return {{"k_fwd", p.k_fwd},
          {"k_turn", p.k_turn},
          {"k_lat", p.k_lat},
          {"momentum", p.momentum},
          {"action_bounds", to_json(p.bounds)}};
}

SurrogateParams surrogate_params_from_json(const nlohmann::json& j) {
  SurrogateParams p;
  p.k_fwd = j.value("k_fwd", p.k_fwd);
  p.k_turn = j.value("k_turn", p.k_turn);
  p.k_lat = j.value("k_lat", p.k_lat);
  p.momentum = j.value("momentum", p.momentum);
  if (j.contains("action_bounds")) p.bounds = action_bounds_from_json(j["action_bounds"]);
  p.validate();
  return p;
}

nlohmann::json to_json(const RunReport& r, const ScenarioConfig& cfg) {
  nlohmann::json start{{"x_mm", cfg.start.x_mm},
                       {"y_mm", cfg.start.y_mm},
                       {"theta_rad", cfg.start.theta_rad}};
  nlohmann::json path{{"start",
                       {{"x_mm", cfg.path.start.x_mm},
                        {"y_mm", cfg.path.start.y_mm},
                        {"theta_rad", cfg.path.start.theta_rad}}},
                      {"radius_scale_mm", cfg.path.radius_scale_mm},
                      {"points", cfg.path.points}};
  return {{"name", r.name},
          {"rmse_mm", r.rmse_mm},
          {"steps", r.log.steps.size()},
          {"elapsed_s", r.elapsed_s},
          {"stayed_in_tank", r.stayed_in_tank},
          {"deviations_mm", r.deviations_mm},
          {"config",
           {{"controller",
             cfg.controller == ControllerKind::kExpert ? "expert" : "distilled"},
            {"plant", cfg.plant == PlantKind::kSurrogate ? "surrogate" : "model"},
            {"start", start},
            {"path", path},
            {"max_steps", cfg.max_steps},
            {"seed", cfg.seed},
            {"tank_size_mm", cfg.tank_size_mm},
            {"plant_noise_std_mm", cfg.plant_noise_std_mm},
            {"surrogate", to_json(cfg.surrogate)},
            {"gmpc", to_json(cfg.gmpc)}}}};
}

}  // namespace fishmpc
