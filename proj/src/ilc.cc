#include "fishmpc/ilc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "fishmpc/csv.h"

namespace fishmpc {

RefRel ref_in_robot_frame(const Pose2& pose, const PathPoint& ref) {
  const Vec2 d = rotate({ref.x_mm - pose.x_mm, ref.y_mm - pose.y_mm}, -pose.theta_rad);
  return {d.x, d.y, wrap_angle(ref.theta_rad - pose.theta_rad)};
}

void IlcModel::validate() const {
  if (net.empty()) throw std::logic_error("ilc: model has no network");
  if (net.input_dim() != 6 || net.output_dim() != 2) {
    throw std::logic_error(fmt::format("ilc: network must be 6 -> 2, is {} -> {}",
                                       net.input_dim(), net.output_dim()));
  }
  input.validate(6);
  bounds.validate();
}

StartGrid::StartGrid()
    : yaws_rad{-std::numbers::pi / 18.0, 0.0, std::numbers::pi / 18.0} {}

std::vector<WorldState> StartGrid::starts() const {
  std::vector<WorldState> out;
  for (double x : xs_mm) {
    for (double y : ys_mm) {
      for (double yaw : yaws_rad) out.push_back({x, y, wrap_angle(yaw), 0.0, 0.0, 0.0});
    }
  }
  return out;
}

std::vector<IlcSample> samples_from_log(const TrajectoryLog& log) {
  std::vector<IlcSample> out;
  out.reserve(log.steps.size());
  WorldState before = log.start;
  for (const StepRecord& r : log.steps) {
    out.push_back({world_to_local(before), ref_in_robot_frame(pose_of(before), r.ref),
                   r.action});
    before = r.pose;
  }
  return out;
}

std::vector<IlcSample> generate_ilc_dataset(const FdmModel& m,
                                            const GmpcConfig& cfg,
                                            const TargetPath& path,
                                            const StartGrid& grid, int max_steps,
                                            std::uint64_t seed,
                                            const Plant& plant) {
  std::vector<IlcSample> out;
  const auto starts = grid.starts();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const TrajectoryLog log =
        receding_horizon(m, plant, starts[i], path, cfg, max_steps, seed + 1000 * i);
    const auto part = samples_from_log(log);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<IlcSample> generate_ilc_dataset(const FdmModel& m,
                                            const GmpcConfig& cfg,
                                            const TargetPath& path,
                                            const StartGrid& grid, int max_steps,
                                            std::uint64_t seed) {
  return generate_ilc_dataset(m, cfg, path, grid, max_steps, seed, model_plant(m));
}

namespace {

std::vector<double> input_row(const LocalState& s, const RefRel& r) {
  return {s.vx_mm_s, s.vy_mm_s, s.omega_rad_s, r.dx_mm, r.dy_mm, r.dtheta_rad};
}

}  // namespace

IlcTrainResult train_ilc(const std::vector<IlcSample>& samples,
                         const IlcTrainConfig& cfg, std::uint64_t seed) {
  cfg.bounds.validate();
  if (samples.empty()) throw std::invalid_argument("train_ilc: no samples");
  if (samples.size() < static_cast<std::size_t>(cfg.train.batch_size)) {
    throw std::invalid_argument(fmt::format(
        "train_ilc: {} samples is fewer than batch size {}", samples.size(),
        cfg.train.batch_size));
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const IlcSample& s : samples) rows.push_back(input_row(s.state, s.ref_rel));

  IlcTrainResult result;
  IlcModel& model = result.model;
  model.bounds = cfg.bounds;
  model.input = Standardizer::fit(rows);

  nn::RegressionDataset data;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& x = rows[i];
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = model.input.encode(k, x[k]);
    data.inputs.push_back(std::move(x));
    const auto an = normalize_action(samples[i].action, cfg.bounds);
    data.targets.push_back({an[0], an[1]});
  }

  std::vector<int> dims{6};
  dims.insert(dims.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  dims.push_back(2);
  auto trained =
      nn::train_regression(nn::mlp_init(dims, seed), data, cfg.train, seed + 1);
  model.net = std::move(trained.net);
  result.loss_history = std::move(trained.loss_history);
  return result;
}

Action ilc_act(const IlcModel& p, const LocalState& s, const RefRel& ref_rel) {
  p.validate();
  auto x = input_row(s, ref_rel);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = p.input.encode(k, x[k]);
  nn::ForwardCache cache;
  nn::forward(p.net, x, cache);
  const auto y = cache.output();
  return clamp_action(denormalize_action(y[0], y[1], p.bounds), p.bounds);
}

TrajectoryLog ilc_control_loop(const IlcModel& p, const Plant& plant,
                               const WorldState& s0, const TargetPath& path,
                               const GmpcConfig& cfg, int max_steps) {
  p.validate();
  cfg.validate();
  if (max_steps < 0) throw std::invalid_argument("ilc_control_loop: max_steps < 0");
  TrajectoryLog log;
  log.start = s0;
  WorldState pose = s0;
  LocalState local = world_to_local(s0);
  for (int k = 0; k < max_steps; ++k) {
    if (nearest_index(pose_of(pose), path, cfg.heading_weight) + 1 == path.size()) {
      break;
    }
    const RefSelection ref =
        get_ref(pose_of(pose), path, cfg.lookahead_mm, cfg.heading_weight);
    const Action a = ilc_act(p, local, ref_in_robot_frame(pose_of(pose), ref.point));
    const LocalNextState next = plant(local, a);
    if (!is_finite(next)) {
      throw std::runtime_error(fmt::format("ilc_control_loop: plant diverged at step {}", k));
    }
    pose = compose_world(pose, next);
    local = rebase(next);
    log.steps.push_back({k + 1, pose, a, ref.point, step_duration_s(a),
                         std::numeric_limits<double>::quiet_NaN()});
  }
  return log;
}

namespace {
const std::vector<std::string> kIlcHeader{"vx",     "vy",     "omega",      "ref_dx",
                                          "ref_dy", "ref_dtheta", "b_ms", "d_ms"};
}  // namespace

void write_ilc_csv(std::ostream& out, const std::vector<IlcSample>& samples) {
  out << fmt::format("{}\n", fmt::join(kIlcHeader, ","));
  for (const IlcSample& s : samples) {
    out << csv_row({s.state.vx_mm_s, s.state.vy_mm_s, s.state.omega_rad_s,
                    s.ref_rel.dx_mm, s.ref_rel.dy_mm, s.ref_rel.dtheta_rad,
                    s.action.b_ms, s.action.d_ms})
        << '\n';
  }
}

std::vector<IlcSample> read_ilc_csv(std::istream& in) {
  const CsvTable t = read_csv(in, kIlcHeader);
  std::vector<IlcSample> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    out.push_back({{r[0], r[1], r[2]}, {r[3], r[4], r[5]}, {r[6], r[7]}});
  }
  return out;
}

nlohmann::json to_json(const IlcModel& m) {
  return {{"kind", "ilc"},
          {"network", nn::to_json(m.net)},
          {"normalization", {{"input", to_json(m.input)}}},
          {"action_bounds", to_json(m.bounds)}};
}

IlcModel ilc_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "ilc") throw std::runtime_error("model json: not an ilc model");
  IlcModel m;
  m.net = nn::mlp_from_json(j.at("network"));
  m.input = standardizer_from_json(j.at("normalization").at("input"));
  m.bounds = action_bounds_from_json(j.at("action_bounds"));
  m.validate();
  return m;
}

}  // namespace fishmpc
