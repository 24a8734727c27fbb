#include "fishmpc/fdm.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "fishmpc/csv.h"

namespace fishmpc {

void ActionBounds::validate() const {
  if (!std::isfinite(min_ms) || !std::isfinite(max_ms) || !(max_ms > min_ms)) {
    throw std::invalid_argument(fmt::format(
        "action bounds: need finite min < max, got [{}, {}]", min_ms, max_ms));
  }
}

bool ActionBounds::contains(const Action& a) const {
  return a.b_ms >= min_ms && a.b_ms <= max_ms && a.d_ms >= min_ms &&
         a.d_ms <= max_ms;
}

std::array<double, 2> normalize_action(const Action& a,
                                       const ActionBounds& bounds) {
  bounds.validate();
  const double r = bounds.range();
  return {(a.b_ms - bounds.min_ms) / r, (a.d_ms - bounds.min_ms) / r};
}

Action denormalize_action(double b_norm, double d_norm,
                          const ActionBounds& bounds) {
  bounds.validate();
  const double r = bounds.range();
  return {bounds.min_ms + b_norm * r, bounds.min_ms + d_norm * r};
}

Action clamp_action(const Action& a, const ActionBounds& bounds) {
  return {std::clamp(a.b_ms, bounds.min_ms, bounds.max_ms),
          std::clamp(a.d_ms, bounds.min_ms, bounds.max_ms)};
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("Standardizer::fit: no rows");
  const std::size_t dim = rows.front().size();
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += r[i];
  }
  for (double& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = r[i] - s.mean[i];
      s.scale[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    const double sd = std::sqrt(s.scale[i] / static_cast<double>(rows.size()));
    s.scale[i] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[i])) ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

void Standardizer::validate(std::size_t expected_dim) const {
  if (mean.size() != expected_dim || scale.size() != expected_dim) {
    throw std::logic_error(fmt::format(
        "standardizer: expected {} dims, have {}/{}", expected_dim,
        mean.size(), scale.size()));
  }
  for (std::size_t i = 0; i < expected_dim; ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(scale[i]) || !(scale[i] > 0.0)) {
      throw std::logic_error(fmt::format("standardizer: invalid entry {}", i));
    }
  }
}

void FdmModel::validate() const {
  if (net.empty()) throw std::logic_error("fdm: model has no network");
  if (net.input_dim() != 5 || net.output_dim() != 6) {
    throw std::logic_error(fmt::format("fdm: network must be 5 -> 6, is {} -> {}",
                                       net.input_dim(), net.output_dim()));
  }
  norm.state.validate(3);
  norm.target.validate(6);
  norm.bounds.validate();
}

std::array<double, 5> encode_input(const LocalState& s, const Action& a,
                                   const FdmNormalization& norm) {
  if (norm.state.dim() != 3) {
    throw std::logic_error("encode_input: state normalization missing");
  }
  const auto an = normalize_action(a, norm.bounds);
  return {norm.state.encode(0, s.vx_mm_s), norm.state.encode(1, s.vy_mm_s),
          norm.state.encode(2, s.omega_rad_s), an[0], an[1]};
}

LocalState decode_state(std::span<const double> encoded,
                        const FdmNormalization& norm) {
  if (encoded.size() < 3 || norm.state.dim() != 3) {
    throw std::invalid_argument("decode_state: need 3 encoded entries");
  }
  return {norm.state.decode(0, encoded[0]), norm.state.decode(1, encoded[1]),
          norm.state.decode(2, encoded[2])};
}

namespace {

std::vector<double> state_row(const LocalState& s) {
  return {s.vx_mm_s, s.vy_mm_s, s.omega_rad_s};
}

std::vector<double> target_row(const LocalNextState& n) {
  return {n.dx_mm, n.dy_mm, n.dtheta_rad, n.vx_mm_s, n.vy_mm_s, n.omega_rad_s};
}

void check_sample(const TransitionSample& s, const ActionBounds& bounds,
                  std::size_t index) {
  if (!is_finite(s.state) || !is_finite(s.next) ||
      !std::isfinite(s.action.b_ms) || !std::isfinite(s.action.d_ms)) {
    throw std::invalid_argument(
        fmt::format("train_fdm: sample {} is not finite", index));
  }
  if (!bounds.contains(s.action)) {
    throw std::invalid_argument(
        fmt::format("train_fdm: sample {} action ({}, {}) outside bounds", index,
                    s.action.b_ms, s.action.d_ms));
  }
}

}  // namespace

FdmTrainResult train_fdm(const std::vector<TransitionSample>& samples,
                         const FdmTrainConfig& cfg, std::uint64_t seed) {
  cfg.bounds.validate();
  if (samples.empty()) throw std::invalid_argument("train_fdm: no samples");
  if (samples.size() < static_cast<std::size_t>(cfg.train.batch_size)) {
    throw std::invalid_argument(fmt::format(
        "train_fdm: {} samples is fewer than batch size {}", samples.size(),
        cfg.train.batch_size));
  }
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw std::invalid_argument("train_fdm: validation_fraction must be in [0,1)");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_sample(samples[i], cfg.bounds, i);
  }

  FdmTrainResult result;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_val = static_cast<std::size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(samples.size())));
  result.validation_indices.assign(order.begin(), order.begin() + n_val);
  result.train_indices.assign(order.begin() + n_val, order.end());
  std::sort(result.validation_indices.begin(), result.validation_indices.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());

  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> targets;
  for (std::size_t i : result.train_indices) {
    states.push_back(state_row(samples[i].state));
    targets.push_back(target_row(samples[i].next));
  }
  FdmModel& model = result.model;
  model.norm.bounds = cfg.bounds;
  model.norm.state = Standardizer::fit(states);
  model.norm.target = Standardizer::fit(targets);

  auto encode = [&](const std::vector<std::size_t>& idx) {
    nn::RegressionDataset d;
    for (std::size_t i : idx) {
      const auto x = encode_input(samples[i].state, samples[i].action, model.norm);
      d.inputs.emplace_back(x.begin(), x.end());
      auto t = target_row(samples[i].next);
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = model.norm.target.encode(k, t[k]);
      d.targets.push_back(std::move(t));
    }
    return d;
  };
  const nn::RegressionDataset train = encode(result.train_indices);

  std::vector<int> dims{5};
  dims.insert(dims.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  dims.push_back(6);
  auto trained = nn::train_regression(nn::mlp_init(dims, seed), train, cfg.train,
                                      seed + 1);
  model.net = std::move(trained.net);
  result.loss_history = std::move(trained.loss_history);
  if (!result.validation_indices.empty()) {
    result.validation_mse = nn::mse(model.net, encode(result.validation_indices));
  }
  return result;
}

void predict_normalized(const FdmModel& m, const LocalState& s, double b_norm,
                        double d_norm, FdmEvaluation& out) {
  const auto& st = m.norm.state;
  const std::array<double, 5> x{st.encode(0, s.vx_mm_s), st.encode(1, s.vy_mm_s),
                                st.encode(2, s.omega_rad_s), b_norm, d_norm};
  nn::forward(m.net, x, out.cache);
  const auto y = out.cache.output();
  const auto& t = m.norm.target;
  out.next = {t.decode(0, y[0]),
              t.decode(1, y[1]),
              wrap_angle(t.decode(2, y[2])),
              t.decode(3, y[3]),
              t.decode(4, y[4]),
              t.decode(5, y[5])};
}

LocalNextState predict(const FdmModel& m, const LocalState& s, const Action& a) {
  m.validate();
  const auto an = normalize_action(a, m.norm.bounds);
  FdmEvaluation eval;
  predict_normalized(m, s, an[0], an[1], eval);
  return eval.next;
}

FdmInputGradient predict_backward(const FdmModel& m, const FdmEvaluation& eval,
                                  const std::array<double, 6>& grad_next) {
  std::array<double, 6> dy;
  for (std::size_t i = 0; i < 6; ++i) dy[i] = grad_next[i] * m.norm.target.scale[i];
  std::array<double, 5> dx;
  nn::backward(m.net, eval.cache, dy, {}, dx);
  FdmInputGradient g;
  for (std::size_t i = 0; i < 3; ++i) g.state[i] = dx[i] / m.norm.state.scale[i];
  g.action = {dx[3], dx[4]};
  return g;
}

Rollout rollout(const FdmModel& m, const WorldState& start,
                std::span<const Action> actions) {
  Rollout r;
  r.poses.reserve(actions.size() + 1);
  r.poses.push_back(start);
  LocalState local = world_to_local(start);
  for (const Action& a : actions) {
    const LocalNextState next = predict(m, local, a);
    r.poses.push_back(compose_world(r.poses.back(), next));
    r.step_duration_s.push_back(step_duration_s(a));
    local = rebase(next);
  }
  return r;
}

namespace {
const std::vector<std::string> kTransitionHeader{
    "vx", "vy", "omega", "b_ms", "d_ms", "dx", "dy", "dtheta",
    "vx_next", "vy_next", "omega_next"};
}  // namespace

void write_transitions_csv(std::ostream& out,
                           const std::vector<TransitionSample>& samples) {
  out << fmt::format("{}\n", fmt::join(kTransitionHeader, ","));
  for (const auto& s : samples) {
    out << csv_row({s.state.vx_mm_s, s.state.vy_mm_s, s.state.omega_rad_s,
                    s.action.b_ms, s.action.d_ms, s.next.dx_mm, s.next.dy_mm,
                    s.next.dtheta_rad, s.next.vx_mm_s, s.next.vy_mm_s,
                    s.next.omega_rad_s})
        << '\n';
  }
}

std::vector<TransitionSample> read_transitions_csv(std::istream& in) {
  const CsvTable t = read_csv(in, kTransitionHeader);
  std::vector<TransitionSample> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    out.push_back({{r[0], r[1], r[2]},
                   {r[3], r[4]},
                   {r[5], r[6], r[7], r[8], r[9], r[10]}});
  }
  return out;
}

nlohmann::json to_json(const Standardizer& s) {
  return {{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<std::vector<double>>(),
          j.at("scale").get<std::vector<double>>()};
}

nlohmann::json to_json(const ActionBounds& b) {
  return {{"min_ms", b.min_ms}, {"max_ms", b.max_ms}};
}

ActionBounds action_bounds_from_json(const nlohmann::json& j) {
  ActionBounds b{j.at("min_ms").get<double>(), j.at("max_ms").get<double>()};
  b.validate();
  return b;
}

nlohmann::json to_json(const FdmModel& m) {
  return {{"kind", "fdm"},
          {"network", nn::to_json(m.net)},
          {"normalization",
           {{"state", to_json(m.norm.state)}, {"target", to_json(m.norm.target)}}},
          {"action_bounds", to_json(m.norm.bounds)}};
}

FdmModel fdm_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "fdm") throw std::runtime_error("model json: not an fdm model");
  FdmModel m;
  m.net = nn::mlp_from_json(j.at("network"));
  m.norm.state = standardizer_from_json(j.at("normalization").at("state"));
  m.norm.target = standardizer_from_json(j.at("normalization").at("target"));
  m.norm.bounds = action_bounds_from_json(j.at("action_bounds"));
  m.validate();
  return m;
}

}  // namespace fishmpc
