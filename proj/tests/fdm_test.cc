#include "fishmpc/fdm.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fishmpc/simharness.h"
#include "fixtures.h"

namespace fishmpc {
namespace {

TEST(ActionTest, NormalizeExamples) {
  const ActionBounds bounds;
  EXPECT_EQ(normalize_action({200.0, 900.0}, bounds), (std::array<double, 2>{0.0, 1.0}));
  EXPECT_EQ(normalize_action({550.0, 550.0}, bounds)[0], 0.5);
  // No clamping in the map itself.
  EXPECT_LT(normalize_action({100.0, 1100.0}, bounds)[0], 0.0);
  EXPECT_GT(normalize_action({100.0, 1100.0}, bounds)[1], 1.0);
}

TEST(ActionTest, DenormalizeInvertsNormalize) {
  const ActionBounds bounds;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Action a = fixtures::random_action(rng);
    const auto n = normalize_action(a, bounds);
    const Action back = denormalize_action(n[0], n[1], bounds);
    EXPECT_NEAR(back.b_ms, a.b_ms, 1e-10);
    EXPECT_NEAR(back.d_ms, a.d_ms, 1e-10);
  }
}

TEST(ActionTest, BadBoundsRejected) {
  EXPECT_THROW(normalize_action({}, ActionBounds{900.0, 200.0}), std::invalid_argument);
  EXPECT_THROW(normalize_action({}, ActionBounds{500.0, 500.0}), std::invalid_argument);
}

TEST(ActionTest, ClampAndDuration) {
  const Action c = clamp_action({100.0, 1100.0}, ActionBounds{});
  EXPECT_EQ(c, (Action{200.0, 900.0}));
  EXPECT_DOUBLE_EQ(step_duration_s({900.0, 200.0}), 1.1);
}

FdmNormalization sample_norm() {
  FdmNormalization n;
  n.state = {{10.0, -2.0, 0.1}, {5.0, 2.0, 0.5}};
  n.target = Standardizer::identity(6);
  return n;
}

TEST(EncodeInputTest, MeanStateEncodesToZero) {
  const auto x = encode_input({10.0, -2.0, 0.1}, {550.0, 550.0}, sample_norm());
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(x[2], 0.0);
  EXPECT_EQ(x[3], 0.5);
}

TEST(EncodeInputTest, BoundActionsEncodeToUnitInterval) {
  const auto x = encode_input({}, {200.0, 900.0}, sample_norm());
  EXPECT_EQ(x[3], 0.0);
  EXPECT_EQ(x[4], 1.0);
}

TEST(EncodeInputTest, DecodeInvertsEncode) {
  const auto norm = sample_norm();
  const LocalState s{13.5, -7.25, 0.8};
  const auto x = encode_input(s, {}, norm);
  const LocalState back = decode_state(std::span<const double>(x.data(), 3), norm);
  EXPECT_NEAR(back.vx_mm_s, s.vx_mm_s, 1e-12);
  EXPECT_NEAR(back.vy_mm_s, s.vy_mm_s, 1e-12);
  EXPECT_NEAR(back.omega_rad_s, s.omega_rad_s, 1e-12);
}

TEST(EncodeInputTest, MissingNormalizationThrows) {
  EXPECT_THROW(encode_input({}, {}, FdmNormalization{}), std::logic_error);
}

TEST(StandardizerTest, FitUsesPopulationStatistics) {
  const auto s = Standardizer::fit({{1.0, 5.0}, {3.0, 5.0}});
  EXPECT_EQ(s.mean, (std::vector<double>{2.0, 5.0}));
  EXPECT_EQ(s.scale[0], 1.0);
  EXPECT_EQ(s.scale[1], 1.0);  // constant column
  const auto t = Standardizer::fit({{0.0}, {4.0}});
  EXPECT_DOUBLE_EQ(t.scale[0], 2.0);
}

TEST(TrainFdmTest, LossDropsOnSurrogateData) {
  const auto& r = fixtures::surrogate_fdm();
  ASSERT_EQ(r.loss_history.size(), 100u);
  EXPECT_LT(r.loss_history.back(), 0.1 * r.loss_history.front());
  EXPECT_EQ(r.validation_indices.size(), 30u);
  EXPECT_EQ(r.train_indices.size(), 270u);
  EXPECT_NO_THROW(r.model.validate());
}

TEST(TrainFdmTest, DeterministicUnderSeed) {
  const auto data = collect_transitions(SurrogateParams{}, 60, 4);
  FdmTrainConfig cfg;
  cfg.train.epochs = 10;
  const auto a = train_fdm(data, cfg, 8);
  const auto b = train_fdm(data, cfg, 8);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
}

TEST(TrainFdmTest, SingleSampleIsMemorized) {
  const auto data = collect_transitions(SurrogateParams{}, 3, 2);
  FdmTrainConfig cfg;
  cfg.train.batch_size = 1;
  cfg.train.epochs = 300;
  cfg.train.lr = 1e-2;
  const auto r = train_fdm({data[2]}, cfg, 5);
  EXPECT_LT(r.loss_history.back(), 1e-6);
  const LocalNextState p = predict(r.model, data[2].state, data[2].action);
  EXPECT_NEAR(p.dx_mm, data[2].next.dx_mm, 1e-2);
  EXPECT_NEAR(p.dtheta_rad, data[2].next.dtheta_rad, 1e-4);
}

TEST(TrainFdmTest, InputErrors) {
  const FdmTrainConfig cfg;
  EXPECT_THROW(train_fdm({}, cfg, 1), std::invalid_argument);
  auto data = collect_transitions(SurrogateParams{}, 20, 1);
  auto bad = data;
  bad[3].next.dx_mm = std::nan("");
  EXPECT_THROW(train_fdm(bad, cfg, 1), std::invalid_argument);
  bad = data;
  bad[0].action.b_ms = 1000.0;
  EXPECT_THROW(train_fdm(bad, cfg, 1), std::invalid_argument);
  data.resize(4);
  EXPECT_THROW(train_fdm(data, cfg, 1), std::invalid_argument);  // fewer than batch
}

TEST(PredictTest, HeldOutPositionErrorBelowTenPercent) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  // Fresh run from a different seed: none of these were trained on.
  const auto held_out = collect_transitions(SurrogateParams{}, 50, 999);
  std::vector<double> err, disp;
  for (const auto& s : held_out) {
    const auto p = predict(fdm, s.state, s.action);
    err.push_back(std::hypot(p.dx_mm - s.next.dx_mm, p.dy_mm - s.next.dy_mm));
    disp.push_back(std::hypot(s.next.dx_mm, s.next.dy_mm));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
  };
  EXPECT_LT(median(err), 0.1 * median(disp));
}

TEST(PredictTest, DeterministicAndFinite) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const LocalState s = world_to_local(fixtures::random_state(rng));
    const Action a = fixtures::random_action(rng);
    const auto p = predict(fdm, s, a);
    const auto q = predict(fdm, s, a);
    EXPECT_TRUE(is_finite(p));
    EXPECT_EQ(p.dx_mm, q.dx_mm);
    EXPECT_EQ(p.omega_rad_s, q.omega_rad_s);
    EXPECT_GT(p.dtheta_rad, -M_PI);
    EXPECT_LE(p.dtheta_rad, M_PI);
  }
}

TEST(PredictTest, InvalidModelThrows) {
  EXPECT_THROW(predict(FdmModel{}, {}, {}), std::logic_error);
}

TEST(RolloutTest, EmptyActionsGiveStartOnly) {
  const WorldState s0{10.0, 20.0, 0.3, 1.0, 2.0, 0.1};
  const auto r = rollout(fixtures::surrogate_fdm().model, s0, {});
  ASSERT_EQ(r.poses.size(), 1u);
  EXPECT_EQ(r.poses[0].x_mm, 10.0);
  EXPECT_TRUE(r.step_duration_s.empty());
}

TEST(RolloutTest, OneStepIsPredictThenCompose) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  const WorldState s0{100.0, 400.0, 0.2, 15.0, -1.0, 0.05};
  const Action a{700.0, 300.0};
  const auto r = rollout(fdm, s0, std::vector<Action>{a});
  const WorldState expect = compose_world(s0, predict(fdm, world_to_local(s0), a));
  ASSERT_EQ(r.poses.size(), 2u);
  EXPECT_EQ(r.poses[1].x_mm, expect.x_mm);
  EXPECT_EQ(r.poses[1].y_mm, expect.y_mm);
  EXPECT_EQ(r.poses[1].theta_rad, expect.theta_rad);
  EXPECT_EQ(r.step_duration_s[0], 1.0);
}

TEST(RolloutTest, MatchesManualChaining) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const WorldState s0 = fixtures::random_state(rng);
    std::vector<Action> actions(10);
    for (auto& a : actions) a = fixtures::random_action(rng);
    const auto r = rollout(fdm, s0, actions);
    ASSERT_EQ(r.poses.size(), 11u);
    WorldState pose = s0;
    LocalState local = world_to_local(s0);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      const auto next = predict(fdm, local, actions[k]);
      pose = compose_world(pose, next);
      local = rebase(next);
      EXPECT_NEAR(r.poses[k + 1].x_mm, pose.x_mm, 1e-12 * (1.0 + std::abs(pose.x_mm)));
      EXPECT_NEAR(r.poses[k + 1].y_mm, pose.y_mm, 1e-12 * (1.0 + std::abs(pose.y_mm)));
      EXPECT_NEAR(r.poses[k + 1].theta_rad, pose.theta_rad, 1e-12);
      EXPECT_DOUBLE_EQ(r.step_duration_s[k], step_duration_s(actions[k]));
    }
  }
}

// Moving the start pose rigidly moves the whole rollout with it.
TEST(RolloutTest, RigidFrameInvariance) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> shift(-200.0, 200.0), turn(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    WorldState s0 = fixtures::random_state(rng);
    std::vector<Action> actions(10);
    for (auto& a : actions) a = fixtures::random_action(rng);
    const double tx = shift(rng), ty = shift(rng), phi = turn(rng);
    WorldState moved = s0;
    const Vec2 p = rotate({s0.x_mm, s0.y_mm}, phi);
    const Vec2 v = rotate({s0.vx_mm_s, s0.vy_mm_s}, phi);
    moved.x_mm = p.x + tx;
    moved.y_mm = p.y + ty;
    moved.theta_rad = wrap_angle(s0.theta_rad + phi);
    moved.vx_mm_s = v.x;
    moved.vy_mm_s = v.y;
    const auto a = rollout(fdm, s0, actions);
    const auto b = rollout(fdm, moved, actions);
    for (std::size_t k = 0; k < a.poses.size(); ++k) {
      const Vec2 q = rotate({a.poses[k].x_mm, a.poses[k].y_mm}, phi);
      EXPECT_NEAR(b.poses[k].x_mm, q.x + tx, 1e-9);
      EXPECT_NEAR(b.poses[k].y_mm, q.y + ty, 1e-9);
      EXPECT_NEAR(std::remainder(b.poses[k].theta_rad - a.poses[k].theta_rad - phi, 2 * M_PI),
                  0.0, 1e-12);
    }
  }
}

TEST(FdmIoTest, TransitionCsvRoundTrip) {
  const auto data = collect_transitions(SurrogateParams{}, 25, 3);
  std::stringstream ss;
  write_transitions_csv(ss, data);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "vx,vy,omega,b_ms,d_ms,dx,dy,dtheta,vx_next,vy_next,omega_next");
  const auto back = read_transitions_csv(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].action, data[i].action);
    EXPECT_EQ(back[i].next.dx_mm, data[i].next.dx_mm);
    EXPECT_EQ(back[i].state.omega_rad_s, data[i].state.omega_rad_s);
  }
}

TEST(FdmIoTest, ModelJsonRoundTripPredictsIdentically) {
  const auto& fdm = fixtures::surrogate_fdm().model;
  const FdmModel back = fdm_from_json(nlohmann::json::parse(to_json(fdm).dump()));
  const LocalState s{12.0, -3.0, 0.2};
  const Action a{300.0, 800.0};
  const auto p = predict(fdm, s, a);
  const auto q = predict(back, s, a);
  EXPECT_EQ(p.dx_mm, q.dx_mm);
  EXPECT_EQ(p.dy_mm, q.dy_mm);
  EXPECT_EQ(p.vx_mm_s, q.vx_mm_s);
  EXPECT_EQ(to_json(back).dump(), to_json(fdm).dump());
}

TEST(FdmIoTest, WrongKindRejected) {
  auto j = to_json(fixtures::surrogate_fdm().model);
  j["kind"] = "ilc";
  EXPECT_THROW(fdm_from_json(j), std::runtime_error);
}

}  // namespace
}  // namespace fishmpc
