// End-to-end acceptance run: one PASS/FAIL line per criterion, each with
// its measured values, tolerance and wall-clock budget. Exits nonzero if
// any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fishmpc/fdm.h"
#include "fishmpc/geometry.h"
#include "fishmpc/gmpc.h"
#include "fishmpc/ilc.h"
#include "fishmpc/pipeline.h"
#include "fishmpc/simharness.h"
#include "gradcheck.h"
#include "oracles.h"

namespace {

using namespace fishmpc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return 0.5 * (v[(n - 1) / 2] + v[n / 2]);
}

// Shared expensive fixture: the default 300-transition dynamics model.
const FdmTrainResult& default_fdm() {
  static const FdmTrainResult r =
      train_fdm(collect_transitions(SurrogateParams{}, 300, 1), FdmTrainConfig{}, 1);
  return r;
}

Outcome gradient_exactness() {
  std::mt19937_64 rng(101);
  double worst_net = 0.0;
  const int nets = 120;
  for (int t = 0; t < nets; ++t) worst_net = std::max(worst_net, gradcheck::random_mlp_case(rng, t));

  const auto& fdm = default_fdm().model;
  const TargetPath path = PathSpec{}.build();
  double worst_mpc = 0.0;
  int checked = 0, skipped = 0, extrapolated = 0;
  const int configs = 30;
  for (int t = 0; t < configs; ++t) {
    const auto g = gradcheck::random_gmpc_instance(rng);
    const auto r = gradcheck::gmpc_case(fdm, g.s0, g.actions_norm, path, g.cfg);
    worst_mpc = std::max(worst_mpc, r.worst);
    checked += r.checked;
    skipped += r.skipped;
    extrapolated += r.extrapolated;
  }
  const bool ok = worst_net <= 1e-5 && worst_mpc <= 1e-4 && skipped <= checked / 20 &&
                  extrapolated <= checked / 20;
  return {ok, fmt::format("{} nets worst rel err {:.2e} (<= 1e-5); {} G-MPC configs, "
                          "{} components, worst {:.2e} (<= 1e-4), {} on ref switches, "
                          "{} below h=1e-6 round-off floor (extrapolated)",
                          nets, worst_net, configs, checked, worst_mpc, skipped,
                          extrapolated)};
}

Outcome geometry_oracle() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> pos(-1000.0, 1000.0), ang(-3.14, 3.14);
  std::uniform_real_distribution<double> vel(-200.0, 200.0), step(-60.0, 60.0);
  std::uniform_real_distribution<double> turn(-1.0, 1.0);
  double pos_err = 0.0, ang_err = 0.0;
  const int cases = 1000;
  for (int t = 0; t < cases; ++t) {
    const WorldState s{pos(rng), pos(rng), ang(rng), vel(rng), vel(rng), turn(rng)};
    // Round trip and local velocities against an explicit rotation matrix.
    const LocalState l = world_to_local(s);
    const auto expect = oracle::mul(oracle::transpose(oracle::rotation(s.theta_rad)),
                                    {s.vx_mm_s, s.vy_mm_s});
    pos_err = std::max({pos_err, std::abs(l.vx_mm_s - expect[0]), std::abs(l.vy_mm_s - expect[1])});
    const WorldState back = local_to_world(pose_of(s), l);
    pos_err = std::max({pos_err, std::abs(back.vx_mm_s - s.vx_mm_s),
                        std::abs(back.vy_mm_s - s.vy_mm_s)});

    // Two chained steps against homogeneous transforms.
    const LocalNextState n1{step(rng), step(rng), turn(rng), vel(rng), vel(rng), turn(rng)};
    const LocalNextState n2{step(rng), step(rng), turn(rng), vel(rng), vel(rng), turn(rng)};
    const WorldState p1 = compose_world(s, n1);
    const WorldState p2 = compose_world(p1, n2);
    const auto m = oracle::matmul(
        oracle::matmul(oracle::pose_matrix(s.x_mm, s.y_mm, s.theta_rad),
                       oracle::pose_matrix(n1.dx_mm, n1.dy_mm, n1.dtheta_rad)),
        oracle::pose_matrix(n2.dx_mm, n2.dy_mm, n2.dtheta_rad));
    pos_err = std::max({pos_err, std::abs(p2.x_mm - m[0][2]), std::abs(p2.y_mm - m[1][2])});
    ang_err = std::max(ang_err, std::abs(oracle::angle_diff(p2.theta_rad,
                                                            std::atan2(m[1][0], m[0][0]))));
    const auto v2 = oracle::mul(oracle::rotation(s.theta_rad + n1.dtheta_rad),
                                {n2.vx_mm_s, n2.vy_mm_s});
    pos_err = std::max({pos_err, std::abs(p2.vx_mm_s - v2[0]), std::abs(p2.vy_mm_s - v2[1])});

    // Rebase agrees with re-expressing the composed world state.
    const LocalState r1 = rebase(n1);
    const LocalState w1 = world_to_local(p1);
    pos_err = std::max({pos_err, std::abs(r1.vx_mm_s - w1.vx_mm_s),
                        std::abs(r1.vy_mm_s - w1.vy_mm_s)});
  }
  const bool ok = pos_err <= 1e-9 && ang_err <= 1e-12;
  return {ok, fmt::format("{} cases, worst linear err {:.2e} (<= 1e-9), worst angle err "
                          "{:.2e} (<= 1e-12)",
                          cases, pos_err, ang_err)};
}

Outcome getref_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> pos(0.0, 600.0), ang(-3.14159, 3.14159);
  std::uniform_int_distribution<int> npts(2, 200), grid(0, 15);
  std::uniform_real_distribution<double> look(5.0, 150.0), wh(0.0, 500.0);
  int mismatches = 0, forward_hits = 0, coarse_cases = 0;
  const int cases = 1000;
  for (int t = 0; t < cases; ++t) {
    const bool coarse = t % 3 == 0;  // integer grids provoke exact ties
    coarse_cases += coarse;
    const int n = npts(rng);
    std::vector<PathPoint> pts;
    std::vector<std::array<double, 3>> raw;
    while (static_cast<int>(pts.size()) < n) {
      const PathPoint p = coarse ? PathPoint{10.0 * grid(rng), 10.0 * grid(rng), 0.0}
                                 : PathPoint{pos(rng), pos(rng), ang(rng)};
      if (!pts.empty() && p.x_mm == pts.back().x_mm && p.y_mm == pts.back().y_mm) continue;
      pts.push_back(p);
      raw.push_back({p.x_mm, p.y_mm, p.theta_rad});
    }
    const Pose2 pose = coarse ? Pose2{10.0 * grid(rng), 10.0 * grid(rng), 0.0}
                              : Pose2{pos(rng), pos(rng), ang(rng)};
    const double L = coarse ? std::max(10.0, 10.0 * grid(rng)) : look(rng);
    const double w = wh(rng);
    const auto sel = get_ref(pose, TargetPath(pts), L, w);
    const auto ref = oracle::brute_get_ref(raw, pose.x_mm, pose.y_mm, pose.theta_rad, L, w);
    if (sel.nearest_index != ref.nearest || sel.index != ref.index ||
        sel.index < sel.nearest_index) {
      ++mismatches;
    }
    forward_hits += sel.index > sel.nearest_index;
  }
  return {mismatches == 0,
          fmt::format("{} instances ({} on integer grids), {} index mismatches, "
                      "{} with look-ahead beyond nearest",
                      cases, coarse_cases, mismatches, forward_hits)};
}

Outcome fdm_learnability() {
  // Trained here rather than taken from the shared fixture so the budget
  // covers collection and training.
  const auto r = train_fdm(collect_transitions(SurrogateParams{}, 300, 1), FdmTrainConfig{}, 1);
  const double first = r.loss_history.front(), last = r.loss_history.back();
  const auto held_out = collect_transitions(SurrogateParams{}, 50, 4242);
  std::vector<double> err, disp;
  for (const auto& s : held_out) {
    const auto p = predict(r.model, s.state, s.action);
    err.push_back(std::hypot(p.dx_mm - s.next.dx_mm, p.dy_mm - s.next.dy_mm));
    disp.push_back(std::hypot(s.next.dx_mm, s.next.dy_mm));
  }
  const double med_err = median(err), med_disp = median(disp);
  const bool ok = last < 0.1 * first && med_err < 0.1 * med_disp;
  return {ok, fmt::format("300 transitions, MSE epoch 1 {:.4f} -> epoch {} {:.4f} "
                          "(ratio {:.3f} < 0.1); held-out median position error {:.3f} mm "
                          "vs median displacement {:.3f} mm (ratio {:.3f} < 0.1)",
                          first, r.loss_history.size(), last, last / first, med_err,
                          med_disp, med_err / med_disp)};
}

Outcome gmpc_descent() {
  const auto& fdm = default_fdm().model;
  const TargetPath path = PathSpec{}.build();
  GmpcConfig cfg;
  cfg.iterations = 100;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> x(50.0, 150.0), y(330.0, 470.0), yaw(-0.5, 0.5);
  std::uniform_real_distribution<double> v(0.0, 30.0), on(200.0, 900.0);
  int descended = 0, violations = 0;
  const int scenarios = 100;
  double worst_ratio = 0.0;
  for (int t = 0; t < scenarios; ++t) {
    const WorldState s0{x(rng), y(rng), yaw(rng), v(rng), 0.0, 0.0};
    std::vector<Action> init(cfg.horizon);
    for (auto& a : init) a = {on(rng), on(rng)};
    const auto r = optimize_actions(fdm, s0, path, init, cfg, t,
                                    [&](int, std::span<const Action> acts) {
                                      for (const auto& a : acts) {
                                        violations += !cfg.bounds.contains(a);
                                      }
                                    });
    for (const auto& a : r.actions) violations += !cfg.bounds.contains(a);
    descended += r.cost_history.back() <= r.cost_history.front();
    worst_ratio = std::max(worst_ratio, r.cost_history.back() / r.cost_history.front());
  }
  const bool ok = descended >= 95 && violations == 0;
  return {ok, fmt::format("N=100: J_final <= J_initial in {}/{} scenarios (>= 95), worst "
                          "J_final/J_initial {:.3f}; {} out-of-bounds on-times over all "
                          "iterates",
                          descended, scenarios, worst_ratio, violations)};
}

double quarter_mean(const std::vector<double>& d, bool first) {
  const std::size_t q = std::max<std::size_t>(1, d.size() / 4);
  const auto b = first ? d.begin() : d.end() - static_cast<std::ptrdiff_t>(q);
  return std::accumulate(b, b + static_cast<std::ptrdiff_t>(q), 0.0) / static_cast<double>(q);
}

Outcome path_following_ordering() {
  const auto& fdm = default_fdm().model;
  std::vector<RunReport> runs;
  for (const auto& s : three_start_scenarios(ScenarioConfig{})) {
    runs.push_back(run_scenario(s, &fdm, nullptr));
  }
  const auto& above = runs[0];
  const auto& on = runs[1];
  const auto& below = runs[2];
  bool converge = true;
  std::string conv;
  for (const RunReport* r : {&above, &below}) {
    const double a = quarter_mean(r->deviations_mm, true);
    const double b = quarter_mean(r->deviations_mm, false);
    converge = converge && b < a;
    conv += fmt::format("; {} first/last quarter {:.2f}/{:.2f} mm", r->name, a, b);
  }
  const bool ok = on.rmse_mm < above.rmse_mm && on.rmse_mm < below.rmse_mm && converge;
  return {ok, fmt::format("N=1000 RMSE above {:.2f} / on {:.2f} / below {:.2f} mm "
                          "({}/{}/{} steps){}",
                          above.rmse_mm, on.rmse_mm, below.rmse_mm, above.log.steps.size(),
                          on.log.steps.size(), below.log.steps.size(), conv)};
}

// Expert data and distilled policy shared by criteria 7 and 8.
struct Distilled {
  std::vector<IlcSample> train, held_out;
  IlcModel model;
};

const Distilled& distilled() {
  static const Distilled d = [] {
    Distilled out;
    GmpcConfig cfg;
    cfg.iterations = 100;
    auto data = generate_ilc_dataset(default_fdm().model, cfg, PathSpec{}.build(), StartGrid{},
                                     40, 1, surrogate_plant(SurrogateParams{}));
    std::mt19937_64 rng(707);
    std::shuffle(data.begin(), data.end(), rng);
    const std::size_t n_hold = data.size() / 5;
    out.held_out.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_hold));
    out.train.assign(data.begin() + static_cast<std::ptrdiff_t>(n_hold), data.end());
    out.model = train_ilc(out.train, IlcTrainConfig{}, 1).model;
    return out;
  }();
  return d;
}

Outcome ilc_fidelity() {
  const auto& d = distilled();
  double abs_sum = 0.0;
  for (const auto& s : d.held_out) {
    const Action a = ilc_act(d.model, s.state, s.ref_rel);
    abs_sum += std::abs(a.b_ms - s.action.b_ms) + std::abs(a.d_ms - s.action.d_ms);
  }
  const double mae = abs_sum / (2.0 * static_cast<double>(d.held_out.size()));

  ScenarioConfig expert;
  expert.name = "grid-interior";
  expert.start = {100.0, 400.0, 0.0, 0.0, 0.0, 0.0};
  ScenarioConfig student = expert;
  student.controller = ControllerKind::kDistilled;
  const auto g = run_scenario(expert, &default_fdm().model, nullptr);
  const auto i = run_scenario(student, nullptr, &d.model);
  const bool ok = mae < 70.0 && i.rmse_mm <= 3.0 * g.rmse_mm;
  return {ok, fmt::format("{} expert samples ({} held out), held-out MAE {:.2f} ms (< 70); "
                          "start (100,400,0): ILC RMSE {:.2f} mm vs G-MPC {:.2f} mm "
                          "(ratio {:.2f} <= 3)",
                          d.train.size() + d.held_out.size(), d.held_out.size(), mae,
                          i.rmse_mm, g.rmse_mm, i.rmse_mm / g.rmse_mm)};
}

Outcome ilc_speedup() {
  const auto& d = distilled();
  const auto& fdm = default_fdm().model;
  const TargetPath path = PathSpec{}.build();
  const GmpcConfig cfg;  // N = 1000
  const WorldState s0{100.0, 450.0, 0.0, 0.0, 0.0, 0.0};
  const std::vector<Action> init(cfg.horizon);

  const int mpc_calls = 5;
  auto t0 = Clock::now();
  double sink = 0.0;
  for (int k = 0; k < mpc_calls; ++k) {
    sink += optimize_actions(fdm, s0, path, init, cfg, k).actions[0].b_ms;
  }
  const double mpc_s = seconds_since(t0) / mpc_calls;

  const int ilc_calls = 20000;
  const auto& samples = d.held_out;
  t0 = Clock::now();
  for (int k = 0; k < ilc_calls; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k) % samples.size()];
    sink += ilc_act(d.model, s.state, s.ref_rel).d_ms;
  }
  const double ilc_s = seconds_since(t0) / ilc_calls;
  const double ratio = mpc_s / ilc_s;
  return {ratio >= 50.0 && std::isfinite(sink),
          fmt::format("optimize_actions (N=1000) {:.3f} ms/call, ilc_act {:.3f} us/call, "
                      "speedup {:.0f}x (>= 50x)",
                      mpc_s * 1e3, ilc_s * 1e6, ratio)};
}

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("'{}' {} >/dev/null", FISHMPC_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out.emplace_back(fs::relative(e.path(), dir).string(), read_text_file(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome cli_determinism() {
  const fs::path root =
      fs::temp_directory_path() / fmt::format("fishmpc_acceptance_{}", ::getpid());
  const fs::path out = root / "out";
  const std::vector<std::string> stages{
      "collect",      "train-fdm",        "run-mpc --name mpc_on", "gen-ilc-data",
      "train-ilc",    "run-ilc --name ilc_on", "eval --controller gmpc",
      "eval --controller ilc"};
  std::vector<std::vector<std::pair<std::string, std::string>>> runs;
  std::string failure;
  for (int run = 0; run < 2 && failure.empty(); ++run) {
    fs::remove_all(out);
    for (const auto& s : stages) {
      const std::string args = fmt::format("{} --out '{}' --seed 7", s, out.string());
      if (run_cli(args) != 0) {
        failure = fmt::format("'fishmpc {}' failed in run {}", s, run + 1);
        break;
      }
    }
    if (failure.empty()) runs.push_back(snapshot(out));
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!failure.empty()) return {false, failure};

  std::size_t bytes = 0;
  std::vector<std::string> differ;
  const auto& a = runs[0];
  const auto& b = runs[1];
  if (a.size() != b.size()) return {false, "runs wrote different file sets"};
  for (std::size_t k = 0; k < a.size(); ++k) {
    bytes += a[k].second.size();
    if (a[k] != b[k]) differ.push_back(a[k].first);
  }
  return {differ.empty(),
          fmt::format("{} stages x 2 runs, {} artifacts ({} bytes), {} differ{}", stages.size(),
                      a.size(), bytes, differ.size(),
                      differ.empty() ? "" : fmt::format(": {}", fmt::join(differ, ", ")))};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient exactness", 30.0, gradient_exactness},
      {2, "geometry oracle equivalence", 5.0, geometry_oracle},
      {3, "reference selection oracle equivalence", 10.0, getref_oracle},
      {4, "dynamics model learnability", 60.0, fdm_learnability},
      {5, "G-MPC descent and bounds", 300.0, gmpc_descent},
      {6, "path-following ordering", 300.0, path_following_ordering},
      {7, "ILC distillation fidelity", 600.0, ilc_fidelity},
      {8, "ILC speedup", 600.0, ilc_speedup},
      {9, "end-to-end determinism", 600.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double took = seconds_since(t0);
    const bool in_time = took < c.budget_s;
    const bool ok = o.ok && in_time;
    failed += !ok;
    fmt::print("[{}] {}. {}: {} | {:.2f} s (limit {:.0f} s{})\n", ok ? "PASS" : "FAIL", c.id,
               c.name, o.detail, took, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
