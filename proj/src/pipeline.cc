#include "fishmpc/pipeline.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "fishmpc/csv.h"

namespace fishmpc {

namespace fs = std::filesystem;

namespace {

nlohmann::json train_to_json(const nn::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"weight_decay", t.adamw.weight_decay}};
}

void train_from_json(const nlohmann::json& j, nn::TrainConfig& t) {
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.lr = j.value("lr", t.lr);
  t.adamw.weight_decay = j.value("weight_decay", t.adamw.weight_decay);
}

nlohmann::json pose_json(const WorldState& s) {
  return {{"x_mm", s.x_mm}, {"y_mm", s.y_mm}, {"theta_rad", s.theta_rad}};
}

WorldState pose_from_json(const nlohmann::json& j, WorldState s) {
  s.x_mm = j.value("x_mm", s.x_mm);
  s.y_mm = j.value("y_mm", s.y_mm);
  s.theta_rad = j.value("theta_rad", s.theta_rad);
  return s;
}

fs::path or_default(const fs::path& override_path, const PipelineConfig& cfg,
                    const char* name) {
  return override_path.empty() ? cfg.out_dir / name : override_path;
}

std::string loss_csv(const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += fmt::format("{},{}\n", i + 1, history[i]);
  }
  return out;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("surrogate")) cfg.surrogate = surrogate_params_from_json(j["surrogate"]);
  cfg.transitions = j.value("transitions", cfg.transitions);
  if (j.contains("fdm_train")) {
    const auto& f = j["fdm_train"];
    cfg.fdm_train.hidden_layers = f.value("hidden_layers", cfg.fdm_train.hidden_layers);
    cfg.fdm_train.validation_fraction =
        f.value("validation_fraction", cfg.fdm_train.validation_fraction);
    train_from_json(f, cfg.fdm_train.train);
  }
  if (j.contains("gmpc")) cfg.gmpc = gmpc_config_from_json(j["gmpc"]);
  if (j.contains("ilc_train")) {
    const auto& f = j["ilc_train"];
    cfg.ilc_train.hidden_layers = f.value("hidden_layers", cfg.ilc_train.hidden_layers);
    train_from_json(f, cfg.ilc_train.train);
  }
  if (j.contains("path")) {
    const auto& p = j["path"];
    if (p.contains("start")) {
      const WorldState s = pose_from_json(
          p["start"], {cfg.path.start.x_mm, cfg.path.start.y_mm, cfg.path.start.theta_rad});
      cfg.path.start = {s.x_mm, s.y_mm, s.theta_rad};
    }
    cfg.path.radius_scale_mm = p.value("radius_scale_mm", cfg.path.radius_scale_mm);
    cfg.path.points = p.value("points", cfg.path.points);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.grid.xs_mm = g.value("xs_mm", cfg.grid.xs_mm);
    cfg.grid.ys_mm = g.value("ys_mm", cfg.grid.ys_mm);
    cfg.grid.yaws_rad = g.value("yaws_rad", cfg.grid.yaws_rad);
  }
  if (j.contains("start")) cfg.start = pose_from_json(j["start"], cfg.start);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.tank_size_mm = j.value("tank_size_mm", cfg.tank_size_mm);

  // Bounds are shared by every stage.
  cfg.fdm_train.bounds = cfg.surrogate.bounds;
  cfg.ilc_train.bounds = cfg.surrogate.bounds;
  cfg.gmpc.bounds = cfg.surrogate.bounds;
  if (cfg.transitions < 1) throw std::invalid_argument("config: transitions must be >= 1");
  if (cfg.max_steps < 0) throw std::invalid_argument("config: max_steps must be >= 0");
  cfg.gmpc.validate();
  return cfg;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  return {{"seed", cfg.seed},
          {"out_dir", cfg.out_dir.string()},
          {"surrogate", to_json(cfg.surrogate)},
          {"transitions", cfg.transitions},
          {"fdm_train",
           [&] {
             auto j = train_to_json(cfg.fdm_train.train);
             j["hidden_layers"] = cfg.fdm_train.hidden_layers;
             j["validation_fraction"] = cfg.fdm_train.validation_fraction;
             return j;
           }()},
          {"gmpc", to_json(cfg.gmpc)},
          {"ilc_train",
           [&] {
             auto j = train_to_json(cfg.ilc_train.train);
             j["hidden_layers"] = cfg.ilc_train.hidden_layers;
             return j;
           }()},
          {"path",
           {{"start",
             {{"x_mm", cfg.path.start.x_mm},
              {"y_mm", cfg.path.start.y_mm},
              {"theta_rad", cfg.path.start.theta_rad}}},
            {"radius_scale_mm", cfg.path.radius_scale_mm},
            {"points", cfg.path.points}}},
          {"grid",
           {{"xs_mm", cfg.grid.xs_mm},
            {"ys_mm", cfg.grid.ys_mm},
            {"yaws_rad", cfg.grid.yaws_rad}}},
          {"start", pose_json(cfg.start)},
          {"max_steps", cfg.max_steps},
          {"tank_size_mm", cfg.tank_size_mm}};
}

void write_files_atomically(
    const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> staged;
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
      staged.push_back(tmp);
      out << content;
      out.close();
      if (!out) throw std::runtime_error(fmt::format("write failed for {}", tmp.string()));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& t : staged) fs::remove(t, ec);
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], files[i].first);
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FdmModel load_fdm_model(const fs::path& p) {
  return fdm_from_json(nlohmann::json::parse(read_text_file(p)));
}

IlcModel load_ilc_model(const fs::path& p) {
  return ilc_from_json(nlohmann::json::parse(read_text_file(p)));
}

std::vector<fs::path> stage_collect(const PipelineConfig& cfg) {
  const auto samples = collect_transitions(cfg.surrogate, cfg.transitions, cfg.seed);
  std::ostringstream csv;
  write_transitions_csv(csv, samples);
  std::ostringstream path_csv;
  write_path_csv(path_csv, cfg.path.build());
  const fs::path data = cfg.out_dir / artifacts::kTransitions;
  const fs::path path = cfg.out_dir / artifacts::kPath;
  write_files_atomically({{data, csv.str()}, {path, path_csv.str()}});
  return {data, path};
}

std::vector<fs::path> stage_train_fdm(const PipelineConfig& cfg) {
  std::istringstream in(
      read_text_file(or_default(cfg.data_path, cfg, artifacts::kTransitions)));
  const auto samples = read_transitions_csv(in);
  const FdmTrainResult r = train_fdm(samples, cfg.fdm_train, cfg.seed);
  nlohmann::json model = to_json(r.model);
  model["training"] = {{"samples", samples.size()},
                       {"train_samples", r.train_indices.size()},
                       {"validation_samples", r.validation_indices.size()},
                       {"validation_mse", r.validation_mse},
                       {"final_loss", r.loss_history.empty() ? 0.0 : r.loss_history.back()},
                       {"seed", cfg.seed}};
  const fs::path model_path = cfg.out_dir / artifacts::kFdmModel;
  const fs::path loss_path = cfg.out_dir / artifacts::kFdmLoss;
  write_files_atomically({{model_path, model.dump(2) + "\n"},
                          {loss_path, loss_csv(r.loss_history)}});
  return {model_path, loss_path};
}

ScenarioConfig scenario_from(const PipelineConfig& cfg, ControllerKind controller,
                             const WorldState& start, const std::string& name) {
  ScenarioConfig s;
  s.name = name;
  s.start = start;
  s.path = cfg.path;
  s.controller = controller;
  s.plant = PlantKind::kSurrogate;
  s.surrogate = cfg.surrogate;
  s.gmpc = cfg.gmpc;
  s.max_steps = cfg.max_steps;
  s.seed = cfg.seed;
  s.tank_size_mm = cfg.tank_size_mm;
  return s;
}

namespace {

std::vector<fs::path> run_one(const PipelineConfig& cfg, ControllerKind controller,
                              const std::string& name) {
  std::optional<FdmModel> fdm;
  std::optional<IlcModel> ilc;
  if (controller == ControllerKind::kExpert) {
    fdm = load_fdm_model(or_default(cfg.fdm_model_path, cfg, artifacts::kFdmModel));
  } else {
    ilc = load_ilc_model(or_default(cfg.ilc_model_path, cfg, artifacts::kIlcModel));
  }
  const ScenarioConfig sc = scenario_from(cfg, controller, cfg.start, name);
  const RunReport report =
      run_scenario(sc, fdm ? &*fdm : nullptr, ilc ? &*ilc : nullptr);
  std::ostringstream traj;
  write_trajectory_csv(traj, report.log);
  const fs::path report_path = cfg.out_dir / (name + "_report.json");
  const fs::path traj_path = cfg.out_dir / (name + "_trajectory.csv");
  write_files_atomically({{report_path, to_json(report, sc).dump(2) + "\n"},
                          {traj_path, traj.str()}});
  return {report_path, traj_path};
}

}  // namespace

std::vector<fs::path> stage_run_mpc(const PipelineConfig& cfg, const std::string& name) {
  return run_one(cfg, ControllerKind::kExpert, name);
}

std::vector<fs::path> stage_run_ilc(const PipelineConfig& cfg, const std::string& name) {
  return run_one(cfg, ControllerKind::kDistilled, name);
}

std::vector<fs::path> stage_gen_ilc_data(const PipelineConfig& cfg) {
  const FdmModel fdm =
      load_fdm_model(or_default(cfg.fdm_model_path, cfg, artifacts::kFdmModel));
  const auto samples =
      generate_ilc_dataset(fdm, cfg.gmpc, cfg.path.build(), cfg.grid, cfg.max_steps,
                           cfg.seed, surrogate_plant(cfg.surrogate));
  std::ostringstream csv;
  write_ilc_csv(csv, samples);
  const fs::path out = cfg.out_dir / artifacts::kIlcData;
  write_files_atomically({{out, csv.str()}});
  return {out};
}

std::vector<fs::path> stage_train_ilc(const PipelineConfig& cfg) {
  std::istringstream in(
      read_text_file(or_default(cfg.data_path, cfg, artifacts::kIlcData)));
  const auto samples = read_ilc_csv(in);
  const IlcTrainResult r = train_ilc(samples, cfg.ilc_train, cfg.seed);
  nlohmann::json model = to_json(r.model);
  model["training"] = {{"samples", samples.size()},
                       {"final_loss", r.loss_history.empty() ? 0.0 : r.loss_history.back()},
                       {"seed", cfg.seed}};
  const fs::path model_path = cfg.out_dir / artifacts::kIlcModel;
  const fs::path loss_path = cfg.out_dir / artifacts::kIlcLoss;
  write_files_atomically({{model_path, model.dump(2) + "\n"},
                          {loss_path, loss_csv(r.loss_history)}});
  return {model_path, loss_path};
}

std::vector<EvalRow> stage_eval(const PipelineConfig& cfg, ControllerKind controller,
                                std::vector<fs::path>* written) {
  std::optional<FdmModel> fdm;
  std::optional<IlcModel> ilc;
  if (controller == ControllerKind::kExpert) {
    fdm = load_fdm_model(or_default(cfg.fdm_model_path, cfg, artifacts::kFdmModel));
  } else {
    ilc = load_ilc_model(or_default(cfg.ilc_model_path, cfg, artifacts::kIlcModel));
  }
  const char* controller_name =
      controller == ControllerKind::kExpert ? "gmpc" : "ilc";
  const ScenarioConfig base = scenario_from(cfg, controller, cfg.start, "base");

  std::vector<EvalRow> rows;
  std::vector<std::pair<fs::path, std::string>> files;
  nlohmann::json reports = nlohmann::json::array();
  std::string summary = "scenario,controller,rmse_mm,steps,elapsed_s\n";
  for (const ScenarioConfig& sc : three_start_scenarios(base)) {
    const RunReport r = run_scenario(sc, fdm ? &*fdm : nullptr, ilc ? &*ilc : nullptr);
    rows.push_back({sc.name, controller_name, r.rmse_mm, r.log.steps.size(), r.elapsed_s});
    summary += fmt::format("{},{},{},{},{}\n", sc.name, controller_name, r.rmse_mm,
                           r.log.steps.size(), r.elapsed_s);
    reports.push_back(to_json(r, sc));
    std::ostringstream traj;
    write_trajectory_csv(traj, r.log);
    files.emplace_back(
        cfg.out_dir / fmt::format("eval_{}_{}_trajectory.csv", controller_name, sc.name),
        traj.str());
  }
  files.emplace_back(cfg.out_dir / fmt::format("{}_{}", controller_name,
                                               artifacts::kEvalSummary),
                     summary);
  files.emplace_back(cfg.out_dir / fmt::format("{}_{}", controller_name,
                                               artifacts::kEvalReport),
                     reports.dump(2) + "\n");
  write_files_atomically(files);
  if (written != nullptr) {
    for (const auto& f : files) written->push_back(f.first);
  }
  return rows;
}

}  // namespace fishmpc
