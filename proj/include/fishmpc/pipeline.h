#ifndef FISHMPC_PIPELINE_H_
#define FISHMPC_PIPELINE_H_

// End-to-end pipeline stages behind the command-line tool. Every stage
// reads its inputs from files, computes all outputs in memory, and only
// then writes them (via rename), so a failing stage leaves no partial
// artifacts behind.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fishmpc/fdm.h"
#include "fishmpc/gmpc.h"
#include "fishmpc/ilc.h"
#include "fishmpc/simharness.h"

namespace fishmpc {

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "fishmpc_out";

  SurrogateParams surrogate;
  int transitions = 300;
  FdmTrainConfig fdm_train;
  GmpcConfig gmpc;
  IlcTrainConfig ilc_train;
  PathSpec path;
  StartGrid grid;
  WorldState start{100.0, 400.0, 0.0, 0.0, 0.0, 0.0};
  int max_steps = 40;
  double tank_size_mm = 600.0;

  // Input overrides; empty means the default file in out_dir.
  std::filesystem::path data_path;
  std::filesystem::path fdm_model_path;
  std::filesystem::path ilc_model_path;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);

// Default artifact names inside out_dir.
namespace artifacts {
inline constexpr const char* kTransitions = "transitions.csv";
inline constexpr const char* kFdmModel = "fdm_model.json";
inline constexpr const char* kFdmLoss = "fdm_loss.csv";
inline constexpr const char* kPath = "path.csv";
inline constexpr const char* kIlcData = "ilc_dataset.csv";
inline constexpr const char* kIlcModel = "ilc_model.json";
inline constexpr const char* kIlcLoss = "ilc_loss.csv";
inline constexpr const char* kEvalSummary = "eval_summary.csv";
inline constexpr const char* kEvalReport = "eval_report.json";
}  // namespace artifacts

// Writes all files or none: each is staged as <name>.tmp and renamed once
// every file has been staged.
void write_files_atomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files);

std::string read_text_file(const std::filesystem::path& p);

FdmModel load_fdm_model(const std::filesystem::path& p);
IlcModel load_ilc_model(const std::filesystem::path& p);

// Stage entry points. Each returns the paths it wrote.
std::vector<std::filesystem::path> stage_collect(const PipelineConfig& cfg);
std::vector<std::filesystem::path> stage_train_fdm(const PipelineConfig& cfg);
std::vector<std::filesystem::path> stage_run_mpc(const PipelineConfig& cfg,
                                                 const std::string& name);
std::vector<std::filesystem::path> stage_gen_ilc_data(const PipelineConfig& cfg);
std::vector<std::filesystem::path> stage_train_ilc(const PipelineConfig& cfg);
std::vector<std::filesystem::path> stage_run_ilc(const PipelineConfig& cfg,
                                                 const std::string& name);

struct EvalRow {
  std::string scenario;
  std::string controller;
  double rmse_mm = 0.0;
  std::size_t steps = 0;
  double elapsed_s = 0.0;
};

// Above / on / below starts with the chosen controller.
std::vector<EvalRow> stage_eval(const PipelineConfig& cfg, ControllerKind controller,
                                std::vector<std::filesystem::path>* written = nullptr);

ScenarioConfig scenario_from(const PipelineConfig& cfg, ControllerKind controller,
                             const WorldState& start, const std::string& name);

}  // namespace fishmpc

#endif  // FISHMPC_PIPELINE_H_
