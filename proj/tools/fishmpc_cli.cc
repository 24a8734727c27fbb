// fishmpc: command-line driver for the learned-dynamics path-following
// pipeline.
//
//   fishmpc collect       surrogate transitions -> transitions.csv
//   fishmpc train-fdm     transitions.csv -> fdm_model.json
//   fishmpc run-mpc       one G-MPC scenario -> report + trajectory
//   fishmpc gen-ilc-data  G-MPC over the start grid -> ilc_dataset.csv
//   fishmpc train-ilc     ilc_dataset.csv -> ilc_model.json
//   fishmpc run-ilc       one ILC scenario -> report + trajectory
//   fishmpc eval          above/on/below starts -> summary table

#include <array>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fishmpc/pipeline.h"
#include "fishmpc/simd_kernels.h"

namespace {

constexpr std::array<const char*, 7> kSubcommands{
    "collect", "train-fdm", "run-mpc", "gen-ilc-data", "train-ilc", "run-ilc", "eval"};

void print_usage(std::ostream& out) {
  out << "usage: fishmpc <subcommand> [--config FILE] [--seed N] [--out DIR] [options]\n"
         "subcommands:\n"
         "  collect        collect surrogate transitions\n"
         "  train-fdm      train the forward dynamics model\n"
         "  run-mpc        run one gradient-MPC scenario\n"
         "  gen-ilc-data   generate the imitation dataset from MPC runs\n"
         "  train-ilc      train the imitation policy\n"
         "  run-ilc        run one imitation-policy scenario\n"
         "  eval           run the above/on/below start comparison\n"
         "run 'fishmpc <subcommand> --help' for options\n";
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> iterations;
  std::optional<int> max_steps;
  std::optional<int> transitions;
  std::vector<double> start;
  std::string name;
  std::string data;
  std::string fdm_model;
  std::string ilc_model;
  std::string controller = "gmpc";
};

fishmpc::PipelineConfig build_config(const Options& o) {
  fishmpc::PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = fishmpc::pipeline_config_from_json(
        nlohmann::json::parse(fishmpc::read_text_file(o.config)));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.iterations) cfg.gmpc.iterations = *o.iterations;
  if (o.max_steps) cfg.max_steps = *o.max_steps;
  if (o.transitions) cfg.transitions = *o.transitions;
  if (!o.start.empty()) {
    if (o.start.size() != 3) throw std::invalid_argument("--start needs x,y,theta");
    cfg.start = {o.start[0], o.start[1], o.start[2], 0.0, 0.0, 0.0};
  }
  if (!o.data.empty()) cfg.data_path = o.data;
  if (!o.fdm_model.empty()) cfg.fdm_model_path = o.fdm_model;
  if (!o.ilc_model.empty()) cfg.ilc_model_path = o.ilc_model;
  cfg.gmpc.validate();
  if (cfg.max_steps < 0 || cfg.transitions < 1) {
    throw std::invalid_argument("max_steps must be >= 0 and transitions >= 1");
  }
  return cfg;
}

void report_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(std::cerr);
    return 2;
  }
  const std::string sub = argv[1];
  if (sub == "--help" || sub == "-h") {
    print_usage(std::cout);
    return 0;
  }
  bool known = false;
  for (const char* s : kSubcommands) known = known || sub == s;
  if (!known) {
    std::cerr << "fishmpc: unknown subcommand '" << sub << "'\n";
    print_usage(std::cerr);
    return 2;
  }

  Options o;
  CLI::App app{"fishmpc " + sub};
  app.name("fishmpc " + sub);
  app.add_option("--config", o.config, "pipeline configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "seed for every random draw");
  app.add_option("--out", o.out, "artifact directory");
  app.add_option("--iterations", o.iterations, "G-MPC optimization iterations");
  app.add_option("--max-steps", o.max_steps, "closed-loop step limit");
  if (sub == "collect") {
    app.add_option("--transitions", o.transitions, "number of transitions");
  }
  if (sub == "train-fdm" || sub == "train-ilc") {
    app.add_option("--data", o.data, "training CSV (default: in --out)");
  }
  if (sub == "run-mpc" || sub == "run-ilc") {
    app.add_option("--start", o.start, "start pose x,y,theta")->delimiter(',')->expected(3);
    app.add_option("--name", o.name, "report name prefix");
  }
  if (sub == "run-mpc" || sub == "gen-ilc-data" || sub == "eval") {
    app.add_option("--fdm-model", o.fdm_model, "dynamics model JSON (default: in --out)");
  }
  if (sub == "run-ilc" || sub == "eval") {
    app.add_option("--ilc-model", o.ilc_model, "policy model JSON (default: in --out)");
  }
  if (sub == "eval") {
    app.add_option("--controller", o.controller, "gmpc or ilc")
        ->check(CLI::IsMember({"gmpc", "ilc"}));
  }

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    fishmpc::PipelineConfig cfg = build_config(o);
    if (sub == "collect") {
      report_written(fishmpc::stage_collect(cfg));
    } else if (sub == "train-fdm") {
      report_written(fishmpc::stage_train_fdm(cfg));
    } else if (sub == "run-mpc") {
      report_written(fishmpc::stage_run_mpc(cfg, o.name.empty() ? "mpc" : o.name));
    } else if (sub == "gen-ilc-data") {
      report_written(fishmpc::stage_gen_ilc_data(cfg));
    } else if (sub == "train-ilc") {
      report_written(fishmpc::stage_train_ilc(cfg));
    } else if (sub == "run-ilc") {
      report_written(fishmpc::stage_run_ilc(cfg, o.name.empty() ? "ilc" : o.name));
    } else if (sub == "eval") {
      std::vector<std::filesystem::path> written;
      const auto controller = o.controller == "ilc" ? fishmpc::ControllerKind::kDistilled
                                                    : fishmpc::ControllerKind::kExpert;
      const auto rows = fishmpc::stage_eval(cfg, controller, &written);
      std::cout << fmt::format("{:<8} {:<10} {:>10} {:>6} {:>10}\n", "start",
                               "controller", "rmse_mm", "steps", "time_s");
      for (const auto& r : rows) {
        std::cout << fmt::format("{:<8} {:<10} {:>10.3f} {:>6} {:>10.2f}\n", r.scenario,
                                 r.controller, r.rmse_mm, r.steps, r.elapsed_s);
      }
      report_written(written);
    }
  } catch (const std::exception& e) {
    std::cerr << "fishmpc " << sub << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
