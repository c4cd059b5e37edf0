#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plausim/errors.hpp"
#include "plausim/humanoid_model.hpp"
#include "plausim/pipeline.hpp"
#include "plausim/pose_io.hpp"

namespace {

using namespace plausim;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base random seed (sequence i uses seed + i)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.output = *o.out;
  return c;
}

void print_summary(const RunOutcome& outcome) {
  for (const PlausibilityReport& r : outcome.reports) {
    std::cout << r.sequence << ": T=" << r.frames;
    if (r.cd_mm) std::cout << " CD=" << format_number(*r.cd_mm) << "mm";
    if (r.psd) std::cout << " PSD=" << *r.psd << " (N=" << *r.unbalanced << ", t_F=" << *r.fall_frame << ")";
    std::cout << " FS=" << format_number(r.fs_percent) << "% GP=" << format_number(r.gp_mm) << "mm";
    if (r.mpjpe_mm) std::cout << " MPJPE=" << format_number(*r.mpjpe_mm) << "mm";
    if (r.mpjpe_g_mm) std::cout << " MPJPE-G=" << format_number(*r.mpjpe_g_mm) << "mm";
    if (r.mpjpe_2d_px) std::cout << " MPJPE-2D=" << format_number(*r.mpjpe_2d_px) << "px";
    if (r.diverged) std::cout << " DIVERGED@" << r.diverged_frame;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical plausibility evaluation of 3D pose sequences"};
  app.require_subcommand(1);

  Overrides eval_opts, metrics_opts, sim_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Optimize, simulate and report all metrics");
  add_run_options(evaluate, eval_opts);
  auto* metrics = app.add_subcommand("metrics", "Kinematic metrics only (FS, GP, MPJPE family)");
  add_run_options(metrics, metrics_opts);
  auto* simulate = app.add_subcommand("simulate", "Track the reference without optimization");
  add_run_options(simulate, sim_opts);

  std::string validate_config;
  std::vector<std::string> validate_files;
  auto* validate = app.add_subcommand("validate", "Schema check of plausim documents");
  validate->add_option("--config", validate_config, "Configuration file; referenced inputs are checked too");
  validate->add_option("files", validate_files, "Pose, model, camera, config or report files");

  std::string model_out;
  auto* model = app.add_subcommand("model", "Write the default humanoid model file");
  model->add_option("--out", model_out, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    if (*validate) {
      std::vector<std::string> files = validate_files;
      if (!validate_config.empty()) {
        files.push_back(validate_config);
        try {
          const RunConfig c = load_config(validate_config);
          for (const auto& p : c.inputs) files.push_back(p.string());
          for (const auto& p : c.ground_truth) files.push_back(p.string());
          if (c.cameras) files.push_back(c.cameras->string());
          if (c.model) files.push_back(c.model->string());
        } catch (const Error&) {
          // reported by validate_file below
        }
      }
      if (files.empty()) {
        std::cerr << "validate: no files given\n";
        return static_cast<int>(ExitCode::Usage);
      }
      int code = 0;
      for (const auto& f : files) {
        const ValidationIssue issue = validate_file(f);
        if (issue.message.empty()) {
          std::cout << "ok      " << f << " (" << issue.kind << ")\n";
        } else {
          std::cout << "invalid " << issue.message << "\n";
          if (code == 0) code = issue.exit_code;
        }
      }
      return code;
    }
    if (*model) {
      save_model_file(HumanoidModel::default_humanoid(), model_out);
      return 0;
    }
    RunOutcome outcome;
    if (*evaluate)
      outcome = run_evaluate(resolve_config(eval_opts));
    else if (*metrics)
      outcome = run_metrics_only(resolve_config(metrics_opts));
    else
      outcome = run_simulate(resolve_config(sim_opts));
    print_summary(outcome);
    return static_cast<int>(outcome.code);
  } catch (const Error& e) {
    std::cerr << "plausim: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "plausim: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Io);
  }
}
