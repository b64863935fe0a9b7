#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "maskmatte/errors.hpp"
#include "maskmatte/pipeline.hpp"

namespace {

using namespace maskmatte;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kEmptyResult = 2;

struct BuildOverrides {
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<std::string> overlap_mode;
  std::optional<std::string> backend_cmd;
  std::optional<int> workers;
};

int run_build(const std::string& config_path, const BuildOverrides& overrides) {
  PipelineConfig config = load_config(config_path);
  if (overrides.tau) config.fusion.tau = *overrides.tau;
  if (overrides.eta) config.trimap.eta = *overrides.eta;
  if (overrides.overlap_mode)
    config.fusion.overlap_mode = *overrides.overlap_mode == "iou"
                                     ? OverlapMode::Iou
                                     : OverlapMode::Ioa;
  if (overrides.backend_cmd)
    config.solver = ExternalBackendConfig{*overrides.backend_cmd};
  if (overrides.workers) config.parallelism = *overrides.workers;

  const BuildResult result = build_dataset(config);
  const BuildSummary& s = result.summary;
  std::cout << "images: " << s.images << "\n"
            << "human instances: " << s.humans << "\n"
            << "mattes written: " << s.active_records << "\n"
            << "skipped: " << s.skipped_records << "\n"
            << "images without humans: " << s.zero_human_images << "\n";
  for (const auto& [reason, count] : s.skip_reasons)
    std::cout << "  " << reason << ": " << count << "\n";
  std::cout << "index: " << (config.output_dir / "index.jsonl").string() << "\n";
  return s.active_records == 0 ? kEmptyResult : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instance masks to alpha mattes: dataset builder and evaluator"};
  app.require_subcommand(1);

  std::string config_path;
  BuildOverrides overrides;
  auto* build = app.add_subcommand("build", "construct the matte dataset");
  build->add_option("--config", config_path, "pipeline config (json)")->required();
  double tau, eta;
  std::string overlap_mode, backend_cmd;
  int workers;
  build->add_option("--tau", tau, "fusion overlap threshold");
  build->add_option("--eta", eta, "trimap erosion scale factor");
  build->add_option("--overlap-mode", overlap_mode, "iou or ioa")
      ->check(CLI::IsMember({"iou", "ioa"}));
  build->add_option("--backend-cmd", backend_cmd,
                    "external matting command with {image} {trimap} {out}");
  build->add_option("--workers", workers, "parallel image workers");

  std::string pred_dir, gt_dir;
  int resize_target = 1024;
  std::string eval_config;
  auto* eval = app.add_subcommand("eval", "score mattes against ground truth");
  eval->add_option("--config", eval_config, "pipeline config (json)");
  eval->add_option("--pred", pred_dir, "directory of predicted mattes")->required();
  eval->add_option("--gt", gt_dir, "directory of ground-truth mattes")->required();
  eval->add_option("--resize-target", resize_target,
                   "longer-side resolution used for scoring");

  std::string pred_index, gt_index, metric_name = "mad";
  auto* eval_inst =
      app.add_subcommand("eval-instances", "instance matting quality (IMQ)");
  eval_inst->add_option("--pred-index", pred_index, "prediction index (jsonl)")
      ->required();
  eval_inst->add_option("--gt-index", gt_index, "ground-truth index (jsonl)")
      ->required();
  eval_inst->add_option("--metric", metric_name, "mad, mse, grad, or conn")
      ->check(CLI::IsMember({"mad", "mse", "grad", "conn"}));

  std::string index_path;
  auto* stats_cmd = app.add_subcommand("stats", "summarize a dataset index");
  stats_cmd->add_option("--index", index_path, "index file (jsonl)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      if (build->count("--tau")) overrides.tau = tau;
      if (build->count("--eta")) overrides.eta = eta;
      if (build->count("--overlap-mode")) overrides.overlap_mode = overlap_mode;
      if (build->count("--backend-cmd")) overrides.backend_cmd = backend_cmd;
      if (build->count("--workers")) overrides.workers = workers;
      return run_build(config_path, overrides);
    }
    if (eval->parsed()) {
      if (!eval_config.empty() && !eval->count("--resize-target"))
        resize_target = load_config(eval_config).resize_target;
      const MetricReport report = evaluate(pred_dir, gt_dir, resize_target);
      std::cout << report_to_table(report) << "\n" << report_to_json(report) << "\n";
      return kOk;
    }
    if (eval_inst->parsed()) {
      const ImqReport report = evaluate_instances(
          pred_index, gt_index, instance_metric_from_string(metric_name));
      std::cout << "IMQ_" << metric_name << ": " << report.aggregate << "\n"
                << imq_report_to_json(report) << "\n";
      return kOk;
    }
    if (stats_cmd->parsed()) {
      std::cout << stats_to_json(stats(index_path)) << "\n";
      return kOk;
    }
  } catch (const EmptyInput& e) {
    std::cerr << "empty result: " << e.what() << "\n";
    return kEmptyResult;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
