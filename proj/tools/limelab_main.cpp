#include <CLI11.hpp>
#include <iostream>

#include "limelab/common.hpp"
#include "limelab/config.hpp"
#include "limelab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"limelab: local-explanation fidelity benchmarks (lime / lemon / mlime)"};
  app.require_subcommand(1);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run an experiment grid from a config file");
  std::string config_path;
  std::string out_override;
  int jobs_override = -1;
  long long seed_override = -1;
  bench->add_option("--config", config_path, "JSON config file")->required();
  bench->add_option("--out", out_override, "Output directory (overrides config)");
  bench->add_option("--jobs", jobs_override, "Worker threads, 0 = all cores (overrides config)");
  bench->add_option("--seed", seed_override, "Master seed (overrides config)");

  // explain
  auto* explain = app.add_subcommand("explain", "Explain a single instance");
  limelab::ExplainArgs args;
  long long instance = 0;
  unsigned long long seed = 0;
  explain->add_option("--dataset", args.dataset_path, "CSV dataset path")->required();
  explain->add_option("--label-column", args.label_column, "Label column index (-1 = last)");
  explain->add_option("--model", args.model, "gnb | forest | mlp | external:<command>");
  explain->add_option("--method", args.method, "lime | lemon | mlime");
  explain->add_option("--sigma", args.sigma, "Kernel width");
  explain->add_option("--instance", instance, "Row index to explain");
  explain->add_option("--seed", seed, "RNG seed");
  explain->add_option("--samples", args.n_train_samples, "Training sample count");
  explain->add_option("--eval-m", args.eval_m, "Evaluation sample count");
  explain->add_option("--out", args.output_path, "Write the report to a file");

  // selftest
  app.add_subcommand("selftest", "Run built-in analytic checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (bench->parsed()) {
      limelab::RunConfig cfg = limelab::load_run_config(config_path);
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (jobs_override >= 0) cfg.jobs = jobs_override;
      if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
      return limelab::cmd_benchmark(cfg, std::cout);
    }
    if (explain->parsed()) {
      args.instance = static_cast<Eigen::Index>(instance);
      args.seed = seed;
      return limelab::cmd_explain(args, std::cout);
    }
    return limelab::cmd_selftest(std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
