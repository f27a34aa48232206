#include "limelab/runner.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "limelab/common.hpp"
#include "limelab/rng.hpp"

namespace limelab {

namespace {

std::string record_key_fields(const FidelityRecord& rec) {
  std::ostringstream os;
  os << rec.dataset << ',' << rec.model << ',' << to_string(rec.method) << ','
     << format_double(rec.sigma) << ',' << rec.instance;
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

int cmd_benchmark(const RunConfig& cfg, std::ostream& log) {
  GridSpec grid;
  for (const auto& dc : cfg.datasets) {
    grid.datasets.push_back(standardize(load_csv(dc.path, dc.label_column)));
    log << "loaded " << grid.datasets.back().id() << " (" << grid.datasets.back().n_rows()
        << " rows)\n";
  }
  grid.models = cfg.models;
  grid.methods = cfg.methods;
  grid.sigmas = cfg.sigmas;
  grid.instances_per_dataset = cfg.instances_per_dataset;
  grid.explainer = cfg.explainer;

  const auto records = run_grid(grid, cfg.eval, cfg.master_seed, cfg.jobs);

  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  // records.csv is the canonical, byte-reproducible artifact: the wall_ms
  // column is pinned to 0 there, with measured timings in timings.csv.
  std::ostringstream records_csv, timings_csv, errors_csv;
  records_csv << "dataset,model,method,sigma,instance,rmse,m,rmax,seed,wall_ms\n";
  timings_csv << "dataset,model,method,sigma,instance,wall_ms\n";
  errors_csv << "dataset,model,method,sigma,instance,reason\n";
  int n_errors = 0;
  for (const auto& rec : records) {
    if (!rec.error.empty()) {
      ++n_errors;
      std::string reason = rec.error;
      for (auto& ch : reason)
        if (ch == ',' || ch == '\n') ch = ';';
      errors_csv << record_key_fields(rec) << ',' << reason << '\n';
      continue;
    }
    records_csv << record_key_fields(rec) << ',' << format_double(rec.rmse) << ',' << rec.m
                << ',' << format_double(rec.r_max) << ',' << rec.seed << ",0\n";
    timings_csv << record_key_fields(rec) << ',' << format_double(rec.wall_ms) << '\n';
  }

  write_file(out_dir / "records.csv", records_csv.str());
  write_file(out_dir / "timings.csv", timings_csv.str());
  if (n_errors > 0) write_file(out_dir / "errors.csv", errors_csv.str());

  const Summary summary = summarize(records);
  write_file(out_dir / "summary.md", summary.to_markdown());
  write_file(out_dir / "resolved_config.json", resolved_config_json(cfg).dump(2) + "\n");

  log << "wrote " << (records.size() - static_cast<std::size_t>(n_errors)) << " records to "
      << (out_dir / "records.csv").string() << "\n";
  if (n_errors > 0)
    log << n_errors << " cell(s) failed; see " << (out_dir / "errors.csv").string() << "\n";
  for (const auto& [method, red] : summary.mean_reduction_vs_lime)
    log << "mean RMSE reduction of " << to_string(method)
        << " vs lime: " << format_double(100.0 * red) << "%\n";
  return n_errors > 0 ? 2 : 0;
}

int cmd_explain(const ExplainArgs& args, std::ostream& log) {
  const Dataset ds = standardize(load_csv(args.dataset_path, args.label_column));

  ModelSpec spec;
  if (args.model.rfind("external:", 0) == 0) {
    spec.kind = "external";
    spec.command = args.model.substr(9);
  } else {
    spec.kind = args.model;
  }
  const auto model = fit_model(spec, ds, derive_seed(args.seed, {0x666974 /* "fit" */}));

  ExplainerConfig cfg;
  cfg.method = method_from_string(args.method);
  cfg.sigma = args.sigma;
  cfg.n_train_samples = args.n_train_samples;
  cfg.rng_seed = derive_seed(args.seed, {0x657870 /* "exp" */});
  const Explanation expl = explain_instance(ds, *model, args.instance, cfg);

  EvalSpec ev;
  ev.m = args.eval_m;
  ev.sigma = args.sigma;
  ev.seed = derive_seed(args.seed, {0x6576616c /* "eval" */});
  const FidelityRecord rec = evaluate_fidelity(ds, *model, expl, ev);

  std::ostringstream report;
  report << render_report(ds, expl);
  report << "\nfidelity: rmse " << format_double(rec.rmse) << " over " << rec.m
         << " evaluation samples (r_max " << format_double(rec.r_max) << ", model "
         << model->model_name() << ")\n";

  if (args.output_path.empty()) {
    log << report.str();
  } else {
    write_file(args.output_path, report.str());
    log << "wrote " << args.output_path << "\n";
  }
  return 0;
}

}  // namespace limelab
