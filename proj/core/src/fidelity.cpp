#include "limelab/fidelity.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "limelab/common.hpp"
#include "limelab/rng.hpp"

namespace limelab {

namespace {

// Seed-derivation tags for the independent stream families of a grid run.
constexpr std::uint64_t kTagFit = 0x666974;        // "fit"
constexpr std::uint64_t kTagInstances = 0x696e7374;  // "inst"
constexpr std::uint64_t kTagEval = 0x6576616c;     // "eval"
constexpr std::uint64_t kTagTrain = 0x747261696e;  // "train"

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

double rmse(const Eigen::VectorXd& yr, const Eigen::VectorXd& ys) {
  if (yr.size() != ys.size()) throw Error("rmse: length mismatch");
  if (yr.size() < 1) throw Error("rmse: empty input");
  if (!yr.allFinite() || !ys.allFinite()) throw Error("rmse: non-finite input");
  return std::sqrt((yr - ys).squaredNorm() / static_cast<double>(yr.size()));
}

FidelityRecord evaluate_fidelity(const Dataset& ds, const BlackBoxModel& model,
                                 const Explanation& expl, const EvalSpec& spec) {
  if (spec.m < 1) throw Error("evaluate_fidelity: m must be >= 1");
  const double t0 = now_ms();

  const Kernel kernel{spec.sigma};
  BallSpec ball;
  ball.center = ds.instance(expl.instance_index);
  ball.r_max = compute_rmax(kernel, spec.rmax_p, static_cast<int>(ds.p()));
  ball.law = spec.law;

  RngStream rng(derive_seed(spec.seed, {kTagEval}));
  const SampleBatch batch = sample_nball(ball, kernel, spec.m, rng);
  const Eigen::VectorXd yr = model.predict_proba(batch.points).col(expl.target_class);
  const Eigen::VectorXd ys = expl.surrogate->predict(batch.points);

  FidelityRecord rec;
  rec.dataset = ds.id();
  rec.model = model.model_name();
  rec.method = expl.method;
  rec.sigma = spec.sigma;
  rec.instance = expl.instance_index;
  rec.rmse = rmse(yr, ys);
  rec.m = spec.m;
  rec.r_max = ball.r_max;
  rec.seed = expl.seed;
  rec.wall_ms = now_ms() - t0;
  return rec;
}

std::shared_ptr<BlackBoxModel> fit_model(const ModelSpec& spec, const Dataset& ds,
                                         std::uint64_t seed) {
  if (spec.kind == "gnb") {
    return std::make_shared<GnbModel>(fit_gnb(ds, spec.gnb_epsilon));
  }
  if (spec.kind == "forest") {
    return std::make_shared<ForestModel>(fit_forest(ds, spec.n_trees, seed));
  }
  if (spec.kind == "mlp") {
    MlpConfig cfg;
    cfg.hidden = spec.hidden;
    cfg.epochs = spec.epochs;
    cfg.batch_size = spec.batch_size;
    cfg.learning_rate = spec.learning_rate;
    cfg.momentum = spec.momentum;
    cfg.rng_seed = seed;
    return std::make_shared<MlpModel>(fit_mlp(ds, cfg));
  }
  if (spec.kind == "external") {
    return std::make_shared<ExternalModel>(spec.command, static_cast<int>(ds.p()),
                                           ds.n_classes);
  }
  throw Error("fit_model: unknown model kind '" + spec.kind + "'");
}

double SigmaSpec::resolve(int p) const {
  if (value) {
    if (!(*value > 0.0)) throw Error("sigma values must be positive");
    return *value;
  }
  return 0.75 * std::sqrt(static_cast<double>(p));
}

std::vector<FidelityRecord> run_grid(const GridSpec& grid, const EvalSpec& eval_spec,
                                     std::uint64_t master_seed, int jobs) {
  if (grid.datasets.empty() || grid.models.empty() || grid.methods.empty() ||
      grid.sigmas.empty())
    throw Error("run_grid: datasets, models, methods, and sigmas must be non-empty");

  const std::size_t n_datasets = grid.datasets.size();
  const std::size_t n_models = grid.models.size();
  const std::size_t n_sigmas = grid.sigmas.size();
  const std::size_t n_methods = grid.methods.size();

  // Instance selection per dataset: uniform sample without replacement,
  // reported in ascending order.
  std::vector<std::vector<Eigen::Index>> instances(n_datasets);
  for (std::size_t d = 0; d < n_datasets; ++d) {
    const Eigen::Index n_rows = grid.datasets[d].n_rows();
    if (grid.instances_per_dataset <= 0 ||
        grid.instances_per_dataset >= static_cast<int>(n_rows)) {
      for (Eigen::Index i = 0; i < n_rows; ++i) instances[d].push_back(i);
    } else {
      RngStream rng(derive_seed(master_seed, {kTagInstances, d}));
      auto picked = rng.sample_without_replacement(
          static_cast<std::size_t>(n_rows), static_cast<std::size_t>(grid.instances_per_dataset));
      std::sort(picked.begin(), picked.end());
      for (auto i : picked) instances[d].push_back(static_cast<Eigen::Index>(i));
    }
  }

  // Fit every (dataset, model) pair once, in parallel.
  struct FittedSlot {
    std::shared_ptr<BlackBoxModel> model;
    std::string error;
  };
  std::vector<FittedSlot> fitted(n_datasets * n_models);
  {
    std::atomic<std::size_t> next{0};
    const std::size_t total = fitted.size();
    auto fit_worker = [&]() {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= total) return;
        const std::size_t d = k / n_models;
        const std::size_t mi = k % n_models;
        try {
          fitted[k].model = fit_model(grid.models[mi], grid.datasets[d],
                                      derive_seed(master_seed, {kTagFit, d, mi}));
        } catch (const std::exception& e) {
          fitted[k].error = e.what();
        }
      }
    };
    unsigned n_workers = jobs > 0 ? static_cast<unsigned>(jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(total));
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < n_workers; ++t) threads.emplace_back(fit_worker);
    for (auto& t : threads) t.join();
  }

  // One task per (dataset, model, sigma, instance); a task shares its
  // evaluation batch across methods and emits one record per method.
  struct Task {
    std::size_t d, mi, si, ii;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < n_datasets; ++d)
    for (std::size_t mi = 0; mi < n_models; ++mi)
      for (std::size_t si = 0; si < n_sigmas; ++si)
        for (std::size_t ii = 0; ii < instances[d].size(); ++ii)
          tasks.push_back(Task{d, mi, si, ii});

  std::vector<FidelityRecord> records(tasks.size() * n_methods);
  auto record_index = [&](const Task& t, std::size_t ki) {
    // Canonical order: dataset, model, sigma, method, instance.
    std::size_t idx = t.d;
    idx = idx * n_models + t.mi;
    idx = idx * n_sigmas + t.si;
    idx = idx * n_methods + ki;
    idx = idx * instances[t.d].size() + t.ii;
    return idx;
  };

  auto run_task = [&](const Task& task) {
    const Dataset& ds = grid.datasets[task.d];
    const double sigma = grid.sigmas[task.si].resolve(static_cast<int>(ds.p()));
    const Eigen::Index inst = instances[task.d][task.ii];
    const FittedSlot& slot = fitted[task.d * n_models + task.mi];

    for (std::size_t ki = 0; ki < n_methods; ++ki) {
      FidelityRecord& rec = records[record_index(task, ki)];
      rec.dataset = ds.id();
      rec.model = grid.models[task.mi].display_name();
      rec.method = grid.methods[ki];
      rec.sigma = sigma;
      rec.instance = inst;
      rec.m = eval_spec.m;
    }
    if (!slot.error.empty()) {
      for (std::size_t ki = 0; ki < n_methods; ++ki)
        records[record_index(task, ki)].error = "model fit failed: " + slot.error;
      return;
    }

    // Shared evaluation batch: same points and reference labels for every
    // method, drawn from a stream independent of all training streams.
    Eigen::MatrixXd eval_points;
    Eigen::VectorXd yr;
    int target_class = 0;
    double ball_rmax = 0.0;
    std::string eval_error;
    try {
      const Kernel kernel{sigma};
      BallSpec ball;
      ball.center = ds.instance(inst);
      ball.r_max = compute_rmax(kernel, eval_spec.rmax_p, static_cast<int>(ds.p()));
      ball.law = eval_spec.law;
      ball_rmax = ball.r_max;
      RngStream rng(derive_seed(master_seed, {kTagEval, task.d, task.mi, task.si,
                                              static_cast<std::uint64_t>(inst)}));
      eval_points = sample_nball(ball, kernel, eval_spec.m, rng).points;

      const Eigen::MatrixXd probs_at_x = slot.model->predict_proba(ball.center.transpose());
      for (int c = 1; c < slot.model->n_classes(); ++c)
        if (probs_at_x(0, c) > probs_at_x(0, target_class)) target_class = c;
      yr = slot.model->predict_proba(eval_points).col(target_class);
    } catch (const std::exception& e) {
      eval_error = e.what();
    }

    for (std::size_t ki = 0; ki < n_methods; ++ki) {
      FidelityRecord& rec = records[record_index(task, ki)];
      rec.r_max = ball_rmax;
      if (!eval_error.empty()) {
        rec.error = "evaluation failed: " + eval_error;
        continue;
      }
      const double t0 = now_ms();
      try {
        ExplainerConfig cfg = grid.explainer;
        cfg.method = grid.methods[ki];
        cfg.sigma = sigma;
        // lemon and mlime share training samples (same ball, same law), so
        // their seeds coincide; lime draws from its own stream.
        const std::uint64_t group = cfg.method == Method::lime ? 0 : 1;
        cfg.rng_seed = derive_seed(master_seed, {kTagTrain, task.d, task.mi, task.si,
                                                 static_cast<std::uint64_t>(inst), group});
        const Explanation expl = explain_instance(ds, *slot.model, inst, cfg);
        rec.seed = cfg.rng_seed;
        rec.rmse = rmse(yr, expl.surrogate->predict(eval_points));
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      rec.wall_ms = now_ms() - t0;
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      run_task(tasks[k]);
    }
  };
  unsigned n_workers = jobs > 0 ? static_cast<unsigned>(jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  return records;
}

const Summary::Cell* Summary::find(const std::string& dataset, const std::string& model,
                                   double sigma, Method method) const {
  for (const auto& cell : cells)
    if (cell.dataset == dataset && cell.model == model && cell.sigma == sigma &&
        cell.method == method)
      return &cell;
  return nullptr;
}

Summary summarize(const std::vector<FidelityRecord>& records) {
  Summary summary;

  // Preserve first-seen (canonical) order of cell keys.
  std::vector<std::array<std::string, 4>> keys;
  std::map<std::array<std::string, 4>, std::pair<double, int>> acc;
  for (const auto& rec : records) {
    if (!rec.error.empty()) {
      ++summary.error_records;
      continue;
    }
    std::array<std::string, 4> key{rec.dataset, rec.model, format_double(rec.sigma),
                                   to_string(rec.method)};
    auto it = acc.find(key);
    if (it == acc.end()) {
      keys.push_back(key);
      acc.emplace(key, std::make_pair(rec.rmse, 1));
    } else {
      it->second.first += rec.rmse;
      it->second.second += 1;
    }
  }
  for (const auto& key : keys) {
    const auto& [sum, count] = acc.at(key);
    Summary::Cell cell;
    cell.dataset = key[0];
    cell.model = key[1];
    double sigma = 0.0;
    parse_double(key[2], sigma);
    cell.sigma = sigma;
    cell.method = method_from_string(key[3]);
    cell.mean_rmse = sum / count;
    cell.n_instances = count;
    summary.cells.push_back(cell);
  }

  // Reductions vs lime, over (dataset, model, sigma) groups where a lime
  // cell exists with meaningfully nonzero rmse.
  std::map<Method, std::pair<double, int>> ratios;     // sum of (1 - r/r_lime), count
  std::map<Method, std::pair<double, double>> totals;  // sum rmse, sum lime rmse
  for (const auto& cell : summary.cells) {
    if (cell.method == Method::lime) continue;
    const Summary::Cell* lime_cell =
        summary.find(cell.dataset, cell.model, cell.sigma, Method::lime);
    if (!lime_cell) continue;
    if (lime_cell->mean_rmse < 1e-12) {
      ++summary.cells_excluded_from_reduction;
      continue;
    }
    auto& [rsum, rcount] = ratios[cell.method];
    rsum += 1.0 - cell.mean_rmse / lime_cell->mean_rmse;
    rcount += 1;
    auto& [msum, lsum] = totals[cell.method];
    msum += cell.mean_rmse;
    lsum += lime_cell->mean_rmse;
  }
  for (const auto& [method, sc] : ratios)
    if (sc.second > 0) summary.mean_reduction_vs_lime[method] = sc.first / sc.second;
  for (const auto& [method, tt] : totals)
    if (tt.second > 0.0) summary.ratio_of_means_reduction[method] = 1.0 - tt.first / tt.second;

  return summary;
}

std::string Summary::to_markdown() const {
  // Axis values in first-seen order.
  std::vector<std::string> datasets, models;
  std::vector<double> sigmas;
  std::vector<Method> methods;
  for (const auto& cell : cells) {
    if (std::find(datasets.begin(), datasets.end(), cell.dataset) == datasets.end())
      datasets.push_back(cell.dataset);
    if (std::find(models.begin(), models.end(), cell.model) == models.end())
      models.push_back(cell.model);
    if (std::find(sigmas.begin(), sigmas.end(), cell.sigma) == sigmas.end())
      sigmas.push_back(cell.sigma);
    if (std::find(methods.begin(), methods.end(), cell.method) == methods.end())
      methods.push_back(cell.method);
  }

  std::ostringstream os;
  os << "| dataset | sigma |";
  for (const auto& model : models)
    for (const auto& method : methods) os << " " << model << "/" << to_string(method) << " |";
  os << "\n|---|---|";
  for (std::size_t i = 0; i < models.size() * methods.size(); ++i) os << "---|";
  os << "\n";

  for (const auto& dataset : datasets) {
    for (double sigma : sigmas) {
      os << "| " << dataset << " | " << format_double(sigma) << " |";
      for (const auto& model : models) {
        // Best (lowest) mean per (dataset, sigma, model) group gets bolded.
        double best = std::numeric_limits<double>::infinity();
        for (const auto& method : methods) {
          const Cell* cell = find(dataset, model, sigma, method);
          if (cell) best = std::min(best, cell->mean_rmse);
        }
        for (const auto& method : methods) {
          const Cell* cell = find(dataset, model, sigma, method);
          if (!cell) {
            os << " - |";
          } else if (cell->mean_rmse == best) {
            os << " **" << format_double(cell->mean_rmse) << "** |";
          } else {
            os << " " << format_double(cell->mean_rmse) << " |";
          }
        }
      }
      os << "\n";
    }
  }

  os << "\n";
  for (const auto& [method, red] : mean_reduction_vs_lime) {
    os << "- mean RMSE reduction of " << to_string(method)
       << " vs lime: " << format_double(100.0 * red) << "%";
    auto it = ratio_of_means_reduction.find(method);
    if (it != ratio_of_means_reduction.end())
      os << " (ratio of means: " << format_double(100.0 * it->second) << "%)";
    os << "\n";
  }
  if (cells_excluded_from_reduction > 0)
    os << "- cells excluded from reduction averages (lime rmse < 1e-12): "
       << cells_excluded_from_reduction << "\n";
  if (error_records > 0) os << "- error records excluded from summary: " << error_records << "\n";
  return os.str();
}

}  // namespace limelab
