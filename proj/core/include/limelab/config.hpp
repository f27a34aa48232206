#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "limelab/explain.hpp"
#include "limelab/fidelity.hpp"

namespace limelab {

struct DatasetConfig {
  std::string path;
  int label_column = -1;  // -1 = last column
};

/// Fully resolved run configuration. Every field has a default; the parsed
/// file may override any subset, and unknown keys are rejected with their
/// paths.
struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<ModelSpec> models;
  std::vector<Method> methods = {Method::lime, Method::lemon, Method::mlime};
  std::vector<SigmaSpec> sigmas = {SigmaSpec::literal(1.0)};
  int instances_per_dataset = 20;
  EvalSpec eval;             // per-cell sigma/seed filled by the runner
  ExplainerConfig explainer; // per-cell method/sigma/seed filled by the runner
  std::uint64_t master_seed = 0;
  int jobs = 0;  // 0 = hardware concurrency
  std::string output_dir = "out";
};

/// Parses and validates a JSON config document.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Reads and parses a config file.
RunConfig load_run_config(const std::string& path);

/// The fully materialized configuration, suitable for byte-stable echoing
/// next to run outputs.
nlohmann::ordered_json resolved_config_json(const RunConfig& cfg);

}  // namespace limelab
