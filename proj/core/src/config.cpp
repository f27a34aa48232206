#include "limelab/config.hpp"

#include <fstream>
#include <set>

#include "limelab/common.hpp"

namespace limelab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw Error("config: unknown key '" + path + "/" + it.key() + "'");
  }
}

double require_positive(const json& v, const std::string& path) {
  if (!v.is_number()) throw Error("config: '" + path + "' must be a number");
  const double d = v.get<double>();
  if (!(d > 0.0)) throw Error("config: '" + path + "' must be positive");
  return d;
}

int require_nonneg_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw Error("config: '" + path + "' must be an integer");
  const auto i = v.get<long long>();
  if (i < 0) throw Error("config: '" + path + "' must be >= 0");
  return static_cast<int>(i);
}

ModelSpec parse_model(const json& v, const std::string& path) {
  ModelSpec spec;
  if (v.is_string()) {
    spec.kind = v.get<std::string>();
  } else if (v.is_object()) {
    reject_unknown_keys(v,
                        {"kind", "n_trees", "hidden", "epochs", "batch_size", "learning_rate",
                         "momentum", "gnb_epsilon", "command"},
                        path);
    if (!v.contains("kind")) throw Error("config: '" + path + "' needs a 'kind'");
    spec.kind = v.at("kind").get<std::string>();
    if (v.contains("n_trees")) spec.n_trees = require_nonneg_int(v.at("n_trees"), path + "/n_trees");
    if (v.contains("hidden")) {
      spec.hidden.clear();
      for (const auto& h : v.at("hidden"))
        spec.hidden.push_back(require_nonneg_int(h, path + "/hidden"));
    }
    if (v.contains("epochs")) spec.epochs = require_nonneg_int(v.at("epochs"), path + "/epochs");
    if (v.contains("batch_size"))
      spec.batch_size = require_nonneg_int(v.at("batch_size"), path + "/batch_size");
    if (v.contains("learning_rate"))
      spec.learning_rate = require_positive(v.at("learning_rate"), path + "/learning_rate");
    if (v.contains("momentum")) spec.momentum = v.at("momentum").get<double>();
    if (v.contains("gnb_epsilon"))
      spec.gnb_epsilon = require_positive(v.at("gnb_epsilon"), path + "/gnb_epsilon");
    if (v.contains("command")) spec.command = v.at("command").get<std::string>();
  } else {
    throw Error("config: '" + path + "' must be a string or object");
  }
  if (spec.kind != "gnb" && spec.kind != "forest" && spec.kind != "mlp" &&
      spec.kind != "external")
    throw Error("config: '" + path + "' has unknown model kind '" + spec.kind + "'");
  if (spec.kind == "external" && spec.command.empty())
    throw Error("config: '" + path + "' external model needs a 'command'");
  return spec;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("config: document must be a JSON object");
  reject_unknown_keys(doc,
                      {"datasets", "models", "methods", "sigmas", "instances_per_dataset",
                       "eval", "explainer", "master_seed", "jobs", "output_dir"},
                      "");
  RunConfig cfg;

  if (!doc.contains("datasets") || !doc.at("datasets").is_array() || doc.at("datasets").empty())
    throw Error("config: 'datasets' must be a non-empty array");
  for (std::size_t i = 0; i < doc.at("datasets").size(); ++i) {
    const auto& v = doc.at("datasets")[i];
    const std::string path = "/datasets[" + std::to_string(i) + "]";
    DatasetConfig dc;
    if (v.is_string()) {
      dc.path = v.get<std::string>();
    } else if (v.is_object()) {
      reject_unknown_keys(v, {"path", "label_column"}, path);
      if (!v.contains("path")) throw Error("config: '" + path + "' needs a 'path'");
      dc.path = v.at("path").get<std::string>();
      if (v.contains("label_column")) dc.label_column = v.at("label_column").get<int>();
    } else {
      throw Error("config: '" + path + "' must be a string or object");
    }
    cfg.datasets.push_back(dc);
  }

  if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty())
    throw Error("config: 'models' must be a non-empty array");
  for (std::size_t i = 0; i < doc.at("models").size(); ++i)
    cfg.models.push_back(parse_model(doc.at("models")[i], "/models[" + std::to_string(i) + "]"));

  if (doc.contains("methods")) {
    cfg.methods.clear();
    for (const auto& v : doc.at("methods")) cfg.methods.push_back(method_from_string(v.get<std::string>()));
    if (cfg.methods.empty()) throw Error("config: 'methods' must be non-empty");
  }

  if (doc.contains("sigmas")) {
    cfg.sigmas.clear();
    for (std::size_t i = 0; i < doc.at("sigmas").size(); ++i) {
      const auto& v = doc.at("sigmas")[i];
      if (v.is_string()) {
        if (v.get<std::string>() != "default")
          throw Error("config: '/sigmas[" + std::to_string(i) +
                      "]' string entries must be \"default\"");
        cfg.sigmas.push_back(SigmaSpec::dataset_default());
      } else {
        cfg.sigmas.push_back(
            SigmaSpec::literal(require_positive(v, "/sigmas[" + std::to_string(i) + "]")));
      }
    }
    if (cfg.sigmas.empty()) throw Error("config: 'sigmas' must be non-empty");
  }

  if (doc.contains("instances_per_dataset"))
    cfg.instances_per_dataset =
        require_nonneg_int(doc.at("instances_per_dataset"), "/instances_per_dataset");

  if (doc.contains("eval")) {
    const auto& ev = doc.at("eval");
    reject_unknown_keys(ev, {"m", "rmax_p", "radial_law"}, "/eval");
    if (ev.contains("m")) {
      cfg.eval.m = require_nonneg_int(ev.at("m"), "/eval/m");
      if (cfg.eval.m < 1) throw Error("config: '/eval/m' must be >= 1");
    }
    if (ev.contains("rmax_p")) {
      cfg.eval.rmax_p = require_positive(ev.at("rmax_p"), "/eval/rmax_p");
      if (cfg.eval.rmax_p >= 1.0) throw Error("config: '/eval/rmax_p' must lie in (0, 1)");
    }
    if (ev.contains("radial_law"))
      cfg.eval.law = radial_law_from_string(ev.at("radial_law").get<std::string>());
  }

  if (doc.contains("explainer")) {
    const auto& ex = doc.at("explainer");
    reject_unknown_keys(ex, {"n_train_samples", "rmax_p", "train_radial_law", "ridge_lambda", "mars"},
                        "/explainer");
    if (ex.contains("n_train_samples")) {
      cfg.explainer.n_train_samples =
          require_nonneg_int(ex.at("n_train_samples"), "/explainer/n_train_samples");
      if (cfg.explainer.n_train_samples < 1)
        throw Error("config: '/explainer/n_train_samples' must be >= 1");
    }
    if (ex.contains("rmax_p")) {
      cfg.explainer.rmax_p = require_positive(ex.at("rmax_p"), "/explainer/rmax_p");
      if (cfg.explainer.rmax_p >= 1.0)
        throw Error("config: '/explainer/rmax_p' must lie in (0, 1)");
    }
    if (ex.contains("train_radial_law"))
      cfg.explainer.train_radial_law =
          radial_law_from_string(ex.at("train_radial_law").get<std::string>());
    if (ex.contains("ridge_lambda")) {
      cfg.explainer.ridge_lambda = ex.at("ridge_lambda").get<double>();
      if (cfg.explainer.ridge_lambda < 0.0)
        throw Error("config: '/explainer/ridge_lambda' must be >= 0");
    }
    if (ex.contains("mars") && ex.at("mars").is_string()) {
      if (ex.at("mars").get<std::string>() != "auto")
        throw Error("config: '/explainer/mars' string form must be \"auto\"");
    } else if (ex.contains("mars")) {
      const auto& ma = ex.at("mars");
      if (!ma.is_object()) throw Error("config: '/explainer/mars' must be an object or \"auto\"");
      reject_unknown_keys(ma,
                          {"max_terms", "max_degree", "gcv_penalty", "min_rss_improvement",
                           "knot_subsample", "minspan", "endspan"},
                          "/explainer/mars");
      mars::FitConfig mc;
      mc.minspan = -1;  // config-level default: automatic spans
      mc.endspan = -1;
      if (ma.contains("max_terms")) mc.max_terms = require_nonneg_int(ma.at("max_terms"), "/explainer/mars/max_terms");
      if (ma.contains("max_degree")) {
        mc.max_degree = require_nonneg_int(ma.at("max_degree"), "/explainer/mars/max_degree");
        if (mc.max_degree < 1) throw Error("config: '/explainer/mars/max_degree' must be >= 1");
      }
      if (ma.contains("gcv_penalty")) mc.gcv_penalty = ma.at("gcv_penalty").get<double>();
      if (ma.contains("min_rss_improvement"))
        mc.min_rss_improvement = ma.at("min_rss_improvement").get<double>();
      if (ma.contains("knot_subsample"))
        mc.knot_subsample = require_nonneg_int(ma.at("knot_subsample"), "/explainer/mars/knot_subsample");
      if (ma.contains("minspan")) mc.minspan = ma.at("minspan").get<int>();
      if (ma.contains("endspan")) mc.endspan = ma.at("endspan").get<int>();
      cfg.explainer.mars_cfg = mc;
    }
  }

  if (doc.contains("master_seed")) {
    if (!doc.at("master_seed").is_number_integer())
      throw Error("config: 'master_seed' must be an integer");
    cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();
  }
  if (doc.contains("jobs")) cfg.jobs = require_nonneg_int(doc.at("jobs"), "/jobs");
  if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(file);
  } catch (const std::exception& e) {
    throw Error("config: JSON parse failure in '" + path + "': " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::ordered_json resolved_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json out;
  out["datasets"] = nlohmann::ordered_json::array();
  for (const auto& dc : cfg.datasets)
    out["datasets"].push_back({{"path", dc.path}, {"label_column", dc.label_column}});
  out["models"] = nlohmann::ordered_json::array();
  for (const auto& ms : cfg.models) {
    nlohmann::ordered_json m;
    m["kind"] = ms.kind;
    if (ms.kind == "forest") m["n_trees"] = ms.n_trees;
    if (ms.kind == "mlp") {
      m["hidden"] = ms.hidden;
      m["epochs"] = ms.epochs;
      m["batch_size"] = ms.batch_size;
      m["learning_rate"] = ms.learning_rate;
      m["momentum"] = ms.momentum;
    }
    if (ms.kind == "gnb") m["gnb_epsilon"] = ms.gnb_epsilon;
    if (ms.kind == "external") m["command"] = ms.command;
    out["models"].push_back(m);
  }
  out["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : cfg.methods) out["methods"].push_back(to_string(m));
  out["sigmas"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.sigmas) {
    if (s.value)
      out["sigmas"].push_back(*s.value);
    else
      out["sigmas"].push_back("default");
  }
  out["instances_per_dataset"] = cfg.instances_per_dataset;
  out["eval"] = {{"m", cfg.eval.m},
                 {"rmax_p", cfg.eval.rmax_p},
                 {"radial_law", to_string(cfg.eval.law)}};
  nlohmann::ordered_json ex;
  ex["n_train_samples"] = cfg.explainer.n_train_samples;
  ex["rmax_p"] = cfg.explainer.rmax_p;
  ex["train_radial_law"] = to_string(cfg.explainer.train_radial_law);
  ex["ridge_lambda"] = cfg.explainer.ridge_lambda;
  if (cfg.explainer.mars_cfg) {
    const auto& mc = *cfg.explainer.mars_cfg;
    ex["mars"] = {{"max_terms", mc.max_terms},
                  {"max_degree", mc.max_degree},
                  {"gcv_penalty", mc.gcv_penalty},
                  {"min_rss_improvement", mc.min_rss_improvement},
                  {"knot_subsample", mc.knot_subsample},
                  {"minspan", mc.minspan},
                  {"endspan", mc.endspan}};
  } else {
    ex["mars"] = "auto";
  }
  out["explainer"] = ex;
  out["master_seed"] = cfg.master_seed;
  out["jobs"] = cfg.jobs;
  out["output_dir"] = cfg.output_dir;
  return out;
}

}  // namespace limelab
