#include "mida/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace mida {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const T& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace

std::string to_string(PipelineMethod m) {
  switch (m) {
    case PipelineMethod::mida: return "mida";
    case PipelineMethod::smida: return "smida";
    case PipelineMethod::kpca: return "kpca";
    case PipelineMethod::none: return "none";
  }
  throw std::invalid_argument("unknown method");
}

PipelineMethod pipeline_method_from_string(const std::string& name) {
  if (name == "mida") return PipelineMethod::mida;
  if (name == "smida") return PipelineMethod::smida;
  if (name == "kpca") return PipelineMethod::kpca;
  if (name == "none") return PipelineMethod::none;
  throw ConfigError("unknown method: " + name);
}

std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::f1: return "f1";
    case MetricKind::rmse: return "rmse";
  }
  throw std::invalid_argument("unknown metric");
}

MetricKind metric_from_string(const std::string& name) {
  if (name == "accuracy") return MetricKind::accuracy;
  if (name == "f1") return MetricKind::f1;
  if (name == "rmse") return MetricKind::rmse;
  throw ConfigError("unknown metric: " + name);
}

namespace {

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::synth: return "synth";
    case DatasetKind::csv: return "csv";
    case DatasetKind::gas_sensor: return "gas-sensor";
    case DatasetKind::corn: return "corn";
  }
  throw std::invalid_argument("unknown dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "synth") return DatasetKind::synth;
  if (name == "csv") return DatasetKind::csv;
  if (name == "gas-sensor") return DatasetKind::gas_sensor;
  if (name == "corn") return DatasetKind::corn;
  throw ConfigError("unknown dataset kind: " + name);
}

std::string to_string(PredictorKind k) {
  return k == PredictorKind::logistic ? "logistic" : "ridge";
}

PredictorKind predictor_kind_from_string(const std::string& name) {
  if (name == "logistic") return PredictorKind::logistic;
  if (name == "ridge") return PredictorKind::ridge;
  throw ConfigError("unknown predictor: " + name);
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single_split: return "single-split";
    case ExperimentKind::gas_batches: return "gas-batches";
    case ExperimentKind::corn_transfer: return "corn-transfer";
  }
  throw std::invalid_argument("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "single-split") return ExperimentKind::single_split;
  if (name == "gas-batches") return ExperimentKind::gas_batches;
  if (name == "corn-transfer") return ExperimentKind::corn_transfer;
  throw ConfigError("unknown experiment kind: " + name);
}

std::string to_string(GasVariant v) {
  return v == GasVariant::discrete ? "discrete" : "continuous";
}

GasVariant gas_variant_from_string(const std::string& name) {
  if (name == "discrete") return GasVariant::discrete;
  if (name == "continuous") return GasVariant::continuous;
  throw ConfigError("unknown gas variant: " + name);
}

std::string to_string(SubsampleRule r) {
  return r == SubsampleRule::none ? "none" : "twice-source";
}

SubsampleRule subsample_rule_from_string(const std::string& name) {
  if (name == "none") return SubsampleRule::none;
  if (name == "twice-source") return SubsampleRule::twice_source;
  throw ConfigError("unknown subsample rule: " + name);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"dataset", "preprocess", "encoding", "method", "kernel", "subspace", "predictor",
              "metric", "f1_positive", "subsample", "seed", "experiment"});
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset",
               {"kind", "path", "scenario", "n_per_class_per_domain", "seed",
                "conditional_shift", "property"});
    cfg.dataset.kind =
        dataset_kind_from_string(get_or<std::string>(d, "kind", "synth", "dataset"));
    cfg.dataset.path = get_or<std::string>(d, "path", "", "dataset");
    if (d.contains("scenario")) {
      try {
        cfg.dataset.scenario.kind =
            scenario_from_string(d.at("scenario").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("dataset.scenario: ") + e.what());
      }
    }
    cfg.dataset.scenario.n_per_class_per_domain =
        get_or<int>(d, "n_per_class_per_domain", 100, "dataset");
    cfg.dataset.scenario.seed = get_or<std::uint64_t>(d, "seed", 7, "dataset");
    cfg.dataset.scenario.conditional_shift =
        get_or<bool>(d, "conditional_shift", false, "dataset");
    cfg.dataset.property = get_or<std::string>(d, "property", "moisture", "dataset");
    if (cfg.dataset.kind != DatasetKind::synth && cfg.dataset.path.empty())
      throw ConfigError("dataset.path is required for kind \"" +
                        to_string(cfg.dataset.kind) + "\"");
    if (cfg.dataset.scenario.n_per_class_per_domain < 10)
      throw ConfigError("dataset.n_per_class_per_domain must be >= 10");
  }

  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    check_keys(p, "preprocess", {"zscore_per_batch"});
    cfg.zscore_per_batch = get_or<bool>(p, "zscore_per_batch", false, "preprocess");
  }

  if (j.contains("encoding")) {
    const json& e = j.at("encoding");
    check_keys(e, "encoding", {"scheme", "n_devices"});
    try {
      cfg.encoding.scheme = encoding_scheme_from_string(
          get_or<std::string>(e, "scheme", "onehot-domain", "encoding"));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(std::string("encoding.scheme: ") + err.what());
    }
    cfg.encoding.n_devices = get_or<int>(e, "n_devices", 1, "encoding");
    if (cfg.encoding.n_devices < 1) throw ConfigError("encoding.n_devices must be >= 1");
  }

  if (j.contains("method"))
    cfg.method = pipeline_method_from_string(get_or<std::string>(j, "method", "mida", "config"));

  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    check_keys(k, "kernel", {"family", "degree", "sigma", "sigma_auto"});
    try {
      cfg.kernel.spec.family =
          kernel_family_from_string(get_or<std::string>(k, "family", "linear", "kernel"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("kernel.family: ") + e.what());
    }
    cfg.kernel.spec.degree = get_or<int>(k, "degree", 2, "kernel");
    cfg.kernel.spec.sigma = get_or<double>(k, "sigma", 1.0, "kernel");
    cfg.kernel.sigma_auto = get_or<bool>(k, "sigma_auto", false, "kernel");
    if (!cfg.kernel.sigma_auto) {
      try {
        cfg.kernel.spec.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
      }
    } else if (cfg.kernel.spec.family == KernelFamily::polynomial &&
               cfg.kernel.spec.degree < 1) {
      throw ConfigError("kernel: polynomial kernel needs degree >= 1");
    }
  }

  if (j.contains("subspace")) {
    const json& s = j.at("subspace");
    check_keys(s, "subspace", {"h", "mu", "gamma", "augment"});
    cfg.h = get_or<int>(s, "h", 2, "subspace");
    cfg.mu = get_or<double>(s, "mu", 1.0, "subspace");
    cfg.gamma = get_or<double>(s, "gamma", 0.0, "subspace");
    cfg.augment = get_or<bool>(s, "augment", true, "subspace");
    if (cfg.h < 1) throw ConfigError("subspace.h must be >= 1");
    if (cfg.mu <= 0) throw ConfigError("subspace.mu must be > 0");
    if (cfg.gamma < 0) throw ConfigError("subspace.gamma must be >= 0");
  }

  if (j.contains("predictor")) {
    const json& p = j.at("predictor");
    check_keys(p, "predictor", {"kind", "l2", "lambda"});
    cfg.predictor.kind =
        predictor_kind_from_string(get_or<std::string>(p, "kind", "logistic", "predictor"));
    cfg.predictor.l2 = get_or<double>(p, "l2", 1e-4, "predictor");
    cfg.predictor.lambda = get_or<double>(p, "lambda", 1.0, "predictor");
    if (cfg.predictor.l2 < 0) throw ConfigError("predictor.l2 must be >= 0");
    if (cfg.predictor.lambda < 0) throw ConfigError("predictor.lambda must be >= 0");
  }

  if (j.contains("metric"))
    cfg.metric = metric_from_string(get_or<std::string>(j, "metric", "accuracy", "config"));
  cfg.f1_positive = get_or<int>(j, "f1_positive", 1, "config");

  if (j.contains("subsample")) {
    const json& s = j.at("subsample");
    check_keys(s, "subsample", {"rule"});
    cfg.subsample =
        subsample_rule_from_string(get_or<std::string>(s, "rule", "none", "subsample"));
  }

  cfg.seed = get_or<std::uint64_t>(j, "seed", 7, "config");

  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    check_keys(e, "experiment",
               {"kind", "gas_variant", "batches", "targets", "multi_target", "train_on_target"});
    cfg.experiment.kind =
        experiment_kind_from_string(get_or<std::string>(e, "kind", "single-split", "experiment"));
    cfg.experiment.gas_variant = gas_variant_from_string(
        get_or<std::string>(e, "gas_variant", "continuous", "experiment"));
    cfg.experiment.batches =
        get_or<std::vector<int>>(e, "batches", cfg.experiment.batches, "experiment");
    cfg.experiment.targets = get_or<std::vector<std::string>>(e, "targets",
                                                              cfg.experiment.targets, "experiment");
    cfg.experiment.multi_target = get_or<bool>(e, "multi_target", false, "experiment");
    cfg.experiment.train_on_target = get_or<bool>(e, "train_on_target", false, "experiment");
    for (int b : cfg.experiment.batches)
      if (b < 2) throw ConfigError("experiment.batches entries must be >= 2");
    if (cfg.experiment.batches.empty()) throw ConfigError("experiment.batches is empty");
    for (const std::string& t : cfg.experiment.targets)
      if (t != "mp5" && t != "mp6")
        throw ConfigError("experiment.targets: unknown target \"" + t + "\"");
    if (cfg.experiment.targets.empty()) throw ConfigError("experiment.targets is empty");
  }

  // Metric and predictor have to agree on the label type.
  const bool regression = cfg.predictor.kind == PredictorKind::ridge;
  if (regression != (cfg.metric == MetricKind::rmse))
    throw ConfigError("metric \"" + to_string(cfg.metric) + "\" does not match predictor \"" +
                      to_string(cfg.predictor.kind) + "\"");

  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["dataset"] = {{"kind", to_string(dataset.kind)},
                  {"path", dataset.path},
                  {"scenario", to_string(dataset.scenario.kind)},
                  {"n_per_class_per_domain", dataset.scenario.n_per_class_per_domain},
                  {"seed", dataset.scenario.seed},
                  {"conditional_shift", dataset.scenario.conditional_shift},
                  {"property", dataset.property}};
  j["preprocess"] = {{"zscore_per_batch", zscore_per_batch}};
  j["encoding"] = {{"scheme", to_string(encoding.scheme)}, {"n_devices", encoding.n_devices}};
  j["method"] = to_string(method);
  j["kernel"] = {{"family", to_string(kernel.spec.family)},
                 {"degree", kernel.spec.degree},
                 {"sigma", kernel.spec.sigma},
                 {"sigma_auto", kernel.sigma_auto}};
  j["subspace"] = {{"h", h}, {"mu", mu}, {"gamma", gamma}, {"augment", augment}};
  j["predictor"] = {{"kind", to_string(predictor.kind)},
                    {"l2", predictor.l2},
                    {"lambda", predictor.lambda}};
  j["metric"] = to_string(metric);
  j["f1_positive"] = f1_positive;
  j["subsample"] = {{"rule", to_string(subsample)}};
  j["seed"] = seed;
  j["experiment"] = {{"kind", to_string(experiment.kind)},
                     {"gas_variant", to_string(experiment.gas_variant)},
                     {"batches", experiment.batches},
                     {"targets", experiment.targets},
                     {"multi_target", experiment.multi_target},
                     {"train_on_target", experiment.train_on_target}};
  return j;
}

json RunReport::to_json() const {
  json rows = json::array();
  for (const TaskResult& r : results) {
    json row = {{"task", r.task}, {"metric", r.metric}, {"value", r.value}};
    if (r.h > 0) row["h"] = r.h;
    if (!r.details.is_null()) row["details"] = r.details;
    rows.push_back(std::move(row));
  }
  return json{{"config", config},
              {"results", rows},
              {"elapsed_seconds", elapsed_seconds},
              {"artifacts", artifacts}};
}

std::string RunReport::to_csv() const {
  std::string out = "task,metric,value\n";
  for (const TaskResult& r : results) {
    out += r.task;
    out += ',';
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += '\n';
  }
  return out;
}

const TaskResult* RunReport::find(const std::string& task) const {
  for (const TaskResult& r : results)
    if (r.task == task) return &r;
  return nullptr;
}

DatasetTable load_dataset(const ExperimentConfig& cfg, const std::filesystem::path& data_root) {
  std::filesystem::path path = cfg.dataset.path;
  if (!path.empty() && path.is_relative() && !data_root.empty()) path = data_root / path;
  switch (cfg.dataset.kind) {
    case DatasetKind::synth: return to_table(generate(cfg.dataset.scenario));
    case DatasetKind::csv: return load_csv(path);
    case DatasetKind::gas_sensor: return import_gas_batches(path);
    case DatasetKind::corn: return import_corn(path, cfg.dataset.property);
  }
  throw ConfigError("unknown dataset kind");
}

namespace {

struct EvalSet {
  std::string name;
  DatasetTable table;
};

double median_pairwise_distance(const Eigen::MatrixXd& cols) {
  const Eigen::Index n = cols.cols();
  if (n < 2) return 1.0;
  constexpr Eigen::Index cap = 512;
  std::vector<Eigen::Index> idx;
  if (n <= cap) {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
  } else {
    // Evenly strided subset keeps the heuristic deterministic.
    for (Eigen::Index k = 0; k < cap; ++k) idx.push_back(k * n / cap);
  }
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      dists.push_back((cols.col(idx[a]) - cols.col(idx[b])).norm());
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>((dists.size() - 1) / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid > 0.0 ? *mid : 1.0;
}

DomainEncoding resolve_encoding(DomainEncoding enc, const DatasetTable& pool,
                                const std::vector<EvalSet>& evals) {
  if (enc.scheme != EncodingScheme::onehot_device &&
      enc.scheme != EncodingScheme::device_and_time)
    return enc;
  int max_device = enc.n_devices;
  for (const SampleMeta& m : pool.meta) max_device = std::max(max_device, m.device);
  for (const EvalSet& e : evals)
    for (const SampleMeta& m : e.table.meta) max_device = std::max(max_device, m.device);
  enc.n_devices = max_device;
  return enc;
}

std::vector<int> class_labels_at(const DatasetTable& table,
                                 const std::vector<Eigen::Index>& idx,
                                 const std::string& what) {
  const auto all = table.labels_as_class();
  std::vector<int> out;
  out.reserve(idx.size());
  for (Eigen::Index j : idx) {
    const auto& v = all[static_cast<std::size_t>(j)];
    if (!v) throw ConfigError(what + ": sample " + std::to_string(j) + " has no class label");
    out.push_back(*v);
  }
  return out;
}

Eigen::VectorXd value_labels_at(const DatasetTable& table, const std::vector<Eigen::Index>& idx,
                                const std::string& what) {
  const auto all = table.labels_as_value();
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  Eigen::Index k = 0;
  for (Eigen::Index j : idx) {
    const auto& v = all[static_cast<std::size_t>(j)];
    if (!v) throw ConfigError(what + ": sample " + std::to_string(j) + " has no target value");
    out(k++) = *v;
  }
  return out;
}

Eigen::MatrixXd columns_at(const Eigen::MatrixXd& M, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  Eigen::Index k = 0;
  for (Eigen::Index j : idx) out.col(k++) = M.col(j);
  return out;
}

// Label matrix for the dependence term: only source-labeled columns carry
// label information.
LabelMatrix build_label_matrix(const DatasetTable& pool, bool regression) {
  const Eigen::Index n = pool.n_samples();
  if (regression) {
    const auto values = pool.labels_as_value();
    std::vector<std::optional<double>> targets(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      const SampleMeta& m = pool.meta[static_cast<std::size_t>(j)];
      if (m.role == Role::source_labeled) {
        if (!values[static_cast<std::size_t>(j)])
          throw ConfigError("source sample " + std::to_string(j) + " has no target value");
        targets[static_cast<std::size_t>(j)] = values[static_cast<std::size_t>(j)];
      }
    }
    return LabelMatrix::regression(targets, true);
  }
  const auto classes = pool.labels_as_class();
  std::set<int> distinct;
  for (Eigen::Index j = 0; j < n; ++j)
    if (pool.meta[static_cast<std::size_t>(j)].role == Role::source_labeled &&
        classes[static_cast<std::size_t>(j)])
      distinct.insert(*classes[static_cast<std::size_t>(j)]);
  if (distinct.size() < 2)
    throw ConfigError("label dependence needs at least two source classes");
  std::map<int, int> to_id;
  for (int c : distinct) to_id.emplace(c, static_cast<int>(to_id.size()));
  std::vector<std::optional<int>> ids(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const SampleMeta& m = pool.meta[static_cast<std::size_t>(j)];
    const auto& c = classes[static_cast<std::size_t>(j)];
    if (m.role == Role::source_labeled && c) ids[static_cast<std::size_t>(j)] = to_id.at(*c);
  }
  return LabelMatrix::classification(ids, static_cast<int>(to_id.size()));
}

struct PipelineContext {
  const ExperimentConfig& cfg;
  std::vector<int> hs;  // ascending, deduplicated
  bool sweeping = false;
};

double score_classification(const ExperimentConfig& cfg, const std::vector<int>& predicted,
                            const std::vector<int>& truth) {
  return cfg.metric == MetricKind::f1 ? metric_f1(predicted, truth, cfg.f1_positive)
                                      : metric_accuracy(predicted, truth);
}

// Fits the configured subspace on the pool once (at the largest h) and scores
// the predictor on every evaluation set for every requested h. Slicing the top
// rows of the full projection equals refitting at the smaller h because the
// eigenbasis does not depend on h.
std::vector<TaskResult> run_pipeline(const DatasetTable& pool, const std::vector<EvalSet>& evals,
                                     const PipelineContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto started = std::chrono::steady_clock::now();
  const bool regression = cfg.predictor.kind == PredictorKind::ridge;
  const std::vector<Eigen::Index> train_idx = pool.indices_with_role(Role::source_labeled);
  if (train_idx.empty()) throw ConfigError("pool has no source-labeled samples");
  for (const EvalSet& e : evals)
    if (e.table.n_samples() == 0) throw ConfigError(e.name + ": evaluation set is empty");

  std::vector<TaskResult> rows;
  const std::string metric_name = to_string(cfg.metric);

  auto emit = [&](const EvalSet& eval, int h, double value, json details) {
    TaskResult r;
    r.base = eval.name;
    r.task = ctx.sweeping && h > 0 ? eval.name + "@h=" + std::to_string(h) : eval.name;
    r.h = h;
    r.metric = metric_name;
    r.value = value;
    r.details = std::move(details);
    rows.push_back(std::move(r));
  };

  auto train_and_score = [&](const Eigen::MatrixXd& Z_train,
                             const std::vector<Eigen::MatrixXd>& Z_evals, int h,
                             json base_details) {
    if (regression) {
      const Eigen::VectorXd y = value_labels_at(pool, train_idx, "pool");
      const RidgeModel model = fit_ridge(Z_train, y, cfg.predictor.lambda);
      for (std::size_t e = 0; e < evals.size(); ++e) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(evals[e].table.n_samples()));
        std::iota(all.begin(), all.end(), 0);
        const Eigen::VectorXd truth = value_labels_at(evals[e].table, all, evals[e].name);
        emit(evals[e], h, metric_rmse(predict_value(model, Z_evals[e]), truth), base_details);
      }
    } else {
      const std::vector<int> labels = class_labels_at(pool, train_idx, "pool");
      LogisticOptions opt;
      opt.l2 = cfg.predictor.l2;
      const LogisticModel model = fit_logistic(Z_train, labels, opt);
      for (std::size_t e = 0; e < evals.size(); ++e) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(evals[e].table.n_samples()));
        std::iota(all.begin(), all.end(), 0);
        const std::vector<int> truth = class_labels_at(evals[e].table, all, evals[e].name);
        emit(evals[e], h, score_classification(cfg, predict_class(model, Z_evals[e]), truth),
             base_details);
      }
    }
  };

  json details;
  details["n_pool"] = pool.n_samples();
  details["n_source"] = static_cast<Eigen::Index>(train_idx.size());

  if (cfg.method == PipelineMethod::none) {
    std::vector<Eigen::MatrixXd> Z_evals;
    for (const EvalSet& e : evals) Z_evals.push_back(e.table.features);
    train_and_score(columns_at(pool.features, train_idx), Z_evals, 0, details);
  } else {
    // Resolve the kernel width on the matrix the kernel will actually see.
    KernelSpec kernel = cfg.kernel.spec;
    const bool augmented = cfg.method != PipelineMethod::kpca && cfg.augment;
    DomainEncoding enc = resolve_encoding(cfg.encoding, pool, evals);
    Eigen::MatrixXd D_pool;
    if (cfg.method != PipelineMethod::kpca) D_pool = encode(enc, pool.backgrounds());
    if (cfg.kernel.sigma_auto) {
      kernel.sigma = median_pairwise_distance(augmented ? augment(pool.features, D_pool)
                                                        : pool.features);
      details["sigma"] = kernel.sigma;
    }

    const int h_max = *std::max_element(ctx.hs.begin(), ctx.hs.end());
    if (h_max > pool.n_samples())
      throw ConfigError("h = " + std::to_string(h_max) + " exceeds the pool size of " +
                        std::to_string(pool.n_samples()));

    SubspaceModel model;
    if (cfg.method == PipelineMethod::kpca) {
      model = fit_kpca(pool.features, kernel, h_max);
    } else {
      const double gamma = cfg.method == PipelineMethod::smida ? cfg.gamma : 0.0;
      SubspaceOptions options{kernel, h_max, cfg.mu, gamma, cfg.augment};
      std::optional<LabelMatrix> Y;
      if (gamma > 0.0) Y = build_label_matrix(pool, regression);
      model = fit(pool.features, D_pool, Y ? &*Y : nullptr, options);
    }

    const Eigen::MatrixXd Z_pool = project(model, pool.features, D_pool);
    std::vector<Eigen::MatrixXd> Z_evals_full;
    for (const EvalSet& e : evals) {
      Eigen::MatrixXd D_eval;
      if (model.augmented) D_eval = encode(enc, e.table.backgrounds());
      Z_evals_full.push_back(project(model, e.table.features, D_eval));
    }

    for (int h : ctx.hs) {
      json d = details;
      d["h"] = h;
      const int head = std::min(h, 5);
      d["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                             model.eigenvalues.data() + head);
      std::vector<Eigen::MatrixXd> Z_evals;
      for (const Eigen::MatrixXd& Z : Z_evals_full) Z_evals.push_back(Z.topRows(h));
      train_and_score(columns_at(Z_pool.topRows(h), train_idx), Z_evals, h, std::move(d));
    }
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  for (TaskResult& r : rows) r.details["seconds"] = seconds;
  return rows;
}

// Mean of the metric over a group of rows, one average row per h.
void append_averages(std::vector<TaskResult>& rows, const std::vector<TaskResult>& parts,
                     const std::string& name, bool sweeping) {
  std::map<int, std::pair<double, int>> by_h;
  for (const TaskResult& r : parts) {
    auto& acc = by_h[r.h];
    acc.first += r.value;
    acc.second += 1;
  }
  for (const auto& [h, acc] : by_h) {
    TaskResult r;
    r.base = name;
    r.task = sweeping && h > 0 ? name + "@h=" + std::to_string(h) : name;
    r.h = h;
    r.metric = parts.front().metric;
    r.value = acc.first / acc.second;
    r.details = json{{"n_tasks", acc.second}};
    rows.push_back(std::move(r));
  }
}

std::vector<Eigen::Index> indices_where(const DatasetTable& t,
                                        const std::function<bool(const SampleMeta&)>& pred) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < t.n_samples(); ++j)
    if (pred(t.meta[static_cast<std::size_t>(j)])) out.push_back(j);
  return out;
}

std::vector<TaskResult> run_single_split(const ExperimentConfig& cfg, const PipelineContext& ctx,
                                         const std::filesystem::path& data_root) {
  DatasetTable table = load_dataset(cfg, data_root);
  if (cfg.zscore_per_batch) table = zscore_per_batch(table);
  const std::vector<Eigen::Index> test_idx = table.indices_with_role(Role::target_test);
  if (test_idx.empty()) throw ConfigError("dataset has no target-test samples");
  EvalSet eval{"transfer", table.select(test_idx)};

  DatasetTable pool = table;
  if (cfg.subsample == SubsampleRule::twice_source) {
    const Eigen::Index n_source =
        static_cast<Eigen::Index>(pool.indices_with_role(Role::source_labeled).size());
    pool = subsample_target(pool, 2 * n_source, cfg.seed);
  }
  std::vector<EvalSet> evals;
  evals.push_back(std::move(eval));
  return run_pipeline(pool, evals, ctx);
}

std::vector<TaskResult> run_gas_batches(const ExperimentConfig& cfg, const PipelineContext& ctx,
                                        const std::filesystem::path& data_root) {
  DatasetTable table = load_dataset(cfg, data_root);
  if (cfg.zscore_per_batch) table = zscore_per_batch(table);

  const std::vector<Eigen::Index> source_idx =
      indices_where(table, [](const SampleMeta& m) { return m.batch == 1; });
  if (source_idx.empty()) throw ConfigError("gas experiment: no batch-1 samples");

  std::vector<TaskResult> rows;
  std::vector<TaskResult> batch_rows;
  for (int b : cfg.experiment.batches) {
    const bool discrete = cfg.experiment.gas_variant == GasVariant::discrete;
    const std::vector<Eigen::Index> candidate_idx =
        indices_where(table, [&](const SampleMeta& m) {
          return discrete ? m.batch == b : (m.batch >= 2 && m.batch <= b);
        });
    const std::vector<Eigen::Index> eval_idx =
        indices_where(table, [&](const SampleMeta& m) { return m.batch == b; });
    if (eval_idx.empty())
      throw ConfigError("gas experiment: no samples in batch " + std::to_string(b));

    std::vector<Eigen::Index> pool_idx = source_idx;
    pool_idx.insert(pool_idx.end(), candidate_idx.begin(), candidate_idx.end());
    DatasetTable pool = table.select(pool_idx);
    for (SampleMeta& m : pool.meta) {
      if (m.batch == 1)
        m.role = Role::source_labeled;
      else
        m.role = m.batch == b ? Role::target_test : Role::unlabeled;
    }
    if (cfg.subsample == SubsampleRule::twice_source)
      pool = subsample_target(pool, 2 * static_cast<Eigen::Index>(source_idx.size()),
                              cfg.seed + static_cast<std::uint64_t>(b));

    DatasetTable eval_table = table.select(eval_idx);
    for (SampleMeta& m : eval_table.meta) m.role = Role::target_test;

    std::vector<EvalSet> evals;
    evals.push_back({"batch" + std::to_string(b), std::move(eval_table)});
    const std::vector<TaskResult> part = run_pipeline(pool, evals, ctx);
    batch_rows.insert(batch_rows.end(), part.begin(), part.end());
  }
  rows = batch_rows;
  append_averages(rows, batch_rows, "average", ctx.sweeping);
  return rows;
}

std::vector<TaskResult> run_corn_transfer(const ExperimentConfig& cfg, const PipelineContext& ctx,
                                          const std::filesystem::path& data_root) {
  std::filesystem::path dir = cfg.dataset.path;
  if (dir.is_relative() && !data_root.empty()) dir = data_root / dir;
  if (cfg.dataset.kind != DatasetKind::corn)
    throw ConfigError("corn-transfer experiment needs dataset.kind = \"corn\"");
  if (cfg.predictor.kind != PredictorKind::ridge)
    throw ConfigError("corn-transfer experiment needs the ridge predictor");

  const std::map<std::string, int> device_of = {{"mp5", 2}, {"mp6", 3}};
  std::vector<TaskResult> rows;
  std::map<std::string, std::vector<TaskResult>> per_target;
  std::map<std::string, std::vector<TaskResult>> per_target_oracle;

  for (const std::string& property : corn_properties()) {
    ExperimentConfig cfg_p = cfg;
    cfg_p.dataset.property = property;
    DatasetTable table = load_dataset(cfg_p, data_root);
    if (cfg.zscore_per_batch) table = zscore_per_batch(table);

    const std::vector<Eigen::Index> source_idx = indices_where(
        table, [](const SampleMeta& m) { return m.role == Role::source_labeled; });

    auto target_test_idx = [&](int device) {
      return indices_where(table, [&](const SampleMeta& m) {
        return m.device == device && m.role == Role::target_test;
      });
    };

    if (cfg.experiment.multi_target) {
      // One pooled fit covers all targets; each target is scored separately.
      std::vector<Eigen::Index> pool_idx = source_idx;
      std::vector<EvalSet> evals;
      for (const std::string& t : cfg.experiment.targets) {
        const std::vector<Eigen::Index> idx = target_test_idx(device_of.at(t));
        pool_idx.insert(pool_idx.end(), idx.begin(), idx.end());
        evals.push_back({t + "/" + property, table.select(idx)});
      }
      std::sort(pool_idx.begin(), pool_idx.end());
      const std::vector<TaskResult> part = run_pipeline(table.select(pool_idx), evals, ctx);
      for (const TaskResult& r : part) {
        rows.push_back(r);
        per_target[r.base.substr(0, r.base.find('/'))].push_back(r);
      }
    } else {
      for (const std::string& t : cfg.experiment.targets) {
        const std::vector<Eigen::Index> idx = target_test_idx(device_of.at(t));
        std::vector<Eigen::Index> pool_idx = source_idx;
        pool_idx.insert(pool_idx.end(), idx.begin(), idx.end());
        std::sort(pool_idx.begin(), pool_idx.end());
        std::vector<EvalSet> evals;
        evals.push_back({t + "/" + property, table.select(idx)});
        const std::vector<TaskResult> part = run_pipeline(table.select(pool_idx), evals, ctx);
        for (const TaskResult& r : part) {
          rows.push_back(r);
          per_target[t].push_back(r);
        }
      }
    }

    if (cfg.experiment.train_on_target) {
      // Reference: ridge on the target's own training split, original features.
      for (const std::string& t : cfg.experiment.targets) {
        const int device = device_of.at(t);
        const std::vector<Eigen::Index> train_idx = indices_where(
            table,
            [&](const SampleMeta& m) { return m.device == device && m.role == Role::unlabeled; });
        const std::vector<Eigen::Index> test_idx = target_test_idx(device);
        const Eigen::VectorXd y = value_labels_at(table, train_idx, t + " train");
        const Eigen::VectorXd truth = value_labels_at(table, test_idx, t + " test");
        const RidgeModel model =
            fit_ridge(columns_at(table.features, train_idx), y, cfg.predictor.lambda);
        const double rmse =
            metric_rmse(predict_value(model, columns_at(table.features, test_idx)), truth);
        TaskResult r;
        r.base = t + "/" + property + "/oracle";
        r.task = r.base;
        r.h = 0;
        r.metric = "rmse";
        r.value = rmse;
        r.details = json{{"n_train", train_idx.size()}, {"n_eval", test_idx.size()}};
        rows.push_back(r);
        per_target_oracle[t].push_back(r);
      }
    }
  }

  for (const std::string& t : cfg.experiment.targets) {
    if (per_target.count(t)) append_averages(rows, per_target.at(t), t + "/average", ctx.sweeping);
    if (per_target_oracle.count(t))
      append_averages(rows, per_target_oracle.at(t), t + "/oracle-average", false);
  }
  return rows;
}

void write_report(RunReport& report, const std::filesystem::path& out_dir) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  // Names are relative to out_dir so two runs of one config produce
  // byte-identical reports regardless of where they were written.
  report.artifacts.push_back("report.json");
  report.artifacts.push_back("report.csv");
  {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (out_dir / "report.json").string());
    out << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "report.csv", std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (out_dir / "report.csv").string());
    out << report.to_csv();
  }
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& options) {
  if (options.method_override) cfg.method = *options.method_override;
  if (options.seed_override) cfg.seed = *options.seed_override;
  return cfg;
}

PipelineContext make_context(const ExperimentConfig& cfg, const RunOptions& options) {
  PipelineContext ctx{cfg, {}, !options.sweep_h.empty()};
  ctx.hs = options.sweep_h.empty() ? std::vector<int>{cfg.h} : options.sweep_h;
  std::sort(ctx.hs.begin(), ctx.hs.end());
  ctx.hs.erase(std::unique(ctx.hs.begin(), ctx.hs.end()), ctx.hs.end());
  if (ctx.hs.front() < 1) throw ConfigError("h values must be >= 1");
  return ctx;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg_in, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = apply_overrides(cfg_in, options);
  const PipelineContext ctx = make_context(cfg, options);

  RunReport report;
  report.config = cfg.to_json();
  switch (cfg.experiment.kind) {
    case ExperimentKind::single_split:
      report.results = run_single_split(cfg, ctx, options.data_root);
      break;
    case ExperimentKind::gas_batches:
      report.results = run_gas_batches(cfg, ctx, options.data_root);
      break;
    case ExperimentKind::corn_transfer:
      report.results = run_corn_transfer(cfg, ctx, options.data_root);
      break;
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_report(report, options.out_dir);
  return report;
}

RunReport run_fit_transform(const ExperimentConfig& cfg_in, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = apply_overrides(cfg_in, options);
  if (!options.sweep_h.empty())
    throw ConfigError("fit-transform does not support a dimension sweep");

  DatasetTable table = load_dataset(cfg, options.data_root);
  if (cfg.zscore_per_batch) table = zscore_per_batch(table);
  const bool regression = cfg.predictor.kind == PredictorKind::ridge;

  Eigen::MatrixXd Z;
  json details;
  details["n_samples"] = table.n_samples();
  if (cfg.method == PipelineMethod::none) {
    Z = table.features;
  } else {
    KernelSpec kernel = cfg.kernel.spec;
    DomainEncoding enc = resolve_encoding(cfg.encoding, table, {});
    Eigen::MatrixXd D;
    if (cfg.method != PipelineMethod::kpca) D = encode(enc, table.backgrounds());
    const bool augmented = cfg.method != PipelineMethod::kpca && cfg.augment;
    if (cfg.kernel.sigma_auto) {
      kernel.sigma =
          median_pairwise_distance(augmented ? augment(table.features, D) : table.features);
      details["sigma"] = kernel.sigma;
    }
    SubspaceModel model;
    if (cfg.method == PipelineMethod::kpca) {
      model = fit_kpca(table.features, kernel, cfg.h);
    } else {
      const double gamma = cfg.method == PipelineMethod::smida ? cfg.gamma : 0.0;
      std::optional<LabelMatrix> Y;
      if (gamma > 0.0) Y = build_label_matrix(table, regression);
      model = fit(table.features, D, Y ? &*Y : nullptr,
                  SubspaceOptions{kernel, cfg.h, cfg.mu, gamma, cfg.augment});
    }
    Z = project(model, table.features, D);
    details["eigenvalues"] = std::vector<double>(
        model.eigenvalues.data(), model.eigenvalues.data() + std::min<int>(cfg.h, 5));
  }

  DatasetTable embedding;
  embedding.features = Z;
  for (Eigen::Index r = 0; r < Z.rows(); ++r)
    embedding.feature_names.push_back("z" + std::to_string(r + 1));
  embedding.meta = table.meta;

  RunReport report;
  report.config = cfg.to_json();
  TaskResult r;
  r.task = r.base = "embedding";
  r.h = cfg.method == PipelineMethod::none ? 0 : cfg.h;
  r.metric = "n_samples";
  r.value = static_cast<double>(table.n_samples());
  r.details = details;
  report.results.push_back(std::move(r));
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    save_csv(embedding, options.out_dir / "embedding.csv");
    report.artifacts.push_back("embedding.csv");
    write_report(report, options.out_dir);
  }
  return report;
}

}  // namespace mida
