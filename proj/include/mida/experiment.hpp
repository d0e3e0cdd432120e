#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mida/dataio.hpp"
#include "mida/predict.hpp"
#include "mida/subspace.hpp"
#include "mida/synth.hpp"

namespace mida {

enum class DatasetKind { synth, csv, gas_sensor, corn };
enum class PipelineMethod { mida, smida, kpca, none };
enum class PredictorKind { logistic, ridge };
enum class MetricKind { accuracy, f1, rmse };
enum class ExperimentKind { single_split, gas_batches, corn_transfer };
enum class GasVariant { discrete, continuous };
enum class SubsampleRule { none, twice_source };

std::string to_string(PipelineMethod m);
PipelineMethod pipeline_method_from_string(const std::string& name);
std::string to_string(MetricKind m);
MetricKind metric_from_string(const std::string& name);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synth;
  std::string path;  // csv file or dataset directory (gas, corn)
  SynthScenario scenario;
  std::string property = "moisture";  // corn single-split only
};

struct KernelConfig {
  KernelSpec spec;          // family/degree/sigma
  bool sigma_auto = false;  // median pairwise distance heuristic
};

struct PredictorConfig {
  PredictorKind kind = PredictorKind::logistic;
  double l2 = 1e-4;      // logistic ridge penalty
  double lambda = 1.0;   // ridge regression penalty
};

struct ExperimentSection {
  ExperimentKind kind = ExperimentKind::single_split;
  GasVariant gas_variant = GasVariant::continuous;
  std::vector<int> batches = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::string> targets = {"mp5", "mp6"};
  bool multi_target = false;
  bool train_on_target = false;  // extra within-target reference rows (corn)
};

// Full experiment description. from_json rejects unknown keys anywhere so a
// typo cannot silently fall back to a default; to_json writes every field, so
// the echoed config in a report is complete.
struct ExperimentConfig {
  DatasetConfig dataset;
  bool zscore_per_batch = false;
  DomainEncoding encoding;
  PipelineMethod method = PipelineMethod::mida;
  KernelConfig kernel;
  int h = 2;
  double mu = 1.0;
  double gamma = 0.0;
  bool augment = true;
  PredictorConfig predictor;
  MetricKind metric = MetricKind::accuracy;
  int f1_positive = 1;
  SubsampleRule subsample = SubsampleRule::none;
  std::uint64_t seed = 7;
  ExperimentSection experiment;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TaskResult {
  std::string task;   // display name, includes @h= suffix in sweeps
  std::string base;   // name without the sweep suffix
  int h = 0;          // 0 when the method has no subspace dimension
  std::string metric;
  double value = 0.0;
  nlohmann::json details;
};

struct RunReport {
  nlohmann::json config;  // materialized config echo
  std::vector<TaskResult> results;
  double elapsed_seconds = 0.0;
  std::vector<std::string> artifacts;  // files written by this run

  nlohmann::json to_json() const;
  std::string to_csv() const;  // task,metric,value
  const TaskResult* find(const std::string& task) const;
};

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing written
  std::vector<int> sweep_h;       // empty: config h only
  std::optional<PipelineMethod> method_override;
  std::optional<std::uint64_t> seed_override;
  std::filesystem::path data_root;  // prefix for relative dataset paths
};

DatasetTable load_dataset(const ExperimentConfig& cfg, const std::filesystem::path& data_root);

// Runs the configured experiment; writes report.json / report.csv into out_dir
// when given.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// Fits on the whole dataset and writes the projected coordinates
// (embedding.csv) plus a report.
RunReport run_fit_transform(const ExperimentConfig& cfg, const RunOptions& options = {});

}  // namespace mida
