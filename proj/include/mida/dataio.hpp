#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mida/domains.hpp"
#include "mida/errors.hpp"
#include "mida/synth.hpp"

namespace mida {

// Per-sample metadata carried alongside the feature columns. Matches the
// reserved CSV columns.
struct SampleMeta {
  std::optional<std::string> label;  // class id or numeric target, empty if unknown
  int device = 1;
  double time = 0.0;
  int batch = 1;
  Role role = Role::unlabeled;
};

// In-memory dataset: features (one column per sample) plus metadata.
struct DatasetTable {
  Eigen::MatrixXd features;                // m x n
  std::vector<std::string> feature_names;  // size m
  std::vector<SampleMeta> meta;            // size n

  Eigen::Index n_samples() const { return features.cols(); }
  Eigen::Index n_features() const { return features.rows(); }

  std::vector<BackgroundRecord> backgrounds() const;
  DatasetTable select(const std::vector<Eigen::Index>& indices) const;
  std::vector<Eigen::Index> indices_with_role(Role role) const;

  // Labels parsed as integers / doubles; nullopt where the label is missing.
  std::vector<std::optional<int>> labels_as_class() const;
  std::vector<std::optional<double>> labels_as_value() const;
};

DatasetTable to_table(const SynthData& data);

// Canonical CSV: header row, feature columns first, then the reserved columns
// label,device,time,batch,role. Numbers use up to 17 significant digits, so
// save -> load -> save is byte-identical.
std::string to_csv(const DatasetTable& table);
DatasetTable parse_csv(std::istream& in, const std::string& path_for_errors);
DatasetTable load_csv(const std::filesystem::path& path);
void save_csv(const DatasetTable& table, const std::filesystem::path& path);

// Standardize every feature within each batch group: subtract the batch mean,
// divide by the batch sample standard deviation (n-1). Zero-variance features
// map to zero.
DatasetTable zscore_per_batch(const DatasetTable& table);

// Keeps every source-labeled sample and a seeded random subset of at most n_t
// of the remaining samples (original column order preserved).
DatasetTable subsample_target(const DatasetTable& table, Eigen::Index n_t, std::uint64_t seed);

// Gas-sensor batch file in svm-light format: "<gas>[;<concentration>] i:v ...",
// feature indices 1..128, gas labels 1..6. batch_index goes into the batch and
// time columns.
DatasetTable import_gas_file(std::istream& in, int batch_index, const std::string& path_for_errors);

// Directory with batch1.dat .. batch10.dat; validates the distributed layout
// (10 files, 13910 samples in total).
DatasetTable import_gas_batches(const std::filesystem::path& dir);

// Near-infrared corn benchmark, one property at a time. Expects m5spec.csv,
// mp5spec.csv, mp6spec.csv (80 x 700 each) and propvals.csv (80 x 4, columns
// moisture, oil, protein, starch) in the directory; values separated by commas
// or whitespace. Devices are numbered m5=1, mp5=2, mp6=3; every fourth sample
// (4, 8, ..., 80) is the test split. m5 training rows come out source-labeled,
// target-device test rows target-test, everything else unlabeled.
DatasetTable import_corn(const std::filesystem::path& dir, const std::string& property);

const std::vector<std::string>& corn_properties();

}  // namespace mida
