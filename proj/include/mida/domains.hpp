#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mida/kernels.hpp"

namespace mida {

// Which split a sample belongs to. source_labeled rows carry labels usable for
// training; target_test rows are held out for evaluation; unlabeled rows only
// help the transductive subspace fit.
enum class Role { source_labeled, unlabeled, target_test };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

// Per-sample background information used to build domain features.
struct BackgroundRecord {
  int device = 1;
  double time = 0.0;
  int batch = 1;
  Role role = Role::unlabeled;
};

// How background records turn into domain feature columns:
//   onehot_device    one column slot per device id (1..n_devices)
//   device_and_time  two rows per device: indicator and indicator*time
//   batch_index      single row holding the batch number (chronological index)
//   onehot_domain    two slots: source (role source_labeled) vs everything else
enum class EncodingScheme { onehot_device, device_and_time, batch_index, onehot_domain };

std::string to_string(EncodingScheme scheme);
EncodingScheme encoding_scheme_from_string(const std::string& name);

struct DomainEncoding {
  EncodingScheme scheme = EncodingScheme::onehot_domain;
  int n_devices = 1;  // onehot_device / device_and_time only

  Eigen::Index dimension() const;
};

// Domain feature matrix D, one column per sample.
Eigen::MatrixXd encode(const DomainEncoding& encoding,
                       const std::vector<BackgroundRecord>& records);

// Linear kernel on domain features: Kd = D^T D.
GramMatrix domain_kernel(const Eigen::Ref<const Eigen::MatrixXd>& D);

// Feature augmentation [X; D] (columns are samples).
Eigen::MatrixXd augment(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::MatrixXd>& D);

}  // namespace mida
