#include "mida/domains.hpp"

namespace mida {

std::string to_string(Role role) {
  switch (role) {
    case Role::source_labeled: return "source-labeled";
    case Role::unlabeled: return "unlabeled";
    case Role::target_test: return "target-test";
  }
  throw std::invalid_argument("unknown role");
}

Role role_from_string(const std::string& name) {
  if (name == "source-labeled" || name == "train") return Role::source_labeled;
  if (name == "unlabeled" || name == "") return Role::unlabeled;
  if (name == "target-test" || name == "test") return Role::target_test;
  throw std::invalid_argument("unknown role: " + name);
}

std::string to_string(EncodingScheme scheme) {
  switch (scheme) {
    case EncodingScheme::onehot_device: return "onehot-device";
    case EncodingScheme::device_and_time: return "device-and-time";
    case EncodingScheme::batch_index: return "batch-index";
    case EncodingScheme::onehot_domain: return "onehot-domain";
  }
  throw std::invalid_argument("unknown encoding scheme");
}

EncodingScheme encoding_scheme_from_string(const std::string& name) {
  if (name == "onehot-device") return EncodingScheme::onehot_device;
  if (name == "device-and-time") return EncodingScheme::device_and_time;
  if (name == "batch-index") return EncodingScheme::batch_index;
  if (name == "onehot-domain") return EncodingScheme::onehot_domain;
  throw std::invalid_argument("unknown encoding scheme: " + name);
}

Eigen::Index DomainEncoding::dimension() const {
  switch (scheme) {
    case EncodingScheme::onehot_device: return n_devices;
    case EncodingScheme::device_and_time: return 2 * static_cast<Eigen::Index>(n_devices);
    case EncodingScheme::batch_index: return 1;
    case EncodingScheme::onehot_domain: return 2;
  }
  throw std::invalid_argument("unknown encoding scheme");
}

Eigen::MatrixXd encode(const DomainEncoding& encoding,
                       const std::vector<BackgroundRecord>& records) {
  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  if (n == 0) throw std::invalid_argument("encode: no records");
  if ((encoding.scheme == EncodingScheme::onehot_device ||
       encoding.scheme == EncodingScheme::device_and_time) &&
      encoding.n_devices < 1)
    throw std::invalid_argument("encode: n_devices must be positive");

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(encoding.dimension(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const BackgroundRecord& rec = records[static_cast<std::size_t>(j)];
    switch (encoding.scheme) {
      case EncodingScheme::onehot_device:
      case EncodingScheme::device_and_time: {
        if (rec.device < 1 || rec.device > encoding.n_devices)
          throw std::invalid_argument("encode: device id " + std::to_string(rec.device) +
                                      " outside 1.." + std::to_string(encoding.n_devices));
        if (encoding.scheme == EncodingScheme::onehot_device) {
          D(rec.device - 1, j) = 1.0;
        } else {
          // Two rows per device: indicator, then indicator * time.
          D(2 * (rec.device - 1), j) = 1.0;
          D(2 * (rec.device - 1) + 1, j) = rec.time;
        }
        break;
      }
      case EncodingScheme::batch_index:
        D(0, j) = static_cast<double>(rec.batch);
        break;
      case EncodingScheme::onehot_domain:
        D(rec.role == Role::source_labeled ? 0 : 1, j) = 1.0;
        break;
    }
  }
  return D;
}

GramMatrix domain_kernel(const Eigen::Ref<const Eigen::MatrixXd>& D) {
  GramMatrix out;
  out.entries = D.transpose() * D;
  out.spec = KernelSpec::linear();
  return out;
}

Eigen::MatrixXd augment(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::MatrixXd>& D) {
  if (X.cols() != D.cols())
    throw DimensionError("augment: X has " + std::to_string(X.cols()) + " columns but D has " +
                         std::to_string(D.cols()));
  Eigen::MatrixXd out(X.rows() + D.rows(), X.cols());
  out.topRows(X.rows()) = X;
  out.bottomRows(D.rows()) = D;
  return out;
}

}  // namespace mida
