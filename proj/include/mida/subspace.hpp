#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mida/domains.hpp"
#include "mida/kernels.hpp"

namespace mida {

enum class SubspaceMethod { mida, smida, kpca };

std::string to_string(SubspaceMethod method);
SubspaceMethod subspace_method_from_string(const std::string& name);

// Label matrix Y for the label-dependence term (one column per sample, zero
// columns for unlabeled samples).
struct LabelMatrix {
  Eigen::MatrixXd Y;  // c x n

  // One-hot rows per class id; samples without a label get a zero column.
  static LabelMatrix classification(const std::vector<std::optional<int>>& class_ids,
                                    int n_classes);
  // Single row of regression targets, centered over the labeled samples and
  // optionally scaled to unit variance; missing targets become zero.
  static LabelMatrix regression(const std::vector<std::optional<double>>& targets,
                                bool unit_variance = true);
};

struct SubspaceOptions {
  KernelSpec kernel;
  int h = 2;            // projected dimension
  double mu = 1.0;      // variance weight
  double gamma = 0.0;   // label dependence weight (> 0 selects SMIDA)
  bool augment = true;  // append domain features to X before the kernel
};

// Fitted subspace. Projection of new samples needs the retained training
// columns for the cross-kernel.
struct SubspaceModel {
  SubspaceMethod method = SubspaceMethod::mida;
  KernelSpec kernel;
  int h = 0;
  double mu = 0.0;
  double gamma = 0.0;
  bool augmented = false;
  Eigen::Index input_dim = 0;   // feature rows before augmentation
  Eigen::MatrixXd train;        // training columns as seen by the kernel
  Eigen::MatrixXd W;            // n x h, orthonormal columns
  Eigen::VectorXd eigenvalues;  // h values, descending

  // KPCA only: statistics for centering cross-kernel columns.
  bool centered = false;
  Eigen::VectorXd train_row_means;
  double train_mean = 0.0;
};

// Kx (-H Kd H + mu H + gamma H Ky H) Kx with H applied implicitly. Pass ky as
// nullptr when gamma == 0.
Eigen::MatrixXd objective_matrix(const GramMatrix& kx, const GramMatrix& kd,
                                 const GramMatrix* ky, double mu, double gamma);

// Top-h eigenpairs of a symmetric matrix, eigenvalues descending. Each
// eigenvector is canonicalized so its largest-magnitude entry is positive,
// which pins the sign ambiguity and keeps runs bit-reproducible.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> top_eigenvectors(
    const Eigen::Ref<const Eigen::MatrixXd>& A, int h);

// Precomputes the eigenbasis once so models for many h values are cheap; the
// dimension sweep uses this directly.
class SubspaceFitter {
 public:
  // Y may be nullptr (plain MIDA); required when options.gamma > 0.
  SubspaceFitter(const Eigen::Ref<const Eigen::MatrixXd>& X,
                 const Eigen::Ref<const Eigen::MatrixXd>& D, const LabelMatrix* Y,
                 const SubspaceOptions& options);

  SubspaceModel model(int h) const;
  Eigen::Index n_samples() const { return basis_vectors_.rows(); }

 private:
  SubspaceOptions options_;
  Eigen::Index input_dim_ = 0;
  Eigen::MatrixXd train_;
  Eigen::MatrixXd basis_vectors_;
  Eigen::VectorXd basis_values_;
};

// One-shot fit: MIDA when gamma == 0, SMIDA when gamma > 0 and Y is given.
SubspaceModel fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                  const Eigen::Ref<const Eigen::MatrixXd>& D, const LabelMatrix* Y,
                  const SubspaceOptions& options);

// Kernel PCA baseline: top-h eigenvectors of the centered Gram matrix.
SubspaceModel fit_kpca(const Eigen::Ref<const Eigen::MatrixXd>& X, const KernelSpec& kernel,
                       int h);

// Projects columns of X_new (with their domain features when the model was fit
// augmented; D_new may be empty otherwise). Training samples reproduce the
// training embedding exactly.
Eigen::MatrixXd project(const SubspaceModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new,
                        const Eigen::Ref<const Eigen::MatrixXd>& D_new);

}  // namespace mida
