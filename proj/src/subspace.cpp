#include "mida/subspace.hpp"

#include <cmath>

namespace mida {

std::string to_string(SubspaceMethod method) {
  switch (method) {
    case SubspaceMethod::mida: return "mida";
    case SubspaceMethod::smida: return "smida";
    case SubspaceMethod::kpca: return "kpca";
  }
  throw std::invalid_argument("unknown subspace method");
}

SubspaceMethod subspace_method_from_string(const std::string& name) {
  if (name == "mida") return SubspaceMethod::mida;
  if (name == "smida") return SubspaceMethod::smida;
  if (name == "kpca") return SubspaceMethod::kpca;
  throw std::invalid_argument("unknown subspace method: " + name);
}

LabelMatrix LabelMatrix::classification(const std::vector<std::optional<int>>& class_ids,
                                        int n_classes) {
  if (n_classes < 1) throw std::invalid_argument("LabelMatrix: n_classes must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(class_ids.size());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n_classes, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& id = class_ids[static_cast<std::size_t>(j)];
    if (!id) continue;
    if (*id < 0 || *id >= n_classes)
      throw std::invalid_argument("LabelMatrix: class id " + std::to_string(*id) +
                                  " outside 0.." + std::to_string(n_classes - 1));
    Y(*id, j) = 1.0;
  }
  return {std::move(Y)};
}

LabelMatrix LabelMatrix::regression(const std::vector<std::optional<double>>& targets,
                                    bool unit_variance) {
  const Eigen::Index n = static_cast<Eigen::Index>(targets.size());
  double sum = 0.0;
  Eigen::Index labeled = 0;
  for (const auto& t : targets) {
    if (!t) continue;
    sum += *t;
    ++labeled;
  }
  if (labeled < 2) throw std::invalid_argument("LabelMatrix: need at least two targets");
  const double mean = sum / static_cast<double>(labeled);
  double ss = 0.0;
  for (const auto& t : targets)
    if (t) ss += (*t - mean) * (*t - mean);
  const double sd = std::sqrt(ss / static_cast<double>(labeled - 1));
  const double scale = (unit_variance && sd > 0.0) ? 1.0 / sd : 1.0;

  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = targets[static_cast<std::size_t>(j)];
    if (t) Y(0, j) = (*t - mean) * scale;
  }
  return {std::move(Y)};
}

Eigen::MatrixXd objective_matrix(const GramMatrix& kx, const GramMatrix& kd,
                                 const GramMatrix* ky, double mu, double gamma) {
  const Eigen::Index n = kx.n();
  if (kd.n() != n)
    throw DimensionError("objective_matrix: Kd size " + std::to_string(kd.n()) +
                         " does not match Kx size " + std::to_string(n));
  if (mu <= 0.0) throw std::invalid_argument("objective_matrix: mu must be > 0");
  if (gamma < 0.0) throw std::invalid_argument("objective_matrix: gamma must be >= 0");
  if (gamma > 0.0 && ky == nullptr)
    throw std::invalid_argument("objective_matrix: gamma > 0 needs a label Gram matrix");
  if (ky != nullptr && ky->n() != n)
    throw DimensionError("objective_matrix: Ky size " + std::to_string(ky->n()) +
                         " does not match Kx size " + std::to_string(n));

  // M = -H Kd H + mu H (+ gamma H Ky H); H K H via means, H itself never formed.
  Eigen::MatrixXd M = -center_gram(kd.entries);
  M.diagonal().array() += mu;
  M.array() -= mu / static_cast<double>(n);
  if (gamma > 0.0) M.noalias() += gamma * center_gram(ky->entries);

  Eigen::MatrixXd A = kx.entries * M * kx.entries;
  // Symmetrize: A is symmetric in exact arithmetic, this removes roundoff skew.
  A = 0.5 * (A + A.transpose()).eval();
  return A;
}

namespace {

// Flip each column so its largest-magnitude entry (first such index on ties) is
// positive; resolves the eigenvector sign ambiguity deterministically.
void canonicalize_columns(Eigen::MatrixXd& V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
      const double a = std::abs(V(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (V(best, c) < 0.0) V.col(c) = -V.col(c);
  }
}

struct EigenBasis {
  Eigen::MatrixXd vectors;  // n x n, columns by descending eigenvalue
  Eigen::VectorXd values;
};

EigenBasis full_eigenbasis(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != A.cols()) throw DimensionError("eigenbasis: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigenbasis: eigendecomposition failed to converge");
  // Eigen returns ascending order; flip to descending.
  EigenBasis basis;
  basis.vectors = solver.eigenvectors().rowwise().reverse();
  basis.values = solver.eigenvalues().reverse();
  canonicalize_columns(basis.vectors);
  return basis;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> top_eigenvectors(
    const Eigen::Ref<const Eigen::MatrixXd>& A, int h) {
  if (h < 1 || h > A.rows())
    throw std::invalid_argument("top_eigenvectors: h outside 1..n");
  EigenBasis basis = full_eigenbasis(A);
  return {basis.vectors.leftCols(h), basis.values.head(h)};
}

SubspaceFitter::SubspaceFitter(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& D, const LabelMatrix* Y,
                               const SubspaceOptions& options)
    : options_(options), input_dim_(X.rows()) {
  options_.kernel.validate();
  const Eigen::Index n = X.cols();
  if (n < 2) throw std::invalid_argument("fit: needs at least two samples");
  if (D.cols() != n)
    throw DimensionError("fit: X has " + std::to_string(n) + " samples but D has " +
                         std::to_string(D.cols()));
  if (options.mu <= 0.0) throw std::invalid_argument("fit: mu must be > 0");
  if (options.gamma < 0.0) throw std::invalid_argument("fit: gamma must be >= 0");
  if (options.gamma > 0.0 && Y == nullptr)
    throw std::invalid_argument("fit: gamma > 0 needs labels");
  if (Y != nullptr && Y->Y.cols() != n)
    throw DimensionError("fit: label matrix has " + std::to_string(Y->Y.cols()) +
                         " columns for " + std::to_string(n) + " samples");

  if (options.augment)
    train_ = augment(X, D);
  else
    train_ = X;
  const GramMatrix kx = gram(options_.kernel, train_);
  const GramMatrix kd = domain_kernel(D);
  GramMatrix ky;
  const GramMatrix* ky_ptr = nullptr;
  if (options.gamma > 0.0) {
    ky.entries = Y->Y.transpose() * Y->Y;
    ky.spec = KernelSpec::linear();
    ky_ptr = &ky;
  }
  const Eigen::MatrixXd A = objective_matrix(kx, kd, ky_ptr, options.mu, options.gamma);
  EigenBasis basis = full_eigenbasis(A);
  basis_vectors_ = std::move(basis.vectors);
  basis_values_ = std::move(basis.values);
}

SubspaceModel SubspaceFitter::model(int h) const {
  const Eigen::Index n = basis_vectors_.rows();
  if (h < 1 || h > n) throw std::invalid_argument("model: h outside 1..n");
  SubspaceModel m;
  m.method = options_.gamma > 0.0 ? SubspaceMethod::smida : SubspaceMethod::mida;
  m.kernel = options_.kernel;
  m.h = h;
  m.mu = options_.mu;
  m.gamma = options_.gamma;
  m.augmented = options_.augment;
  m.input_dim = input_dim_;
  m.train = train_;
  m.W = basis_vectors_.leftCols(h);
  m.eigenvalues = basis_values_.head(h);
  return m;
}

SubspaceModel fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                  const Eigen::Ref<const Eigen::MatrixXd>& D, const LabelMatrix* Y,
                  const SubspaceOptions& options) {
  return SubspaceFitter(X, D, Y, options).model(options.h);
}

SubspaceModel fit_kpca(const Eigen::Ref<const Eigen::MatrixXd>& X, const KernelSpec& kernel,
                       int h) {
  kernel.validate();
  const Eigen::Index n = X.cols();
  if (n < 2) throw std::invalid_argument("fit_kpca: needs at least two samples");
  if (h < 1 || h > n) throw std::invalid_argument("fit_kpca: h outside 1..n");

  const GramMatrix kx = gram(kernel, X);
  EigenBasis basis = full_eigenbasis(center_gram(kx.entries));

  SubspaceModel m;
  m.method = SubspaceMethod::kpca;
  m.kernel = kernel;
  m.h = h;
  m.augmented = false;
  m.input_dim = X.rows();
  m.train = X;
  m.W = basis.vectors.leftCols(h);
  m.eigenvalues = basis.values.head(h);
  m.centered = true;
  m.train_row_means = kx.entries.rowwise().mean();
  m.train_mean = kx.entries.mean();
  return m;
}

Eigen::MatrixXd project(const SubspaceModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_new,
                        const Eigen::Ref<const Eigen::MatrixXd>& D_new) {
  if (X_new.rows() != model.input_dim)
    throw DimensionError("project: expected " + std::to_string(model.input_dim) +
                         " feature rows, got " + std::to_string(X_new.rows()));
  Eigen::MatrixXd cols;
  if (model.augmented) {
    if (D_new.cols() != X_new.cols())
      throw DimensionError("project: model was fit with augmentation, D_new must match X_new");
    cols = augment(X_new, D_new);
  } else {
    cols = X_new;
  }
  if (cols.rows() != model.train.rows())
    throw DimensionError("project: sample dimension does not match the training columns");

  Eigen::MatrixXd K = cross_gram(model.kernel, model.train, cols);
  if (model.centered) {
    // Center each new kernel column the same way H K H centered the training
    // Gram matrix: k - mean(k) - train row means + overall train mean.
    const Eigen::RowVectorXd col_means = K.colwise().mean();
    K.rowwise() -= col_means;
    K.colwise() -= model.train_row_means;
    K.array() += model.train_mean;
  }
  return model.W.transpose() * K;
}

}  // namespace mida
