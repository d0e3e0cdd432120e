#include "mida/kernels.hpp"

#include <cmath>

namespace mida {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::polynomial: return "polynomial";
    case KernelFamily::rbf: return "rbf";
  }
  throw std::invalid_argument("unknown kernel family");
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "linear") return KernelFamily::linear;
  if (name == "polynomial" || name == "poly") return KernelFamily::polynomial;
  if (name == "rbf" || name == "gaussian") return KernelFamily::rbf;
  throw std::invalid_argument("unknown kernel family: " + name);
}

void KernelSpec::validate() const {
  if (family == KernelFamily::polynomial && degree < 1)
    throw std::invalid_argument("polynomial kernel needs degree >= 1");
  if (family == KernelFamily::polynomial && sigma <= 0.0)
    throw std::invalid_argument("polynomial kernel needs sigma > 0");
  if (family == KernelFamily::rbf && sigma <= 0.0)
    throw std::invalid_argument("rbf kernel needs sigma > 0");
}

namespace {

double eval_from_parts(const KernelSpec& spec, double dot_xy, double sq_dist) {
  switch (spec.family) {
    case KernelFamily::linear:
      return dot_xy;
    case KernelFamily::polynomial:
      return std::pow(spec.sigma * dot_xy + 1.0, spec.degree);
    case KernelFamily::rbf:
      return std::exp(-sq_dist / (2.0 * spec.sigma * spec.sigma));
  }
  throw std::invalid_argument("unknown kernel family");
}

double eval_cols(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                 Eigen::Index i, const Eigen::Ref<const Eigen::MatrixXd>& B, Eigen::Index j) {
  if (spec.family == KernelFamily::rbf)
    return eval_from_parts(spec, 0.0, (A.col(i) - B.col(j)).squaredNorm());
  return eval_from_parts(spec, A.col(i).dot(B.col(j)), 0.0);
}

template <bool Parallel>
GramMatrix gram_impl(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  spec.validate();
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd K(n, n);
  // Entries are independent, so the parallel loop is deterministic.
#pragma omp parallel for schedule(dynamic, 8) if (Parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = eval_cols(spec, X, i, X, j);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return {std::move(K), spec};
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  spec.validate();
  if (x.size() != y.size())
    throw DimensionError("kernel_eval: vectors differ in length (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  if (spec.family == KernelFamily::rbf)
    return eval_from_parts(spec, 0.0, (x - y).squaredNorm());
  return eval_from_parts(spec, x.dot(y), 0.0);
}

GramMatrix gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return gram_impl<true>(spec, X);
}

GramMatrix reference::gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return gram_impl<false>(spec, X);
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B) {
  spec.validate();
  if (A.rows() != B.rows())
    throw DimensionError("cross_gram: sample dimensions differ (" + std::to_string(A.rows()) +
                         " vs " + std::to_string(B.rows()) + ")");
  Eigen::MatrixXd K(A.cols(), B.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < B.cols(); ++j)
    for (Eigen::Index i = 0; i < A.cols(); ++i) K(i, j) = eval_cols(spec, A, i, B, j);
  return K;
}

Eigen::MatrixXd centering_matrix(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("centering_matrix: n must be positive");
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  H.array() -= 1.0 / static_cast<double>(n);
  return H;
}

namespace {

template <bool Parallel>
Eigen::MatrixXd center_gram_impl(const Eigen::Ref<const Eigen::MatrixXd>& K) {
  if (K.rows() != K.cols()) throw DimensionError("center_gram: matrix is not square");
  const Eigen::Index n = K.rows();
  const Eigen::VectorXd row_means = K.rowwise().mean();
  const Eigen::VectorXd col_means = K.colwise().mean();
  const double grand_mean = K.mean();
  Eigen::MatrixXd out(n, n);
#pragma omp parallel for schedule(static) if (Parallel)
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      out(i, j) = K(i, j) - row_means(i) - col_means(j) + grand_mean;
  return out;
}

}  // namespace

Eigen::MatrixXd center_gram(const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return center_gram_impl<true>(K);
}

namespace {

template <bool Parallel>
double hsic_impl(const GramMatrix& kx, const GramMatrix& ky) {
  const Eigen::Index n = kx.n();
  if (n != ky.n())
    throw DimensionError("hsic: Gram matrices have different sizes (" + std::to_string(n) +
                         " vs " + std::to_string(ky.n()) + ")");
  if (n < 2) throw std::invalid_argument("hsic: needs at least two samples");
  const Eigen::MatrixXd kyc = center_gram_impl<Parallel>(ky.entries);
  // tr(Kx H Ky H) = sum_ij Kx(i,j) * (H Ky H)(i,j) since both factors are symmetric.
  // Per-row partial sums keep the accumulation order fixed regardless of threads.
  Eigen::VectorXd partial(n);
#pragma omp parallel for schedule(static) if (Parallel)
  for (Eigen::Index i = 0; i < n; ++i) partial(i) = kx.entries.row(i).dot(kyc.row(i));
  double trace = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) trace += partial(i);
  const double scale = static_cast<double>(n - 1);
  return trace / (scale * scale);
}

}  // namespace

double hsic_empirical(const GramMatrix& kx, const GramMatrix& ky) {
  return hsic_impl<true>(kx, ky);
}

double reference::hsic_empirical(const GramMatrix& kx, const GramMatrix& ky) {
  return hsic_impl<false>(kx, ky);
}

}  // namespace mida
