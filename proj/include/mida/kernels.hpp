#pragma once

#include <Eigen/Dense>
#include <string>

#include "mida/errors.hpp"

namespace mida {

enum class KernelFamily { linear, polynomial, rbf };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Kernel on column vectors:
//   linear      k(x,y) = x.y
//   polynomial  k(x,y) = (sigma * x.y + 1)^degree
//   rbf         k(x,y) = exp(-|x-y|^2 / (2 sigma^2))
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  int degree = 2;       // polynomial only
  double sigma = 1.0;   // polynomial scale / rbf width

  void validate() const;

  static KernelSpec linear() { return {KernelFamily::linear, 0, 0.0}; }
  static KernelSpec polynomial(int degree, double sigma = 1.0) {
    return {KernelFamily::polynomial, degree, sigma};
  }
  static KernelSpec rbf(double sigma) { return {KernelFamily::rbf, 0, sigma}; }
};

// Gram matrix of a sample set together with the kernel that produced it.
struct GramMatrix {
  Eigen::MatrixXd entries;
  KernelSpec spec;

  Eigen::Index n() const { return entries.rows(); }
};

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

// Gram matrix of the columns of X (samples are columns throughout).
GramMatrix gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X);

// cross(i,j) = k(A.col(i), B.col(j)); rows index the first set.
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B);

// H = I - (1/n) 11^T
Eigen::MatrixXd centering_matrix(Eigen::Index n);

// H K H computed from row/column means, without materializing H.
Eigen::MatrixXd center_gram(const Eigen::Ref<const Eigen::MatrixXd>& K);

// Empirical HSIC (1/(n-1)^2) tr(Kx H Ky H).
double hsic_empirical(const GramMatrix& kx, const GramMatrix& ky);

// Single-threaded twins of the parallel routines above. Same arithmetic and
// summation order, so results are expected to match bit for bit; kept for tests
// and benchmarks.
namespace reference {
GramMatrix gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X);
double hsic_empirical(const GramMatrix& kx, const GramMatrix& ky);
}  // namespace reference

}  // namespace mida
