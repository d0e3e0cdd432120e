#pragma once

#include <Eigen/Dense>
#include <vector>

// Deliberately naive re-implementations used only to cross-check the library.
// Everything here sticks to explicit loops and textbook formulas; none of it
// shares code with the optimized paths under src/.
namespace oracle {

Eigen::MatrixXd matmul_naive(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// I - (1/n) 11^T built entry by entry.
Eigen::MatrixXd centering_naive(Eigen::Index n);

// (1/(n-1)^2) tr(Kx H Ky H) with explicit H and naive products.
double hsic_naive(const Eigen::MatrixXd& kx, const Eigen::MatrixXd& ky);

// Kx (-H Kd H + mu H + gamma H Ky H) Kx, explicit H, naive products. Pass ky
// as nullptr when gamma == 0.
Eigen::MatrixXd objective_naive(const Eigen::MatrixXd& kx, const Eigen::MatrixXd& kd,
                                const Eigen::MatrixXd* ky, double mu, double gamma);

// All eigenvalues of a symmetric matrix, ascending, via Householder
// tridiagonalization followed by Sturm-sequence bisection. Small-n only.
std::vector<double> eigenvalues_bisect(const Eigen::MatrixXd& A);

}  // namespace oracle
