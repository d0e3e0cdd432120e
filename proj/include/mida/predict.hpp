#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mida/errors.hpp"

namespace mida {

struct LogisticOptions {
  double l2 = 1e-4;     // ridge penalty on weights (bias unpenalized)
  int max_iter = 500;
  double tol = 1e-6;    // gradient-norm stopping threshold
};

struct TrainTrace {
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  std::vector<double> loss_history;  // one entry per accepted step
};

// One-vs-all logistic regression trained by full-batch gradient descent with
// backtracking line search. Features are standardized internally, so the caller
// can feed raw subspace coordinates of any scale.
struct LogisticModel {
  std::vector<int> classes;       // sorted distinct training labels
  Eigen::MatrixXd weights;        // d x c, in standardized feature space
  Eigen::VectorXd bias;           // c
  Eigen::VectorXd feature_mean;   // d
  Eigen::VectorXd feature_scale;  // d, zero-variance features pinned to 1
  LogisticOptions options;
  std::vector<TrainTrace> traces;  // per class column
};

LogisticModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                           const std::vector<int>& labels, const LogisticOptions& options = {});

// Per-class sigmoid scores (c x n), not normalized across classes.
Eigen::MatrixXd predict_proba(const LogisticModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& Z);

// Argmax over class scores; ties go to the smaller class label.
std::vector<int> predict_class(const LogisticModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& Z);

// Ridge regression with unpenalized intercept, solved by LDLT on the normal
// equations.
struct RidgeModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double lambda = 0.0;
};

RidgeModel fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& Z, const Eigen::VectorXd& y,
                     double lambda);
Eigen::VectorXd predict_value(const RidgeModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& Z);

double metric_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);
// F1 of the given positive class; 0 when precision + recall is 0.
double metric_f1(const std::vector<int>& predicted, const std::vector<int>& truth,
                 int positive);
double metric_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

}  // namespace mida
