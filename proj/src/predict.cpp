#include "mida/predict.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mida {

namespace {

// log(1 + exp(s)) without overflow.
double log1pexp(double s) {
  if (s > 0.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

// Mean cross-entropy of sigmoid(scores) against y in {0,1}, plus the ridge term.
double binary_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& y, double l2,
                   const Eigen::VectorXd& w) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    sum += log1pexp(scores(i)) - y(i) * scores(i);
  return sum / static_cast<double>(scores.size()) + 0.5 * l2 * w.squaredNorm();
}

// Gradient descent with backtracking on one binary problem; Z is standardized,
// one column per sample.
TrainTrace fit_binary(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                      const LogisticOptions& opt, Eigen::VectorXd& w, double& b) {
  const Eigen::Index n = Z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  w = Eigen::VectorXd::Zero(Z.rows());
  b = 0.0;

  TrainTrace trace;
  double step = 1.0;
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
  double loss = binary_loss(scores, y, opt.l2, w);
  trace.loss_history.push_back(loss);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    const Eigen::VectorXd p = (1.0 + (-scores.array()).exp()).inverse().matrix();
    const Eigen::VectorXd residual = p - y;
    Eigen::VectorXd gw = Z * residual * inv_n + opt.l2 * w;
    const double gb = residual.sum() * inv_n;
    const double grad_sq = gw.squaredNorm() + gb * gb;

    trace.iterations = iter;
    trace.final_grad_norm = std::sqrt(grad_sq);
    if (trace.final_grad_norm <= opt.tol) {
      trace.converged = true;
      return trace;
    }

    // Armijo backtracking along the negative gradient, warm-started from twice
    // the last accepted step.
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd w_try = w - step * gw;
      const double b_try = b - step * gb;
      const Eigen::VectorXd scores_try = Z.transpose() * w_try + Eigen::VectorXd::Constant(n, b_try);
      const double loss_try = binary_loss(scores_try, y, opt.l2, w_try);
      if (loss_try <= loss - 1e-4 * step * grad_sq) {
        w = w_try;
        b = b_try;
        scores = scores_try;
        loss = loss_try;
        trace.loss_history.push_back(loss);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent step representable; gradient is numerically flat.
      trace.converged = true;
      return trace;
    }
  }
  trace.iterations = opt.max_iter;
  return trace;
}

}  // namespace

LogisticModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                           const std::vector<int>& labels, const LogisticOptions& options) {
  const Eigen::Index n = Z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionError("fit_logistic: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " samples");
  if (n < 2) throw std::invalid_argument("fit_logistic: needs at least two samples");

  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2)
    throw std::invalid_argument("fit_logistic: training labels contain a single class");

  LogisticModel model;
  model.options = options;
  model.classes.assign(distinct.begin(), distinct.end());

  // Standardize features once; zero-variance rows are centered and left at
  // scale 1 so they contribute nothing.
  model.feature_mean = Z.rowwise().mean();
  Eigen::MatrixXd Zs = Z.colwise() - model.feature_mean;
  model.feature_scale = (Zs.array().square().rowwise().sum() / static_cast<double>(n - 1))
                            .sqrt()
                            .matrix();
  for (Eigen::Index r = 0; r < model.feature_scale.size(); ++r)
    if (model.feature_scale(r) <= 0.0) model.feature_scale(r) = 1.0;
  Zs.array().colwise() /= model.feature_scale.array();

  const Eigen::Index c = static_cast<Eigen::Index>(model.classes.size());
  model.weights.resize(Z.rows(), c);
  model.bias.resize(c);
  model.traces.resize(static_cast<std::size_t>(c));

  for (Eigen::Index k = 0; k < c; ++k) {
    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j)
      y(j) = labels[static_cast<std::size_t>(j)] == model.classes[static_cast<std::size_t>(k)]
                 ? 1.0
                 : 0.0;
    Eigen::VectorXd w;
    double b = 0.0;
    model.traces[static_cast<std::size_t>(k)] = fit_binary(Zs, y, options, w, b);
    model.weights.col(k) = w;
    model.bias(k) = b;
  }
  return model;
}

namespace {

Eigen::MatrixXd decision_scores(const LogisticModel& model,
                                const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  if (Z.rows() != model.weights.rows())
    throw DimensionError("predict: expected " + std::to_string(model.weights.rows()) +
                         " feature rows, got " + std::to_string(Z.rows()));
  Eigen::MatrixXd Zs = Z.colwise() - model.feature_mean;
  Zs.array().colwise() /= model.feature_scale.array();
  Eigen::MatrixXd scores = model.weights.transpose() * Zs;
  scores.colwise() += model.bias;
  return scores;
}

}  // namespace

Eigen::MatrixXd predict_proba(const LogisticModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  Eigen::MatrixXd scores = decision_scores(model, Z);
  return (1.0 + (-scores.array()).exp()).inverse().matrix();
}

std::vector<int> predict_class(const LogisticModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  const Eigen::MatrixXd scores = decision_scores(model, Z);
  std::vector<int> out(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.rows(); ++k)
      if (scores(k, j) > scores(best, j)) best = k;
    out[static_cast<std::size_t>(j)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

RidgeModel fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& Z, const Eigen::VectorXd& y,
                     double lambda) {
  const Eigen::Index n = Z.cols();
  if (y.size() != n)
    throw DimensionError("fit_ridge: " + std::to_string(y.size()) + " targets for " +
                         std::to_string(n) + " samples");
  if (n < 2) throw std::invalid_argument("fit_ridge: needs at least two samples");
  if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");

  const Eigen::Index d = Z.rows();
  // Augment with a constant row; lambda is not applied to its diagonal entry.
  Eigen::MatrixXd Xt(d + 1, n);
  Xt.topRows(d) = Z;
  Xt.bottomRows(1).setOnes();
  Eigen::MatrixXd G = Xt * Xt.transpose();
  G.diagonal().head(d).array() += lambda;
  const Eigen::VectorXd rhs = Xt * y;
  const Eigen::VectorXd sol = G.ldlt().solve(rhs);

  RidgeModel model;
  model.weights = sol.head(d);
  model.bias = sol(d);
  model.lambda = lambda;
  return model;
}

Eigen::VectorXd predict_value(const RidgeModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  if (Z.rows() != model.weights.size())
    throw DimensionError("predict_value: expected " + std::to_string(model.weights.size()) +
                         " feature rows, got " + std::to_string(Z.rows()));
  return (Z.transpose() * model.weights).array() + model.bias;
}

double metric_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw std::invalid_argument("metric_accuracy: size mismatch or empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double metric_f1(const std::vector<int>& predicted, const std::vector<int>& truth,
                 int positive) {
  if (predicted.size() != truth.size() || truth.empty())
    throw std::invalid_argument("metric_f1: size mismatch or empty input");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == positive;
    const bool t = truth[i] == positive;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const double denom = 2 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2 * tp / denom;
}

double metric_rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size() || truth.size() == 0)
    throw std::invalid_argument("metric_rmse: size mismatch or empty input");
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size()));
}

}  // namespace mida
