#include "mida/subspace.hpp"

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "mida/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mida;

namespace {

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

GramMatrix psd_gram(Eigen::Index n, std::mt19937_64& rng) {
  return {testutil::random_psd(n, rng), KernelSpec::linear()};
}

}  // namespace

TEST_CASE("label matrix construction") {
  SUBCASE("classification one-hot with unlabeled zero columns") {
    LabelMatrix y = LabelMatrix::classification({1, std::nullopt, 0, 1}, 2);
    REQUIRE(y.Y.rows() == 2);
    REQUIRE(y.Y.cols() == 4);
    CHECK(y.Y.col(1).isZero(0.0));
    for (Eigen::Index j = 0; j < 4; ++j) {
      int nonzero = 0;
      for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK((y.Y(i, j) == 0.0 || y.Y(i, j) == 1.0));
        nonzero += y.Y(i, j) == 1.0;
      }
      CHECK(nonzero <= 1);
    }
    CHECK(y.Y(1, 0) == 1.0);
    CHECK(y.Y(0, 2) == 1.0);
    CHECK_THROWS_AS(LabelMatrix::classification({2}, 2), std::invalid_argument);
  }
  SUBCASE("regression is centered over labeled entries") {
    LabelMatrix y = LabelMatrix::regression({1.0, std::nullopt, 5.0, 3.0}, false);
    REQUIRE(y.Y.rows() == 1);
    CHECK(std::abs(y.Y(0, 0) + y.Y(0, 2) + y.Y(0, 3)) <= 1e-9);
    CHECK(y.Y(0, 1) == 0.0);
    CHECK(y.Y(0, 0) == doctest::Approx(-2.0));
  }
  SUBCASE("regression unit variance uses the sample standard deviation") {
    LabelMatrix y = LabelMatrix::regression({1.0, 3.0}, true);
    // centered to -1, 1 then divided by the sample std sqrt(2)
    CHECK(y.Y(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(y.Y(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("objective matrix drops the domain term when Kd is constant") {
  std::mt19937_64 rng(31);
  GramMatrix kx = psd_gram(5, rng);
  GramMatrix kd{Eigen::MatrixXd::Constant(5, 5, 3.0), KernelSpec::linear()};
  const double mu = 0.7;
  Eigen::MatrixXd A = objective_matrix(kx, kd, nullptr, mu, 0.0);
  Eigen::MatrixXd H = oracle::centering_naive(5);
  Eigen::MatrixXd want = mu * kx.entries * H * kx.entries;
  CHECK((A - want).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST_CASE("objective matrix matches the naive dense oracle") {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 5; ++rep) {
    GramMatrix kx = psd_gram(4, rng);
    GramMatrix kd = psd_gram(4, rng);
    GramMatrix ky = psd_gram(4, rng);

    Eigen::MatrixXd mida_only = objective_matrix(kx, kd, nullptr, 1.3, 0.0);
    Eigen::MatrixXd naive0 = oracle::objective_naive(kx.entries, kd.entries, nullptr, 1.3, 0.0);
    const double scale0 = std::max(1.0, naive0.cwiseAbs().maxCoeff());
    CHECK((mida_only - naive0).cwiseAbs().maxCoeff() <= 1e-10 * scale0);

    // gamma = 0 with a label Gram present changes nothing
    Eigen::MatrixXd with_ky = objective_matrix(kx, kd, &ky, 1.3, 0.0);
    CHECK(bit_equal(mida_only, with_ky));

    Eigen::MatrixXd smida = objective_matrix(kx, kd, &ky, 1.3, 0.4);
    Eigen::MatrixXd naive1 =
        oracle::objective_naive(kx.entries, kd.entries, &ky.entries, 1.3, 0.4);
    const double scale1 = std::max(1.0, naive1.cwiseAbs().maxCoeff());
    CHECK((smida - naive1).cwiseAbs().maxCoeff() <= 1e-10 * scale1);
    CHECK((smida - smida.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("objective matrix validates its inputs") {
  std::mt19937_64 rng(41);
  GramMatrix k4 = psd_gram(4, rng);
  GramMatrix k3 = psd_gram(3, rng);
  CHECK_THROWS_AS(objective_matrix(k4, k3, nullptr, 1.0, 0.0), DimensionError);
  CHECK_THROWS_AS(objective_matrix(k4, k4, nullptr, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(objective_matrix(k4, k4, nullptr, -1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(objective_matrix(k4, k4, nullptr, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(objective_matrix(k4, k4, &k3, 1.0, 0.5), DimensionError);
}

TEST_CASE("top_eigenvectors on a diagonal matrix") {
  Eigen::MatrixXd A = Eigen::Vector3d{3.0, 1.0, 2.0}.asDiagonal();
  auto [w, values] = top_eigenvectors(A, 2);
  REQUIRE(values.size() == 2);
  CHECK(values(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(values(1) == doctest::Approx(2.0).epsilon(1e-14));
  // canonicalized: largest-magnitude entry positive
  CHECK(w.col(0).isApprox(Eigen::Vector3d{1, 0, 0}, 1e-12));
  CHECK(w.col(1).isApprox(Eigen::Vector3d{0, 0, 1}, 1e-12));
}

TEST_CASE("top_eigenvectors handles a degenerate spectrum by contract only") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  auto [w, values] = top_eigenvectors(I, 1);
  CHECK(values(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((I * w.col(0) - values(0) * w.col(0)).norm() <= 1e-8 * I.norm());
  CHECK(std::abs(w.col(0).norm() - 1.0) <= 1e-10);
}

TEST_CASE("top_eigenvectors eigenvalues match the bisection oracle") {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd A = testutil::random_symmetric(6, rng);
    auto [w, values] = top_eigenvectors(A, 6);
    std::vector<double> oracle_vals = oracle::eigenvalues_bisect(A);  // ascending
    REQUIRE(oracle_vals.size() == 6);
    for (int i = 0; i < 6; ++i)
      CHECK(std::abs(values(i) - oracle_vals[static_cast<std::size_t>(5 - i)]) <= 1e-8);
    // residuals and orthonormality
    for (int i = 0; i < 6; ++i)
      CHECK((A * w.col(i) - values(i) * w.col(i)).norm() <= 1e-8 * A.norm());
    CHECK((w.transpose() * w - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-8);
    // descending order
    for (int i = 1; i < 6; ++i) CHECK(values(i) <= values(i - 1) + 1e-14);
  }
}

TEST_CASE("top_eigenvectors rejects h out of range") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(top_eigenvectors(A, 0), std::invalid_argument);
  CHECK_THROWS_AS(top_eigenvectors(A, 4), std::invalid_argument);
}

TEST_CASE("fit with gamma 0 ignores the label matrix entirely") {
  std::mt19937_64 rng(47);
  Eigen::MatrixXd X = testutil::random_matrix(3, 12, rng);
  Eigen::MatrixXd D(1, 12);
  for (int j = 0; j < 12; ++j) D(0, j) = j < 6 ? 0.0 : 1.0;
  LabelMatrix Y = LabelMatrix::classification(
      {0, 1, 0, 1, 0, 1, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
       std::nullopt},
      2);

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();
  opt.h = 2;
  SubspaceModel plain = fit(X, D, nullptr, opt);
  SubspaceModel with_labels = fit(X, D, &Y, opt);
  CHECK(bit_equal(plain.W, with_labels.W));
  CHECK(bit_equal(plain.eigenvalues, with_labels.eigenvalues));
  CHECK(plain.method == SubspaceMethod::mida);
  CHECK(with_labels.method == SubspaceMethod::mida);
}

TEST_CASE("smida with gamma 0 equals mida bit for bit") {
  SynthScenario scenario;
  scenario.kind = ScenarioKind::label_mixing_3d;
  scenario.seed = 11;
  scenario.n_per_class_per_domain = 25;
  SynthData data = generate(scenario);
  Eigen::MatrixXd D = encode({EncodingScheme::onehot_domain, 1}, data.backgrounds);
  std::vector<std::optional<int>> ids(data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    if (data.backgrounds[i].role == Role::source_labeled) ids[i] = data.labels[i];
  LabelMatrix Y = LabelMatrix::classification(ids, 2);

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();
  opt.h = 3;
  opt.gamma = 0.0;
  SubspaceModel mida_model = fit(data.X, D, nullptr, opt);
  SubspaceModel smida_gamma0 = fit(data.X, D, &Y, opt);
  CHECK(bit_equal(mida_model.W, smida_gamma0.W));
  CHECK((mida_model.eigenvalues - smida_gamma0.eigenvalues).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit beats random unit vectors on the single-domain objective") {
  std::mt19937_64 rng(53);
  const Eigen::Index n = 10;
  Eigen::MatrixXd X = testutil::random_matrix(3, n, rng);
  Eigen::MatrixXd D = Eigen::MatrixXd::Ones(1, n);  // one domain: Kd constant

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();
  opt.h = 1;
  opt.mu = 1.0;
  opt.augment = false;
  SubspaceModel model = fit(X, D, nullptr, opt);

  GramMatrix kx = gram(opt.kernel, X);
  Eigen::MatrixXd A = objective_matrix(kx, domain_kernel(D), nullptr, opt.mu, 0.0);
  const double solver_objective = (model.W.col(0).transpose() * A * model.W.col(0))(0, 0);
  for (int rep = 0; rep < 10000; ++rep) {
    Eigen::VectorXd v = testutil::random_unit_vector(n, rng);
    CHECK(solver_objective >= (v.transpose() * A * v)(0, 0) - 1e-12);
  }
}

TEST_CASE("fit reduces hsic between projection and domain features") {
  SynthScenario scenario;  // two separated domains
  scenario.kind = ScenarioKind::two_domain_shift;
  scenario.seed = 5;
  scenario.n_per_class_per_domain = 40;
  SynthData data = generate(scenario);
  Eigen::MatrixXd D = encode({EncodingScheme::onehot_domain, 1}, data.backgrounds);

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();
  opt.h = 2;
  SubspaceModel model = fit(data.X, D, nullptr, opt);
  Eigen::MatrixXd Z = project(model, data.X, D);

  GramMatrix kd = domain_kernel(D);
  const double before = hsic_empirical(gram(KernelSpec::linear(), data.X), kd);
  const double after = hsic_empirical(gram(KernelSpec::linear(), Z), kd);
  CHECK(after < before);
}

TEST_CASE("fitted models keep orthonormal coefficients") {
  SynthScenario scenario;
  scenario.kind = ScenarioKind::nonlinear_shift;
  scenario.seed = 3;
  scenario.n_per_class_per_domain = 20;
  SynthData data = generate(scenario);
  Eigen::MatrixXd D = encode({EncodingScheme::onehot_domain, 1}, data.backgrounds);

  for (const KernelSpec& kernel :
       {KernelSpec::linear(), KernelSpec::polynomial(2, 1.0), KernelSpec::rbf(10.0)}) {
    SubspaceOptions opt;
    opt.kernel = kernel;
    opt.h = 4;
    SubspaceModel model = fit(data.X, D, nullptr, opt);
    CHECK((model.W.transpose() * model.W - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-8);
    for (int i = 1; i < 4; ++i) CHECK(model.eigenvalues(i) <= model.eigenvalues(i - 1) + 1e-12);
    // sign canonicalization: the largest-magnitude entry of each column is positive
    for (int c = 0; c < 4; ++c) {
      Eigen::Index at;
      model.W.col(c).cwiseAbs().maxCoeff(&at);
      CHECK(model.W(at, c) > 0.0);
    }
  }
}

TEST_CASE("huge mu recovers the unconstrained variance maximum") {
  std::mt19937_64 rng(59);
  const Eigen::Index n = 20;
  Eigen::MatrixXd X = testutil::random_matrix(4, n, rng);
  Eigen::MatrixXd D(1, n);
  for (Eigen::Index j = 0; j < n; ++j) D(0, j) = j < n / 2 ? 0.0 : 1.0;

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();
  opt.h = 3;
  opt.mu = 1e8;
  opt.augment = false;
  SubspaceModel model = fit(X, D, nullptr, opt);

  Eigen::MatrixXd kx = gram(opt.kernel, X).entries;
  Eigen::MatrixXd kxhkx = kx * centering_matrix(n) * kx;
  const double achieved = (model.W.transpose() * kxhkx * model.W).trace();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kxhkx);
  const double best = es.eigenvalues().tail(3).sum();
  CHECK(std::abs(achieved / best - 1.0) <= 1e-6);
}

TEST_CASE("project reproduces the training embedding and extends out of sample") {
  SynthScenario scenario;
  scenario.kind = ScenarioKind::two_domain_shift;
  scenario.seed = 9;
  scenario.n_per_class_per_domain = 15;
  SynthData data = generate(scenario);
  Eigen::MatrixXd D = encode({EncodingScheme::onehot_domain, 1}, data.backgrounds);

  SubspaceOptions opt;
  opt.kernel = KernelSpec::rbf(2.0);
  opt.h = 2;
  SubspaceModel model = fit(data.X, D, nullptr, opt);

  SUBCASE("transductive identity") {
    Eigen::MatrixXd Z = project(model, data.X, D);
    Eigen::MatrixXd direct = model.W.transpose() * gram(opt.kernel, model.train).entries;
    CHECK((Z - direct).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("single new sample keeps the shape") {
    Eigen::MatrixXd Z = project(model, data.X.col(0), D.col(0));
    CHECK(Z.rows() == 2);
    CHECK(Z.cols() == 1);
  }
  SUBCASE("feature dimension mismatch") {
    Eigen::MatrixXd bad(3, 1);
    bad.setZero();
    CHECK_THROWS_AS(project(model, bad, D.col(0)), DimensionError);
  }
}

TEST_CASE("projection with a basis-vector coefficient column reads off a kernel row") {
  // three samples, linear kernel, W = e1: Z = first row of the Gram matrix
  Eigen::MatrixXd X(2, 3);
  X.col(0) << 1, 0;
  X.col(1) << 2, 1;
  X.col(2) << 0, 3;
  SubspaceModel model;
  model.method = SubspaceMethod::mida;
  model.kernel = KernelSpec::linear();
  model.h = 1;
  model.augmented = false;
  model.input_dim = 2;
  model.train = X;
  model.W = Eigen::MatrixXd::Zero(3, 1);
  model.W(0, 0) = 1.0;
  model.eigenvalues = Eigen::VectorXd::Ones(1);

  Eigen::MatrixXd Z = project(model, X, Eigen::MatrixXd(0, 3));
  // k(x1, xj) = [1, 2, 0]
  CHECK(Z(0, 0) == doctest::Approx(1.0));
  CHECK(Z(0, 1) == doctest::Approx(2.0));
  CHECK(Z(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("kpca on constant data has a zero centered spectrum") {
  Eigen::MatrixXd X(2, 4);
  for (int j = 0; j < 4; ++j) X.col(j) << 1.5, -0.5;
  SubspaceModel model = fit_kpca(X, KernelSpec::linear(), 2);
  CHECK(model.eigenvalues.cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::MatrixXd Z = project(model, X, Eigen::MatrixXd(0, 4));
  CHECK(Z.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("kpca leading direction tracks the stretched axis") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> dist(0.0, 1.0);
  const Eigen::Index n = 200;
  Eigen::MatrixXd X(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    X(0, j) = 3.0 * dist(rng);
    X(1, j) = 0.2 * dist(rng);
  }
  SubspaceModel model = fit_kpca(X, KernelSpec::linear(), 1);

  // pre-image of the first component: v = sum_i w_i (x_i - mean)
  Eigen::VectorXd mean = X.rowwise().mean();
  Eigen::Vector2d v = (X.colwise() - mean) * model.W.col(0);

  // covariance eigenvector from the closed 2x2 form
  Eigen::MatrixXd C = (X.colwise() - mean) * (X.colwise() - mean).transpose() /
                      static_cast<double>(n - 1);
  const double theta = 0.5 * std::atan2(2.0 * C(0, 1), C(0, 0) - C(1, 1));
  Eigen::Vector2d axis{std::cos(theta), std::sin(theta)};
  CHECK(std::abs(v.normalized().dot(axis)) >= 0.99);
}

TEST_CASE("full-rank kpca projections carry the centered kernel geometry") {
  std::mt19937_64 rng(67);
  Eigen::MatrixXd X = testutil::random_matrix(3, 8, rng);
  SubspaceModel model = fit_kpca(X, KernelSpec::rbf(1.5), 8);
  Eigen::MatrixXd Z = project(model, X, Eigen::MatrixXd(0, 8));
  Eigen::MatrixXd kc = center_gram(gram(KernelSpec::rbf(1.5), X).entries);
  // with a full orthonormal basis W, Z'Z = Kc W W' Kc = Kc^2
  CHECK((Z.transpose() * Z - kc * kc).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fitter validation") {
  std::mt19937_64 rng(71);
  Eigen::MatrixXd X = testutil::random_matrix(2, 6, rng);
  Eigen::MatrixXd D = Eigen::MatrixXd::Ones(1, 6);

  SubspaceOptions opt;
  opt.kernel = KernelSpec::linear();

  SUBCASE("mu must be positive") {
    opt.mu = 0.0;
    CHECK_THROWS_AS(fit(X, D, nullptr, opt), std::invalid_argument);
  }
  SUBCASE("gamma needs labels") {
    opt.gamma = 1.0;
    CHECK_THROWS_AS(fit(X, D, nullptr, opt), std::invalid_argument);
  }
  SUBCASE("h bounded by n") {
    opt.h = 7;
    CHECK_THROWS_AS(fit(X, D, nullptr, opt), std::invalid_argument);
  }
  SUBCASE("domain columns must match") {
    CHECK_THROWS_AS(fit(X, Eigen::MatrixXd::Ones(1, 5), nullptr, opt), DimensionError);
  }
  SUBCASE("needs at least two samples") {
    CHECK_THROWS_AS(fit(X.col(0), D.col(0), nullptr, opt), std::invalid_argument);
  }
}
