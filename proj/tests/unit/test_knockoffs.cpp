#include <gtest/gtest.h>

#include <cmath>

#include "kknock/knockoffs.hpp"
#include "kknock/simbench.hpp"
#include "oracles.hpp"

using namespace kknock;

namespace {

Matrix ar_sample(Index n, Index p, double rho, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.s_size = 0;
  cfg.rho = rho;
  RngStream rng(seed);
  return gen_predictors(cfg, rng);
}

Matrix block_target(const Matrix& sigma, const Vector& s) {
  const Index p = sigma.rows();
  Matrix G(2 * p, 2 * p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double off = sigma(i, j) - (i == j ? s(i) : 0.0);
      G(i, j) = sigma(i, j);
      G(i + p, j + p) = sigma(i, j);
      G(i, j + p) = off;
      G(i + p, j) = off;
    }
  }
  return G;
}

}  // namespace

TEST(EquicorrelatedGap, IdentityCovariance) {
  const Vector mu = Vector::Zero(4);
  const auto model = make_knockoff_model(mu, Matrix::Identity(4, 4),
                                         (1.0 - kGapShrink) * equicorrelated_gap(Matrix::Identity(4, 4)));
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(model.s(j), 1.0 - kGapShrink, 1e-15);
}

TEST(EquicorrelatedGap, ScalarCase) {
  const Matrix sigma = Matrix::Constant(1, 1, 2.25);
  const Vector s = equicorrelated_gap(sigma);
  EXPECT_NEAR(s(0), 2.25, 1e-14);
}

TEST(EquicorrelatedGap, BoundedByTwiceMinEigenOfCorrelation) {
  const Matrix sigma = ar_covariance(6, 0.6) * 3.0;
  const Vector s = equicorrelated_gap(sigma);
  // corr(sigma) = ar_covariance(6, 0.6); its spectrum computed separately.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(ar_covariance(6, 0.6));
  const double lam = eig.eigenvalues().minCoeff();
  for (Index j = 0; j < 6; ++j) {
    EXPECT_GE(s(j), 0.0);
    EXPECT_NEAR(s(j) / sigma(j, j), std::min(2.0 * lam, 1.0), 1e-12);
  }
}

TEST(FitGaussianModel, MomentsAndRidge) {
  const Matrix X = ar_sample(300, 5, 0.3, 1);
  const auto model = fit_gaussian_model(X, 0.0);
  const Matrix cov = oracle::sample_covariance(X);
  EXPECT_LT((model.sigma - cov).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((model.mu - X.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-14);

  const auto ridged = fit_gaussian_model(X, 0.5);
  EXPECT_NEAR(ridged.sigma(2, 2), cov(2, 2) + 0.5, 1e-12);
  EXPECT_NEAR(ridged.sigma(1, 2), cov(1, 2), 1e-12);
}

TEST(FitGaussianModel, DefaultRidge) {
  Matrix C = Matrix::Identity(4, 4) * 2.0;
  EXPECT_NEAR(default_ridge(C, 10), 2e-6, 1e-18);
  EXPECT_NEAR(default_ridge(C, 4), 2e-3, 1e-15);
  EXPECT_NEAR(default_ridge(C, 3), 2e-3, 1e-15);
}

TEST(FitGaussianModel, HighDimensionalStillPositiveDefinite) {
  const Matrix X = ar_sample(10, 30, 0.3, 2);
  const auto model = fit_gaussian_model(X);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(model.sigma);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> joint(block_target(model.sigma, model.s));
  EXPECT_GE(joint.eigenvalues().minCoeff(), -1e-8);
}

TEST(FitGaussianModel, Errors) {
  EXPECT_THROW(fit_gaussian_model(Matrix::Zero(1, 3)), DataError);
  Matrix X = ar_sample(20, 3, 0.3, 3);
  X(4, 1) = std::nan("");
  EXPECT_THROW(fit_gaussian_model(X), DataError);
  X(4, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(fit_gaussian_model(X), DataError);
}

TEST(FitGaussianModel, JointCovarianceMatchesBlockFormula) {
  const auto model = fit_gaussian_model(ar_sample(500, 6, 0.5, 4));
  EXPECT_LT((model.joint_covariance() - block_target(model.sigma, model.s)).cwiseAbs().maxCoeff(),
            1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(model.joint_covariance());
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
}

TEST(FitGaussianModel, ConditionalParameters) {
  const auto model = fit_gaussian_model(ar_sample(400, 4, 0.4, 5));
  const Matrix S = model.s.asDiagonal();
  const Matrix inv = model.sigma.inverse();
  EXPECT_LT((model.cond_gain - S * inv).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix V = 2.0 * S - S * inv * S;
  const Matrix F = model.cond_cov_factor;
  EXPECT_LT((F * F.transpose() - V).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleKnockoffs, IdentityGivesIndependentCopy) {
  // Sigma = I, s = 1: conditional mean mu, conditional covariance I.
  const Vector mu = Vector::Constant(3, 0.5);
  const auto model = make_knockoff_model(mu, Matrix::Identity(3, 3), Vector::Ones(3));
  EXPECT_LT((model.cond_gain - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix V = model.cond_cov_factor * model.cond_cov_factor.transpose();
  EXPECT_LT((V - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  Matrix X = Matrix::Constant(4000, 3, 7.0);
  RngStream rng(6);
  const Matrix Xk = sample_knockoffs(model, X, rng);
  const Vector mean = Xk.colwise().mean();
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(mean(j), 0.5, 0.06);
  const Matrix cov = oracle::sample_covariance(Xk);
  EXPECT_LT((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.08);
}

TEST(SampleKnockoffs, ZeroGapReturnsInput) {
  const Matrix X = ar_sample(50, 4, 0.3, 7);
  auto model = fit_gaussian_model(X);
  model = make_knockoff_model(model.mu, model.sigma, Vector::Zero(4));
  RngStream rng(8);
  const Matrix Xk = sample_knockoffs(model, X, rng);
  EXPECT_LT((Xk - X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleKnockoffs, MomentMatchingAr) {
  const Index n = 5000, p = 5;
  const Matrix X = ar_sample(n, p, 0.3, 9);
  const auto model = fit_gaussian_model(X);
  RngStream rng(10);
  const Matrix Xk = sample_knockoffs(model, X, rng);
  Matrix joint(n, 2 * p);
  joint << X, Xk;
  const Matrix emp = oracle::sample_covariance(joint);
  const Matrix target = block_target(model.sigma, model.s);
  EXPECT_LT((emp - target).cwiseAbs().maxCoeff(), 0.08);
  const Vector mk = Xk.colwise().mean();
  EXPECT_LT((mk - model.mu).cwiseAbs().maxCoeff(), 0.06);
}

TEST(SampleKnockoffs, SwapInvariantTarget) {
  const auto model = fit_gaussian_model(ar_sample(300, 6, 0.3, 11));
  const Matrix G = model.joint_covariance();
  RngStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::PermutationMatrix<Eigen::Dynamic> P(12);
    P.setIdentity();
    for (Index j = 0; j < 6; ++j) {
      if (rng.uniform() < 0.5) std::swap(P.indices()(j), P.indices()(j + 6));
    }
    const Matrix swapped = P * G * P.transpose();
    EXPECT_LT((swapped - G).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(SampleKnockoffs, DeterministicAndChecksColumns) {
  const Matrix X = ar_sample(40, 3, 0.3, 13);
  const auto model = fit_gaussian_model(X);
  RngStream a(1), b(1);
  EXPECT_TRUE((sample_knockoffs(model, X, a).array() == sample_knockoffs(model, X, b).array()).all());
  RngStream c(1);
  EXPECT_THROW(sample_knockoffs(model, Matrix::Zero(4, 2), c), ConfigError);
}
