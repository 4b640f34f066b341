#include "kknock/knockoffs.hpp"

#include <algorithm>
#include <cmath>

namespace kknock {

Matrix KnockoffModel::joint_covariance() const {
  const Index n = p();
  Matrix off = sigma;
  off.diagonal() -= s;
  Matrix joint(2 * n, 2 * n);
  joint.topLeftCorner(n, n) = sigma;
  joint.bottomRightCorner(n, n) = sigma;
  joint.topRightCorner(n, n) = off;
  joint.bottomLeftCorner(n, n) = off;
  return joint;
}

double default_ridge(const Matrix& sample_cov, Index n) {
  const auto p = static_cast<double>(sample_cov.rows());
  const double avg_var = sample_cov.trace() / p;
  return (n <= sample_cov.rows() ? 1e-3 : 1e-6) * avg_var;
}

Vector equicorrelated_gap(const Matrix& sigma) {
  const Vector sd = sigma.diagonal().cwiseSqrt();
  const Vector inv_sd = sd.cwiseInverse();
  const Matrix corr = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr, Eigen::EigenvaluesOnly);
  const double lambda_min = std::max(0.0, eig.eigenvalues().minCoeff());
  const double s_corr = std::min(2.0 * lambda_min, 1.0);
  return s_corr * sigma.diagonal();
}

namespace {

Matrix psd_factor(const Matrix& V) {
  Eigen::LLT<Matrix> llt(V);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semidefinite (e.g. s = 0): symmetric square root with clipped spectrum.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(V);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

KnockoffModel make_knockoff_model(Vector mu, Matrix sigma, Vector s) {
  const Index p = mu.size();
  if (sigma.rows() != p || sigma.cols() != p || s.size() != p) {
    throw ConfigError("knockoff model dimensions disagree");
  }
  Eigen::LLT<Matrix> chol(sigma);
  if (chol.info() != Eigen::Success) {
    throw DataError("predictor covariance is not positive definite");
  }
  const Matrix sigma_inv_s = chol.solve(Matrix(s.asDiagonal()));
  KnockoffModel model;
  model.cond_gain = sigma_inv_s.transpose();  // S Sigma^-1
  Matrix V = -(s.asDiagonal() * sigma_inv_s);
  V.diagonal() += 2.0 * s;
  V = 0.5 * (V + V.transpose());
  model.cond_cov_factor = psd_factor(V);
  model.mu = std::move(mu);
  model.sigma = std::move(sigma);
  model.s = std::move(s);
  return model;
}

KnockoffModel fit_gaussian_model(const Matrix& X, std::optional<double> ridge) {
  const Index n = X.rows();
  if (n < 2) throw DataError("knockoff model needs at least two observations");
  if (X.cols() < 1) throw DataError("knockoff model needs at least one column");
  if (!X.allFinite()) throw DataError("predictors contain non-finite values");

  Vector mu = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - mu.transpose();
  Matrix sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  const double lambda = ridge.value_or(default_ridge(sigma, n));
  if (!(lambda >= 0.0)) throw ConfigError("ridge must be nonnegative");
  sigma.diagonal().array() += lambda;
  if ((sigma.diagonal().array() <= 0.0).any()) {
    throw DataError("a predictor column is constant; use a positive ridge");
  }

  Vector s = (1.0 - kGapShrink) * equicorrelated_gap(sigma);
  return make_knockoff_model(std::move(mu), std::move(sigma), std::move(s));
}

Matrix sample_knockoffs(const KnockoffModel& model, const Matrix& X,
                        RngStream& rng) {
  const Index p = model.p();
  if (X.cols() != p) {
    throw ConfigError("knockoff model was fitted on a different number of columns");
  }
  Matrix Z(X.rows(), p);
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  }
  const Matrix centered = X.rowwise() - model.mu.transpose();
  return X - centered * model.cond_gain.transpose() +
         Z * model.cond_cov_factor.transpose();
}

}  // namespace kknock
