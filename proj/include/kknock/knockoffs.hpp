#pragma once

#include <optional>

#include "kknock/common.hpp"
#include "kknock/rng.hpp"

namespace kknock {

/// Shrink factor applied to the equicorrelated gap vector so that the joint
/// covariance of (X, X~) stays strictly positive definite.
inline constexpr double kGapShrink = 1e-6;

/// Gaussian second-order knockoff model.
///
/// Knockoff rows are drawn from
///   x~ | x ~ N(x - cond_gain (x - mu), V),   V = 2 S - S Sigma^-1 S,
/// with S = diag(s), which gives E[X~] = E[X] and
///   cov(X, X~) = [[Sigma, Sigma - S], [Sigma - S, Sigma]].
struct KnockoffModel {
  Vector mu;
  Matrix sigma;
  Vector s;
  Matrix cond_gain;        // S Sigma^-1
  Matrix cond_cov_factor;  // F with F F^T = V (lower triangular when V > 0)

  Index p() const { return mu.size(); }

  /// The 2p x 2p target covariance of (X, X~).
  Matrix joint_covariance() const;
};

/// Ridge added to the sample covariance when none is given:
/// 1e-3 * trace / p if n <= p, otherwise 1e-6 * trace / p.
double default_ridge(const Matrix& sample_cov, Index n);

/// Equicorrelated gap vector for covariance sigma, before shrinking:
/// s_j = min(2 lambda_min(corr(sigma)), 1) * sigma_jj.
Vector equicorrelated_gap(const Matrix& sigma);

/// Fits mean and (ridge-regularized) covariance, chooses s by the
/// equicorrelated rule, and precomputes the conditional sampler.
KnockoffModel fit_gaussian_model(const Matrix& X,
                                 std::optional<double> ridge = std::nullopt);

/// Builds the conditional sampler for given moments and gap vector.
KnockoffModel make_knockoff_model(Vector mu, Matrix sigma, Vector s);

Matrix sample_knockoffs(const KnockoffModel& model, const Matrix& X,
                        RngStream& rng);

}  // namespace kknock
