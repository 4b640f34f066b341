#pragma once

#include <optional>
#include <vector>

#include "kknock/common.hpp"

namespace kknock {

/// A group is reported active when its block norm exceeds this.
inline constexpr double kActiveThreshold = 1e-10;

/// min_c (1/m) ||y - Phi c||^2 + tau sum_j ||c_j||_2 over G contiguous
/// blocks of size group_size. The response is used as given (callers center
/// it).
struct GroupLassoProblem {
  Eigen::Ref<const Matrix> design;
  Eigen::Ref<const Vector> response;
  Index group_size;
  double tau;
};

struct SolverOptions {
  int max_iter = 5000;
  double tol = 1e-6;      // KKT residual
  double rel_tol = 1e-8;  // relative objective decrease on an accepted step
  // The stagnation stop above only counts once the KKT residual is below this.
  double stall_kkt = 1e-5;
};

struct GroupLassoFit {
  Vector coef;
  std::vector<Index> active;
  std::vector<double> objective_trace;
  bool converged = false;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// max(0, 1 - t / ||v||) v
Vector group_soft_threshold(const Vector& v, double t);

/// Reusable solver for one (design, response) pair: precomputes the
/// curvature operator once so a path over tau is cheap. Uses a Gram matrix
/// when the design is tall, matrix-vector products otherwise.
class GroupLassoSolver {
 public:
  GroupLassoSolver(Eigen::Ref<const Matrix> design, Eigen::Ref<const Vector> response,
                   Index group_size);

  Index n_groups() const { return n_groups_; }
  Index group_size() const { return group_size_; }
  Index dim() const { return dim_; }

  /// Smallest tau with an all-zero solution: max_j ||(2/m) Phi_j^T y||.
  double tau_max() const;

  double objective(const Vector& coef, double tau) const;
  /// Gradient of the smooth part, (2/m) Phi^T (Phi c - y).
  Vector gradient(const Vector& coef) const;
  double kkt_residual(const Vector& coef, double tau) const;

  /// Accelerated proximal gradient with backtracking and restart on
  /// objective increase, so the recorded objective never increases.
  GroupLassoFit solve(double tau, const SolverOptions& opts = {},
                      const Vector* warm_start = nullptr) const;

 private:
  Vector apply_curvature(const Vector& c) const;  // (Phi^T Phi / m) c

  Index m_;
  Index dim_;
  Index group_size_;
  Index n_groups_;
  bool use_gram_;
  Matrix gram_;    // Phi^T Phi / m, gram mode only
  Matrix design_;  // direct mode only
  Vector cross_;   // Phi^T y / m
  double yy_;      // y^T y / m
  double lipschitz_;
};

GroupLassoFit solve(const GroupLassoProblem& problem,
                    const SolverOptions& opts = {});

/// Groups whose coefficient block norm exceeds kActiveThreshold.
std::vector<Index> active_groups(const Vector& coef, Index group_size);

/// Minimum-norm minimizer of (1/n) ||y - ybar - Phi c||^2. Empty design
/// gives an empty coefficient vector.
Vector refit_least_squares(const Matrix& design, const Vector& y);

}  // namespace kknock
