#include "kknock/grouplasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kknock {

Vector group_soft_threshold(const Vector& v, double t) {
  const double norm = v.norm();
  if (norm <= t) return Vector::Zero(v.size());
  return (1.0 - t / norm) * v;
}

std::vector<Index> active_groups(const Vector& coef, Index group_size) {
  std::vector<Index> out;
  const Index groups = coef.size() / group_size;
  for (Index j = 0; j < groups; ++j) {
    if (coef.segment(j * group_size, group_size).norm() > kActiveThreshold) {
      out.push_back(j);
    }
  }
  return out;
}

GroupLassoSolver::GroupLassoSolver(Eigen::Ref<const Matrix> design,
                                   Eigen::Ref<const Vector> response,
                                   Index group_size)
    : m_(design.rows()), dim_(design.cols()), group_size_(group_size) {
  if (group_size_ < 1 || dim_ % group_size_ != 0) {
    throw ConfigError("design columns are not a whole number of groups");
  }
  if (response.size() != m_) {
    throw ConfigError("response length does not match design rows");
  }
  if (m_ < 1) throw DataError("group lasso needs at least one observation");
  n_groups_ = dim_ / group_size_;
  const double inv_m = 1.0 / static_cast<double>(m_);
  use_gram_ = dim_ <= m_;
  if (use_gram_) {
    gram_ = Matrix::Zero(dim_, dim_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), inv_m);
    gram_ = gram_.selfadjointView<Eigen::Lower>();
  } else {
    design_ = design;
  }
  cross_ = inv_m * (design.transpose() * response);
  yy_ = inv_m * response.squaredNorm();

  // Power iteration for lambda_max of the curvature; backtracking covers any
  // underestimate.
  Vector v = Vector::Constant(dim_, 1.0 / std::sqrt(static_cast<double>(std::max<Index>(dim_, 1))));
  double lambda = 0.0;
  for (int it = 0; it < 30 && dim_ > 0; ++it) {
    Vector w = apply_curvature(v);
    const double norm = w.norm();
    if (norm == 0.0) break;
    lambda = norm;
    v = w / norm;
  }
  lipschitz_ = std::max(2.0 * lambda, 1e-12);
}

Vector GroupLassoSolver::apply_curvature(const Vector& c) const {
  if (use_gram_) return gram_ * c;
  return (design_.transpose() * (design_ * c)) / static_cast<double>(m_);
}

double GroupLassoSolver::tau_max() const {
  double best = 0.0;
  for (Index j = 0; j < n_groups_; ++j) {
    best = std::max(best, 2.0 * cross_.segment(j * group_size_, group_size_).norm());
  }
  return best;
}

namespace {

double penalty(const Vector& c, Index group_size) {
  double sum = 0.0;
  for (Index j = 0; j < c.size() / group_size; ++j) {
    sum += c.segment(j * group_size, group_size).norm();
  }
  return sum;
}

}  // namespace

double GroupLassoSolver::objective(const Vector& coef, double tau) const {
  const Vector hc = apply_curvature(coef);
  return yy_ - 2.0 * coef.dot(cross_) + coef.dot(hc) + tau * penalty(coef, group_size_);
}

Vector GroupLassoSolver::gradient(const Vector& coef) const {
  return 2.0 * (apply_curvature(coef) - cross_);
}

namespace {

double kkt_from_gradient(const Vector& coef, const Vector& grad, double tau,
                         Index group_size) {
  double worst = 0.0;
  for (Index j = 0; j < coef.size() / group_size; ++j) {
    const auto cj = coef.segment(j * group_size, group_size);
    const auto gj = grad.segment(j * group_size, group_size);
    const double norm = cj.norm();
    const double viol = norm > 0.0 ? (gj + (tau / norm) * cj).norm()
                                   : std::max(0.0, gj.norm() - tau);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace

double GroupLassoSolver::kkt_residual(const Vector& coef, double tau) const {
  return kkt_from_gradient(coef, gradient(coef), tau, group_size_);
}

GroupLassoFit GroupLassoSolver::solve(double tau, const SolverOptions& opts,
                                      const Vector* warm_start) const {
  if (!(tau >= 0.0)) throw ConfigError("group lasso penalty must be nonnegative");
  const Index r = group_size_;

  // Each iterate carries H c so the smooth part and its gradient are exact
  // linear combinations; one curvature product per line-search trial.
  struct Point {
    Vector c;
    Vector hc;
  };
  auto smooth = [&](const Point& pt) {
    return yy_ - 2.0 * pt.c.dot(cross_) + pt.c.dot(pt.hc);
  };
  auto grad = [&](const Point& pt) -> Vector { return 2.0 * (pt.hc - cross_); };
  auto prox = [&](const Vector& v, double step) {
    Vector out(v.size());
    for (Index j = 0; j < n_groups_; ++j) {
      out.segment(j * r, r) = group_soft_threshold(v.segment(j * r, r), tau * step);
    }
    return out;
  };

  Point x;
  if (warm_start != nullptr && warm_start->size() == dim_) {
    x.c = *warm_start;
  } else {
    x.c = Vector::Zero(dim_);
  }
  x.hc = apply_curvature(x.c);
  double fx = smooth(x) + tau * penalty(x.c, r);

  GroupLassoFit fit;
  fit.objective_trace.push_back(fx);

  Point y = x;
  double t = 1.0;
  double L = lipschitz_;
  Vector gx = grad(x);
  double kkt = kkt_from_gradient(x.c, gx, tau, r);
  fit.converged = kkt <= opts.tol;

  int iter = 0;
  while (!fit.converged && iter < opts.max_iter) {
    ++iter;
    const double fy = smooth(y);
    const Vector gy = grad(y);
    Point z;
    double fz = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      z.c = prox(y.c - gy / L, 1.0 / L);
      z.hc = apply_curvature(z.c);
      fz = smooth(z);
      const Vector diff = z.c - y.c;
      const double model = fy + gy.dot(diff) + 0.5 * L * diff.squaredNorm();
      if (fz <= model + 1e-12 * std::abs(model)) break;
      L *= 2.0;
    }
    const double Fz = fz + tau * penalty(z.c, r);

    if (Fz <= fx) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      const double decrease = fx - Fz;
      y.c = z.c + beta * (z.c - x.c);
      y.hc = z.hc + beta * (z.hc - x.hc);
      x = std::move(z);
      fx = Fz;
      t = t_next;
      fit.objective_trace.push_back(fx);
      gx = grad(x);
      kkt = kkt_from_gradient(x.c, gx, tau, r);
      const bool stalled =
          decrease <= opts.rel_tol * std::max(std::abs(fx), 1e-300);
      if (kkt <= opts.tol || (stalled && kkt <= opts.stall_kkt)) {
        fit.converged = true;
      }
    } else {
      // Momentum overshot: restart from the current iterate.
      y = x;
      t = 1.0;
    }
  }

  fit.iterations = iter;
  fit.kkt_residual = kkt;
  fit.active = active_groups(x.c, r);
  fit.coef = std::move(x.c);
  return fit;
}

GroupLassoFit solve(const GroupLassoProblem& problem, const SolverOptions& opts) {
  const GroupLassoSolver solver(problem.design, problem.response, problem.group_size);
  return solver.solve(problem.tau, opts);
}

Vector refit_least_squares(const Matrix& design, const Vector& y) {
  if (design.rows() != y.size()) {
    throw ConfigError("refit design rows do not match response length");
  }
  if (design.cols() == 0) return Vector(0);
  const Vector centered = y.array() - y.mean();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  return cod.solve(centered);
}

}  // namespace kknock
