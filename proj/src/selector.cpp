#include "kknock/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "kknock/knockoffs.hpp"
#include "kknock/parallel.hpp"
#include "kknock/tuning.hpp"

namespace kknock {

std::vector<Index> draw_subsample(Index n, Index size, RngStream& rng) {
  if (size < 1 || size > n) throw ConfigError("subsample size out of range");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index i = 0; i < size; ++i) {
    const auto span_len = static_cast<double>(n - i);
    auto k = i + static_cast<Index>(rng.uniform() * span_len);
    k = std::min(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(k)]);
  }
  idx.resize(static_cast<std::size_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

Matrix take_rows(const Matrix& X, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = X.row(rows[k]);
  return out;
}

Vector take(const Vector& y, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = y(rows[k]);
  return out;
}

Index subsample_size(Index n, double fraction) {
  const auto size = static_cast<Index>(std::floor(static_cast<double>(n) * fraction));
  return std::clamp<Index>(size, 2, n);
}

FeatureMap draw_augmented_map(Index n_slots, Index r, const KernelSpec& spec,
                              RngStream& rng, bool shared) {
  if (shared) return draw_paired_feature_map(n_slots / 2, r, spec, rng);
  return draw_feature_map(n_slots, r, spec, rng);
}

ReplicationResult replicate_on_rows(const Matrix& X_aug, const Vector& y,
                                    std::span<const Index> rows,
                                    const KernelSpec& spec, Index r, double tau,
                                    RngStream& rng, const ReplicationOptions& opts) {
  const FeatureMap map = draw_augmented_map(X_aug.cols(), r, spec, rng, opts.shared_features);
  const Matrix design = build_design(map, take_rows(X_aug, rows));
  Vector response = take(y, rows);
  response.array() -= response.mean();
  const GroupLassoSolver solver(design, response, r);
  const GroupLassoFit fit = solver.solve(tau, opts.solver);
  return ReplicationResult{fit.active, fit.converged, fit.iterations};
}

}  // namespace

ReplicationResult run_replication(const Matrix& X_aug, const Vector& y,
                                  const KernelSpec& spec, Index r, double tau,
                                  RngStream& rng, const ReplicationOptions& opts) {
  const Index n = X_aug.rows();
  if (n < 4) throw DataError("a replication needs at least four observations");
  if (y.size() != n) throw ConfigError("response length does not match predictors");
  const auto rows = draw_subsample(n, subsample_size(n, opts.subsample_fraction), rng);
  return replicate_on_rows(X_aug, y, rows, spec, r, tau, rng, opts);
}

std::vector<ReplicationResult> run_replications(
    const Matrix& X_aug, const Vector& y, const KernelSpec& spec, Index r,
    double tau, Index L, std::uint64_t master_seed, StreamTag tag,
    std::uint64_t base, const ReplicationOptions& opts, int jobs) {
  std::vector<ReplicationResult> out(static_cast<std::size_t>(L));
  parallel_for(L, jobs, [&](long ell) {
    RngStream rng(master_seed, tag, base + static_cast<std::uint64_t>(ell));
    out[static_cast<std::size_t>(ell)] = run_replication(X_aug, y, spec, r, tau, rng, opts);
  });
  return out;
}

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer st;
  const Index n = X.rows();
  st.center = X.colwise().mean().transpose();
  st.scale.resize(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double ss = (X.col(j).array() - st.center(j)).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    st.scale(j) = sd > 0.0 ? sd : 1.0;
  }
  return st;
}

Matrix Standardizer::apply(const Matrix& X) const {
  return (X.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

double AdditiveEstimator::predict(const Vector& x) const {
  if (x.size() != standardizer.center.size()) {
    throw ConfigError("prediction input has the wrong number of predictors");
  }
  double out = intercept;
  if (!map) return out;
  const Index r = map->r();
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const Index j = selected[k];
    const double xs = (x(j) - standardizer.center(j)) / standardizer.scale(j);
    out += featurize(*map, static_cast<Index>(k), xs).dot(coef.segment(static_cast<Index>(k) * r, r));
  }
  return out;
}

Vector AdditiveEstimator::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out(i) = predict(Vector(X.row(i).transpose()));
  return out;
}

AdditiveEstimator finalize(const Matrix& X, const Vector& y,
                           std::span<const Index> selected,
                           const KernelSpec& spec, Index r, RngStream& rng) {
  if (y.size() != X.rows()) throw ConfigError("response length does not match predictors");
  AdditiveEstimator est;
  est.selected.assign(selected.begin(), selected.end());
  est.standardizer = Standardizer::fit(X);
  est.intercept = y.mean();
  if (selected.empty()) return est;

  const Matrix Xs = est.standardizer.apply(X);
  Matrix Xsel(X.rows(), static_cast<Index>(selected.size()));
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (selected[k] < 0 || selected[k] >= X.cols()) throw ConfigError("selected index out of range");
    Xsel.col(static_cast<Index>(k)) = Xs.col(selected[k]);
  }
  est.map = draw_feature_map(static_cast<Index>(selected.size()), r, spec, rng);
  est.coef = refit_least_squares(build_design(*est.map, Xsel), y);
  return est;
}

void SelectorConfig::validate() const {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("q must lie in [0, 1]");
  if (L < 1) throw ConfigError("L must be at least 1");
  if (!(std::isfinite(kernel.scale) && kernel.scale > 0.0)) {
    throw ConfigError("kernel scale must be positive");
  }
  if (r && *r < 1) throw ConfigError("r must be at least 1");
  if (!r) {
    if (xi.empty()) throw ConfigError("candidate set for r is empty");
    for (Index v : xi) {
      if (v < 1) throw ConfigError("candidate r values must be at least 1");
    }
    if (xi.size() > 1 && pilot_L < 10) throw ConfigError("pilot_L must be at least 10");
  }
  if (tau && !(*tau >= 0.0)) throw ConfigError("tau must be nonnegative");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (tau_grid_size < 1) throw ConfigError("tau grid needs at least one point");
  if (!(tau_grid_ratio > 0.0 && tau_grid_ratio <= 1.0)) {
    throw ConfigError("tau grid ratio must lie in (0, 1]");
  }
  if (!(replication.subsample_fraction > 0.0 && replication.subsample_fraction <= 1.0)) {
    throw ConfigError("subsample fraction must lie in (0, 1]");
  }
  if (ridge && !(*ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");
}

Matrix augmented_predictors(const Matrix& X, const SelectorConfig& config) {
  const KnockoffModel model = fit_gaussian_model(X, config.ridge);
  RngStream rng(config.seed, StreamTag::Knockoff);
  const Matrix Xk = sample_knockoffs(model, X, rng);
  Matrix aug(X.rows(), 2 * X.cols());
  aug << X, Xk;
  return Standardizer::fit(aug).apply(aug);
}

SelectionResult run(const Matrix& X, const Vector& y, const SelectorConfig& config,
                    TuneReport* tune_report) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const Index n = X.rows();
  const Index p = X.cols();
  if (y.size() != n) throw ConfigError("response length does not match predictors");
  if (n < 4) throw DataError("selection needs at least four observations");
  if (p < 1) throw DataError("selection needs at least one predictor");
  if (!X.allFinite() || !y.allFinite()) throw DataError("data contain non-finite values");

  const Matrix X_aug = augmented_predictors(X, config);

  Index r = config.r.value_or(0);
  double tau = config.tau.value_or(0.0);
  const bool tune_tau_once = !config.tau && !config.retune_tau_each_rep;
  if (!config.r || tune_tau_once) {
    SelectorConfig tune_config = config;
    if (config.retune_tau_each_rep && !config.tau) {
      // Rank pilots still need a penalty; use a single full-data tune.
      tune_config.retune_tau_each_rep = false;
    }
    TuneReport report = tune(X_aug, y, tune_config);
    r = report.chosen_r;
    if (!config.tau) tau = report.chosen_tau;
    if (tune_report != nullptr) *tune_report = std::move(report);
  }

  SelectionResult result;
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(config.L));
  if (config.retune_tau_each_rep && !config.tau) {
    std::vector<double> taus(static_cast<std::size_t>(config.L));
    const Index m = subsample_size(n, config.replication.subsample_fraction);
    parallel_for(config.L, config.jobs, [&](long ell) {
      RngStream rng(config.seed, StreamTag::Replication, static_cast<std::uint64_t>(ell));
      const auto rows = draw_subsample(n, m, rng);
      const Matrix X_sub = take_rows(X_aug, rows);
      const Vector y_sub = take(y, rows);
      SelectorConfig inner = config;
      inner.jobs = 1;
      const TauTuneReport tuned =
          tune_tau(X_sub, y_sub, {}, r, config.folds, config.kernel, rng, inner);
      taus[static_cast<std::size_t>(ell)] = tuned.chosen_tau;
      reps[static_cast<std::size_t>(ell)] =
          replicate_on_rows(X_aug, y, rows, config.kernel, r, tuned.chosen_tau, rng, config.replication);
    });
    result.tau_per_rep = std::move(taus);
  } else {
    reps = run_replications(X_aug, y, config.kernel, r, tau, config.L, config.seed,
                            StreamTag::Replication, 0, config.replication, config.jobs);
  }

  std::vector<std::vector<Index>> sets;
  sets.reserve(reps.size());
  Index converged = 0;
  for (const auto& rep : reps) {
    sets.push_back(rep.selected);
    result.diagnostics.rep_converged.push_back(rep.converged);
    converged += rep.converged ? 1 : 0;
  }
  result.freq = selection_frequencies(sets, 2 * p);
  result.delta = importance_scores(result.freq);
  result.threshold = knockoff_threshold(result.delta, config.q, config.filter);
  result.selected = select(result.delta, result.threshold);
  result.q = config.q;
  result.filter = config.filter;

  RngStream refit_rng(config.seed, StreamTag::Refit);
  result.refit = finalize(X, y, result.selected, config.kernel, r, refit_rng);

  result.diagnostics.converged_frac =
      static_cast<double>(converged) / static_cast<double>(config.L);
  result.diagnostics.chosen_r = r;
  result.diagnostics.chosen_tau = tau;
  result.diagnostics.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------

std::vector<double> entry_penalties(const GroupLassoSolver& solver,
                                    std::span<const double> grid,
                                    const SolverOptions& opts) {
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<double> entry(static_cast<std::size_t>(solver.n_groups()), 0.0);
  Vector warm = Vector::Zero(solver.dim());
  for (double tau : sorted) {
    const GroupLassoFit fit = solver.solve(tau, opts, &warm);
    for (Index j : fit.active) {
      auto& e = entry[static_cast<std::size_t>(j)];
      if (e == 0.0) e = tau;
    }
    warm = fit.coef;
  }
  return entry;
}

namespace {

void check_stat(std::span<const double> stat, Index p) {
  if (static_cast<Index>(stat.size()) != 2 * p) {
    throw ConfigError("importance statistic must have 2p entries");
  }
}

}  // namespace

Vector coefficient_difference(std::span<const double> stat, Index p) {
  check_stat(stat, p);
  Vector out(p);
  for (Index j = 0; j < p; ++j) {
    out(j) = std::abs(stat[static_cast<std::size_t>(j)]) - std::abs(stat[static_cast<std::size_t>(j + p)]);
  }
  return out;
}

Vector log_coefficient_difference(std::span<const double> stat, Index p) {
  check_stat(stat, p);
  const double floor = std::numeric_limits<double>::epsilon();
  Vector out(p);
  for (Index j = 0; j < p; ++j) {
    const double a = std::max(std::abs(stat[static_cast<std::size_t>(j)]), floor);
    const double b = std::max(std::abs(stat[static_cast<std::size_t>(j + p)]), floor);
    out(j) = std::log(a) - std::log(b);
  }
  return out;
}

Vector signed_max(std::span<const double> stat, Index p) {
  check_stat(stat, p);
  Vector out(p);
  for (Index j = 0; j < p; ++j) {
    const double a = std::abs(stat[static_cast<std::size_t>(j)]);
    const double b = std::abs(stat[static_cast<std::size_t>(j + p)]);
    const double sign = a > b ? 1.0 : (a < b ? -1.0 : 0.0);
    out(j) = sign * std::max(a, b);
  }
  return out;
}

AltImportance alt_importance_scores(const Matrix& X_aug, const Vector& y,
                                    const KernelSpec& spec, Index r, double tau,
                                    std::span<const double> grid, RngStream& rng,
                                    const SolverOptions& opts) {
  if (X_aug.cols() % 2 != 0) throw ConfigError("augmented design needs 2p columns");
  const Index p = X_aug.cols() / 2;
  const FeatureMap map = draw_feature_map(2 * p, r, spec, rng);
  const Matrix design = build_design(map, X_aug);
  const Vector yc = y.array() - y.mean();
  const GroupLassoSolver solver(design, yc, r);

  AltImportance out;
  out.block_norm.assign(static_cast<std::size_t>(2 * p), 0.0);
  const GroupLassoFit fit = solver.solve(tau, opts);
  if (!fit.active.empty()) {
    Matrix sub(design.rows(), static_cast<Index>(fit.active.size()) * r);
    for (std::size_t k = 0; k < fit.active.size(); ++k) {
      sub.middleCols(static_cast<Index>(k) * r, r) = design.middleCols(fit.active[k] * r, r);
    }
    const Vector coef = refit_least_squares(sub, y);
    for (std::size_t k = 0; k < fit.active.size(); ++k) {
      out.block_norm[static_cast<std::size_t>(fit.active[k])] =
          coef.segment(static_cast<Index>(k) * r, r).norm();
    }
  }
  out.entry_tau = entry_penalties(solver, grid, opts);
  out.cd = coefficient_difference(out.block_norm, p);
  out.log_cd = log_coefficient_difference(out.entry_tau, p);
  out.sm = signed_max(out.entry_tau, p);
  return out;
}

}  // namespace kknock
