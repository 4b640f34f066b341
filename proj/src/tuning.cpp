#include "kknock/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kknock/parallel.hpp"

namespace kknock {

double bic_value(double rss, Index r, Index n, Index active) {
  const double nn = static_cast<double>(n);
  const double safe_rss = std::max(rss, std::numeric_limits<double>::min());
  return std::log(safe_rss) + static_cast<double>(r) * (std::log(nn) / nn) *
                                  static_cast<double>(active);
}

std::vector<double> default_tau_grid(double tau_max, Index count, double ratio) {
  if (count < 1) throw ConfigError("tau grid needs at least one point");
  if (!(tau_max > 0.0)) throw ConfigError("tau_max must be positive");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = tau_max;
    return grid;
  }
  const double log_hi = std::log(tau_max);
  const double log_lo = std::log(tau_max * ratio);
  for (Index k = 0; k < count; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
    grid[static_cast<std::size_t>(k)] = std::exp(log_hi + frac * (log_lo - log_hi));
  }
  grid.front() = tau_max;
  return grid;
}

Index choose_r(std::span<const Index> candidates, std::span<const double> sigma,
               Index p, std::vector<double>* objective) {
  if (candidates.empty() || candidates.size() != sigma.size()) {
    throw ConfigError("rank candidates and their deviations must be nonempty and aligned");
  }
  std::vector<double> obj(candidates.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    obj[k] = 2.0 * static_cast<double>(p) * sigma[k] -
             std::log(static_cast<double>(candidates[k]));
    if (obj[k] > obj[best] || (obj[k] == obj[best] && candidates[k] < candidates[best])) {
      best = k;
    }
  }
  if (objective != nullptr) *objective = std::move(obj);
  return candidates[best];
}

double frequency_sd(const SelectionFrequencies& freq) {
  const auto pi = freq.pi_hat();
  if (pi.size() < 2) return 0.0;
  const double mean = std::accumulate(pi.begin(), pi.end(), 0.0) / static_cast<double>(pi.size());
  double ss = 0.0;
  for (double v : pi) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(pi.size() - 1));
}

namespace {

FeatureMap tuning_map(Index n_slots, Index r, const KernelSpec& spec, RngStream& rng,
                      bool shared) {
  if (shared) return draw_paired_feature_map(n_slots / 2, r, spec, rng);
  return draw_feature_map(n_slots, r, spec, rng);
}

Vector centered(const Vector& y) { return y.array() - y.mean(); }

}  // namespace

double augmented_tau_max(const Matrix& X_aug, const Vector& y,
                         const KernelSpec& spec, Index r, RngStream& rng) {
  const FeatureMap map = draw_feature_map(X_aug.cols(), r, spec, rng);
  const Matrix design = build_design(map, X_aug);
  return GroupLassoSolver(design, centered(y), r).tau_max();
}

TauTuneReport tune_tau(const Matrix& X_aug, const Vector& y,
                       std::span<const double> grid_in, Index r, Index folds,
                       const KernelSpec& spec, RngStream& rng,
                       const SelectorConfig& config) {
  const Index n = X_aug.rows();
  if (y.size() != n) throw ConfigError("response length does not match predictors");
  if (folds < 2) throw ConfigError("tau tuning needs at least two folds");
  if (folds > n) throw ConfigError("more folds than observations");
  if (r < 1) throw ConfigError("r must be at least 1");

  const FeatureMap map =
      tuning_map(X_aug.cols(), r, spec, rng, config.replication.shared_features);
  const Matrix design = build_design(map, X_aug);
  const GroupLassoSolver full(design, centered(y), r);

  TauTuneReport report;
  report.r = r;
  report.n = n;
  report.folds = folds;
  if (grid_in.empty()) {
    double tau_max = full.tau_max();
    if (!(tau_max > 0.0)) tau_max = 1.0;  // constant response: every fit is empty
    report.grid = default_tau_grid(tau_max, config.tau_grid_size, config.tau_grid_ratio);
  } else {
    report.grid.assign(grid_in.begin(), grid_in.end());
    for (double t : report.grid) {
      if (!(t >= 0.0)) throw ConfigError("tau grid values must be nonnegative");
    }
    std::sort(report.grid.begin(), report.grid.end(), std::greater<>());
  }
  const std::size_t G = report.grid.size();

  // Fold k holds the observations at permutation positions k, k+K, ...
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    auto k = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
    k = std::min(k, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
  }
  std::vector<Index> fold_of(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) {
    fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] = pos % folds;
  }

  std::vector<std::vector<double>> fold_rss(static_cast<std::size_t>(folds),
                                            std::vector<double>(G, 0.0));
  parallel_for(folds, config.jobs, [&](long k) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
    }
    Matrix d_train(static_cast<Index>(train.size()), design.cols());
    Vector y_train(static_cast<Index>(train.size()));
    for (std::size_t a = 0; a < train.size(); ++a) {
      d_train.row(static_cast<Index>(a)) = design.row(train[a]);
      y_train(static_cast<Index>(a)) = y(train[a]);
    }
    const double y_bar = y_train.mean();
    y_train.array() -= y_bar;
    const GroupLassoSolver solver(d_train, y_train, r);
    Vector warm = Vector::Zero(design.cols());
    for (std::size_t g = 0; g < G; ++g) {
      const GroupLassoFit fit = solver.solve(report.grid[g], config.replication.solver, &warm);
      double rss = 0.0;
      for (Index i : test) {
        const double resid = y(i) - y_bar - design.row(i).dot(fit.coef);
        rss += resid * resid;
      }
      fold_rss[static_cast<std::size_t>(k)][g] = rss;
      warm = fit.coef;
    }
  });

  report.rss.assign(G, 0.0);
  for (const auto& f : fold_rss) {
    for (std::size_t g = 0; g < G; ++g) report.rss[g] += f[g];
  }

  report.active.resize(G);
  Vector warm = Vector::Zero(design.cols());
  for (std::size_t g = 0; g < G; ++g) {
    const GroupLassoFit fit = full.solve(report.grid[g], config.replication.solver, &warm);
    report.active[g] = static_cast<Index>(fit.active.size());
    warm = fit.coef;
  }

  report.bic.resize(G);
  std::size_t best = 0;
  bool any_active = false;
  for (std::size_t g = 0; g < G; ++g) {
    report.bic[g] = bic_value(report.rss[g], r, n, report.active[g]);
    any_active = any_active || report.active[g] > 0;
    // Strict comparison keeps the larger tau on ties (grid is descending).
    if (report.bic[g] < report.bic[best]) best = g;
  }
  report.all_empty = !any_active;
  report.chosen_tau = report.all_empty ? report.grid.front() : report.grid[best];
  return report;
}

TuneReport tune_r(const Matrix& X_aug, const Vector& y,
                  std::span<const Index> candidates, Index pilot_L,
                  const KernelSpec& spec, std::span<const double> tau_for_r,
                  std::uint64_t seed, const SelectorConfig& config) {
  if (candidates.empty()) throw ConfigError("rank candidate set is empty");
  if (tau_for_r.size() != candidates.size()) {
    throw ConfigError("need one penalty per candidate rank");
  }
  if (pilot_L < 10) throw ConfigError("pilot_L must be at least 10");
  TuneReport report;
  report.candidates.assign(candidates.begin(), candidates.end());
  report.tau_for_candidate.assign(tau_for_r.begin(), tau_for_r.end());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto reps = run_replications(X_aug, y, spec, candidates[k], tau_for_r[k], pilot_L,
                                       seed, StreamTag::TunePilot,
                                       static_cast<std::uint64_t>(k) << 32,
                                       config.replication, config.jobs);
    std::vector<std::vector<Index>> sets;
    for (const auto& rep : reps) sets.push_back(rep.selected);
    report.sigma_r.push_back(frequency_sd(selection_frequencies(sets, X_aug.cols())));
  }
  report.chosen_r = choose_r(report.candidates, report.sigma_r, X_aug.cols() / 2,
                             &report.objective);
  const auto it = std::find(candidates.begin(), candidates.end(), report.chosen_r);
  report.chosen_tau = tau_for_r[static_cast<std::size_t>(it - candidates.begin())];
  return report;
}

TuneReport tune(const Matrix& X_aug, const Vector& y, const SelectorConfig& config) {
  std::vector<Index> candidates =
      config.r ? std::vector<Index>{*config.r} : config.xi;
  std::vector<double> taus;
  std::vector<TauTuneReport> tau_reports;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (config.tau) {
      taus.push_back(*config.tau);
      continue;
    }
    RngStream rng(config.seed, StreamTag::TuneTau, static_cast<std::uint64_t>(k));
    tau_reports.push_back(tune_tau(X_aug, y, {}, candidates[k], config.folds, config.kernel,
                                   rng, config));
    taus.push_back(tau_reports.back().chosen_tau);
  }

  TuneReport report;
  if (candidates.size() > 1) {
    report = tune_r(X_aug, y, candidates, config.pilot_L, config.kernel, taus, config.seed,
                    config);
  } else {
    report.candidates = candidates;
    report.tau_for_candidate = taus;
    report.chosen_r = candidates.front();
    report.chosen_tau = taus.front();
  }
  report.tau_reports = std::move(tau_reports);
  for (std::size_t k = 0; k < report.tau_reports.size(); ++k) {
    if (report.tau_reports[k].r == report.chosen_r) {
      report.tau_grid = report.tau_reports[k].grid;
      report.bic = report.tau_reports[k].bic;
    }
  }
  return report;
}

}  // namespace kknock
