#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kknock/common.hpp"
#include "kknock/features.hpp"
#include "kknock/grouplasso.hpp"
#include "kknock/kernels.hpp"
#include "kknock/rng.hpp"

namespace kknock {

inline constexpr double kInfiniteThreshold = std::numeric_limits<double>::infinity();

enum class FilterKind { Knockoffs, KnockoffsPlus };
enum class ImportanceKind { SelectionFrequency, CoefDiff, LogCoefDiff, SignedMax };

std::string to_string(FilterKind kind);
std::string to_string(ImportanceKind kind);
FilterKind parse_filter_kind(std::string_view name);
ImportanceKind parse_importance_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Knockoff filter on importance scores.

/// Empirical selection frequencies over L replications for 2p slots.
struct SelectionFrequencies {
  std::vector<int> counts;
  Index n_reps = 0;

  Index n_slots() const { return static_cast<Index>(counts.size()); }
  std::vector<double> pi_hat() const;
};

/// Counts how many of the replication sets contain each of n_slots slots.
SelectionFrequencies selection_frequencies(std::span<const std::vector<Index>> reps,
                                           Index n_slots);

/// delta_j = pi_hat_j - pi_hat_{j+p}, computed from the integer counts so
/// equal count differences give bitwise-equal scores.
Vector importance_scores(const SelectionFrequencies& freq);

/// Smallest t among the nonzero |delta_j| with
///   (#{delta_j <= -t} + offset) / max(1, #{delta_j >= t}) <= q,
/// offset = 1 for knockoffs+ and 0 otherwise; +inf when none qualifies.
double knockoff_threshold(std::span<const double> delta, double q, FilterKind filter);
double knockoff_threshold(const Vector& delta, double q, FilterKind filter);

/// { j : delta_j >= threshold }, ascending.
std::vector<Index> select(const Vector& delta, double threshold);

// ---------------------------------------------------------------------------
// Subsampled group-lasso replications.

struct ReplicationOptions {
  double subsample_fraction = 0.5;  // subsample size floor(n * fraction)
  bool shared_features = false;     // knockoff slot j+p reuses slot j's draws
  SolverOptions solver;
};

struct ReplicationResult {
  std::vector<Index> selected;  // slots in [0, 2p)
  bool converged = true;
  int iterations = 0;
};

/// One subsample: draw I without replacement, draw a fresh feature map over
/// the 2p slots, center y by its subsample mean and solve the group lasso.
ReplicationResult run_replication(const Matrix& X_aug, const Vector& y,
                                  const KernelSpec& spec, Index r, double tau,
                                  RngStream& rng,
                                  const ReplicationOptions& opts = {});

/// L replications; replication ell uses stream (master_seed, tag, base + ell)
/// so the result does not depend on `jobs`.
std::vector<ReplicationResult> run_replications(
    const Matrix& X_aug, const Vector& y, const KernelSpec& spec, Index r,
    double tau, Index L, std::uint64_t master_seed, StreamTag tag,
    std::uint64_t base, const ReplicationOptions& opts, int jobs);

/// Draws the subsample index set used by run_replication.
std::vector<Index> draw_subsample(Index n, Index size, RngStream& rng);

// ---------------------------------------------------------------------------
// Column standardization and the final refit.

struct Standardizer {
  Vector center;
  Vector scale;

  static Standardizer fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
};

/// Refit additive estimator f(x) = ybar + sum_{j in S} psi_j(x_j)^T c_j.
struct AdditiveEstimator {
  std::vector<Index> selected;
  Standardizer standardizer;  // over the p original columns
  std::optional<FeatureMap> map;
  Vector coef;
  double intercept = 0.0;

  /// x is a raw (unstandardized) row of length p.
  double predict(const Vector& x) const;
  Vector predict(const Matrix& X) const;
};

AdditiveEstimator finalize(const Matrix& X, const Vector& y,
                           std::span<const Index> selected,
                           const KernelSpec& spec, Index r, RngStream& rng);

// ---------------------------------------------------------------------------
// Full procedure.

struct SelectorConfig {
  double q = 0.2;
  Index L = 100;
  KernelSpec kernel;
  std::optional<Index> r;        // unset: tune over xi
  std::vector<Index> xi{2, 3, 4};
  std::optional<double> tau;     // unset: tune by BIC
  bool retune_tau_each_rep = false;
  FilterKind filter = FilterKind::Knockoffs;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = all cores
  std::optional<double> ridge;
  Index pilot_L = 20;
  Index tau_grid_size = 30;
  double tau_grid_ratio = 1e-3;
  Index folds = 5;
  ReplicationOptions replication;

  void validate() const;
};

struct TuneReport;  // tuning.hpp

struct SelectionDiagnostics {
  double converged_frac = 1.0;
  std::vector<bool> rep_converged;
  double runtime_s = 0.0;
  Index chosen_r = 0;
  double chosen_tau = 0.0;
};

struct SelectionResult {
  SelectionFrequencies freq;
  Vector delta;
  double threshold = kInfiniteThreshold;
  std::vector<Index> selected;  // original variables in [0, p)
  double q = 0.2;
  FilterKind filter = FilterKind::Knockoffs;
  AdditiveEstimator refit;
  SelectionDiagnostics diagnostics;
  std::optional<std::vector<double>> tau_per_rep;
};

/// Knockoffs, then L subsampled replications, scores, filter and refit.
/// Deterministic in config.seed for any number of jobs.
SelectionResult run(const Matrix& X, const Vector& y, const SelectorConfig& config,
                    TuneReport* tune_report = nullptr);

/// Step 1 alone: fitted knockoffs and the standardized augmented matrix
/// [X, X~] (each of the 2p columns scaled to mean 0, variance 1).
Matrix augmented_predictors(const Matrix& X, const SelectorConfig& config);

// ---------------------------------------------------------------------------
// Single-fit importance scores used for comparison in the benchmark harness.

struct AltImportance {
  std::vector<double> block_norm;   // per slot, refit at the given tau
  std::vector<double> entry_tau;    // per slot, 0 if it never enters
  Vector cd;
  Vector log_cd;
  Vector sm;
};

/// Largest grid value at which each group is active along the warm-started
/// path (the grid is visited in descending order).
std::vector<double> entry_penalties(const GroupLassoSolver& solver,
                                    std::span<const double> grid,
                                    const SolverOptions& opts = {});

Vector coefficient_difference(std::span<const double> stat, Index p);
Vector log_coefficient_difference(std::span<const double> stat, Index p);
Vector signed_max(std::span<const double> stat, Index p);

/// One feature expansion of the full augmented data; block norms of the
/// least-squares refit on the support at tau and entry penalties along grid.
AltImportance alt_importance_scores(const Matrix& X_aug, const Vector& y,
                                    const KernelSpec& spec, Index r, double tau,
                                    std::span<const double> grid, RngStream& rng,
                                    const SolverOptions& opts = {});

}  // namespace kknock
