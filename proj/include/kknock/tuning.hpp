#pragma once

#include <span>
#include <vector>

#include "kknock/selector.hpp"

namespace kknock {

/// Cross-validated tau search for one feature rank r.
struct TauTuneReport {
  Index r = 0;
  Index n = 0;
  Index folds = 0;
  std::vector<double> grid;     // descending
  std::vector<double> rss;      // cross-validated residual sum of squares
  std::vector<Index> active;    // groups active in the full-data fit
  std::vector<double> bic;
  double chosen_tau = 0.0;
  bool all_empty = false;
};

struct TuneReport {
  std::vector<Index> candidates;
  std::vector<double> sigma_r;
  std::vector<double> objective;
  std::vector<double> tau_for_candidate;
  Index chosen_r = 0;
  std::vector<TauTuneReport> tau_reports;  // one per tuned rank
  std::vector<double> tau_grid;            // for the chosen rank
  std::vector<double> bic;                 // for the chosen rank
  double chosen_tau = 0.0;
};

/// log(rss) + r (log n / n) active
double bic_value(double rss, Index r, Index n, Index active);

/// `count` log-spaced values from tau_max down to ratio * tau_max.
std::vector<double> default_tau_grid(double tau_max, Index count = 30,
                                     double ratio = 1e-3);

/// argmax over candidates of 2p sigma_r - ln r; ties go to the smaller r.
Index choose_r(std::span<const Index> candidates, std::span<const double> sigma,
               Index p, std::vector<double>* objective = nullptr);

/// Sample standard deviation of the 2p selection frequencies.
double frequency_sd(const SelectionFrequencies& freq);

/// tau_max of the full augmented design under one fresh feature map.
double augmented_tau_max(const Matrix& X_aug, const Vector& y,
                         const KernelSpec& spec, Index r, RngStream& rng);

/// K-fold cross-validated RSS along the grid (warm-started paths), active-set
/// size of the full-data fit, and BIC. An empty grid gets the default grid.
/// All draws (one feature map, then the fold permutation) come from rng.
TauTuneReport tune_tau(const Matrix& X_aug, const Vector& y,
                       std::span<const double> grid, Index r, Index folds,
                       const KernelSpec& spec, RngStream& rng,
                       const SelectorConfig& config = {});

/// Pilot replications per candidate rank. tau_for_r gives the penalty used
/// for each candidate (tuned or fixed).
TuneReport tune_r(const Matrix& X_aug, const Vector& y,
                  std::span<const Index> candidates, Index pilot_L,
                  const KernelSpec& spec, std::span<const double> tau_for_r,
                  std::uint64_t seed, const SelectorConfig& config = {});

/// The rank and penalty selection run() performs when r and/or tau are not
/// fixed in config.
TuneReport tune(const Matrix& X_aug, const Vector& y, const SelectorConfig& config);

}  // namespace kknock
