#pragma once

#include <span>

#include "kknock/common.hpp"
#include "kknock/kernels.hpp"

namespace kknock {

/// Random Fourier features for a block of scalar variables. Slot j maps a
/// value x to psi(x) in R^r with psi_v(x) = sqrt(2/r) cos(x w_jv + b_jv).
///
/// Immutable after construction; safe to share across threads.
class FeatureMap {
 public:
  FeatureMap(Matrix omega, Matrix phase);

  Index n_vars() const { return omega_.rows(); }
  Index r() const { return omega_.cols(); }
  const Matrix& omega() const { return omega_; }
  const Matrix& phase() const { return phase_; }

  /// Map restricted to the given slots, in order.
  FeatureMap subset(std::span<const Index> slots) const;

 private:
  Matrix omega_;
  Matrix phase_;
};

/// i.i.d. frequencies from the kernel's spectral density and phases from
/// Uniform[0, 2pi), drawn independently for every slot.
FeatureMap draw_feature_map(Index n_vars, Index r, const KernelSpec& spec,
                            RngStream& rng);

/// 2p slots where original slot j and knockoff slot j+p share one set of
/// frequencies and phases.
FeatureMap draw_paired_feature_map(Index p, Index r, const KernelSpec& spec,
                                   RngStream& rng);

Vector featurize(const FeatureMap& map, Index slot, double x);

/// n x (n_vars * r) design; column block j holds featurize(map, j, X(:, j)).
Matrix build_design(const FeatureMap& map, const Matrix& X);

}  // namespace kknock
