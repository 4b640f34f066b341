#include "kknock/features.hpp"

#include <cmath>
#include <numbers>

namespace kknock {

FeatureMap::FeatureMap(Matrix omega, Matrix phase)
    : omega_(std::move(omega)), phase_(std::move(phase)) {
  if (omega_.rows() != phase_.rows() || omega_.cols() != phase_.cols()) {
    throw ConfigError("feature map frequency and phase shapes differ");
  }
}

FeatureMap FeatureMap::subset(std::span<const Index> slots) const {
  Matrix omega(static_cast<Index>(slots.size()), r());
  Matrix phase(static_cast<Index>(slots.size()), r());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const Index j = slots[k];
    if (j < 0 || j >= n_vars()) throw ConfigError("feature slot out of range");
    omega.row(static_cast<Index>(k)) = omega_.row(j);
    phase.row(static_cast<Index>(k)) = phase_.row(j);
  }
  return FeatureMap(std::move(omega), std::move(phase));
}

namespace {

void draw_slot(Matrix& omega, Matrix& phase, Index j, const KernelSpec& spec,
               RngStream& rng) {
  for (Index v = 0; v < omega.cols(); ++v) {
    omega(j, v) = sample_frequency(spec, rng);
  }
  for (Index v = 0; v < phase.cols(); ++v) {
    phase(j, v) = 2.0 * std::numbers::pi * rng.uniform();
  }
}

}  // namespace

FeatureMap draw_feature_map(Index n_vars, Index r, const KernelSpec& spec,
                            RngStream& rng) {
  if (n_vars < 1 || r < 1) {
    throw ConfigError("feature map needs at least one slot and one feature");
  }
  Matrix omega(n_vars, r);
  Matrix phase(n_vars, r);
  for (Index j = 0; j < n_vars; ++j) draw_slot(omega, phase, j, spec, rng);
  return FeatureMap(std::move(omega), std::move(phase));
}

FeatureMap draw_paired_feature_map(Index p, Index r, const KernelSpec& spec,
                                   RngStream& rng) {
  if (p < 1 || r < 1) {
    throw ConfigError("feature map needs at least one slot and one feature");
  }
  Matrix omega(2 * p, r);
  Matrix phase(2 * p, r);
  for (Index j = 0; j < p; ++j) {
    draw_slot(omega, phase, j, spec, rng);
    omega.row(j + p) = omega.row(j);
    phase.row(j + p) = phase.row(j);
  }
  return FeatureMap(std::move(omega), std::move(phase));
}

Vector featurize(const FeatureMap& map, Index slot, double x) {
  if (slot < 0 || slot >= map.n_vars()) {
    throw ConfigError("feature slot out of range");
  }
  const double amp = std::sqrt(2.0 / static_cast<double>(map.r()));
  Vector out(map.r());
  for (Index v = 0; v < map.r(); ++v) {
    out(v) = amp * std::cos(x * map.omega()(slot, v) + map.phase()(slot, v));
  }
  return out;
}

Matrix build_design(const FeatureMap& map, const Matrix& X) {
  if (X.cols() != map.n_vars()) {
    throw ConfigError("design has " + std::to_string(X.cols()) +
                      " columns but the feature map has " +
                      std::to_string(map.n_vars()) + " slots");
  }
  const Index r = map.r();
  const double amp = std::sqrt(2.0 / static_cast<double>(r));
  Matrix out(X.rows(), X.cols() * r);
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index v = 0; v < r; ++v) {
      const double w = map.omega()(j, v);
      const double b = map.phase()(j, v);
      auto col = out.col(j * r + v);
      for (Index i = 0; i < X.rows(); ++i) {
        col(i) = amp * std::cos(X(i, j) * w + b);
      }
    }
  }
  return out;
}

}  // namespace kknock
