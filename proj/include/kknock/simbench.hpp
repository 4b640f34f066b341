#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kknock/common.hpp"
#include "kknock/rng.hpp"
#include "kknock/selector.hpp"

namespace kknock {

enum class Design { ArNormal, MixtureNormal, Uniform };
enum class ComponentFamily { TrigPoly, SinRatio, Mixed };

std::string to_string(Design d);
std::string to_string(ComponentFamily c);
Design parse_design(std::string_view name);
ComponentFamily parse_component_family(std::string_view name);

struct SimConfig {
  Index n = 900;
  Index p = 50;
  Index s_size = 10;
  double theta = 100.0;
  Design design = Design::ArNormal;
  double rho = 0.3;
  ComponentFamily component = ComponentFamily::TrigPoly;
  std::uint64_t seed = 1;
  Index replications = 50;

  void validate() const;
};

/// Component function of one relevant predictor.
///   trig_poly: u1 sin(c1 x) + u2 cos(c2 x) + u3 sin^2(c3 x) + u4 cos^2(c4 x)
///   sin_ratio: sin(c1 x) / (2 - sin(c2 x))
struct ComponentFunction {
  ComponentFamily family = ComponentFamily::TrigPoly;  // never Mixed
  std::array<double, 4> u{};
  std::array<double, 4> c{};

  double operator()(double x) const;
};

/// u ~ U(1, 2), c ~ U(1, 10); Mixed picks either family with probability 1/2.
ComponentFunction gen_component(ComponentFamily family, RngStream& rng);

/// Rows i.i.d. from the design. AR: N(0, Sigma), Sigma_ij = rho^|i-j|.
/// Mixture: equal-weight N(0, Sigma(rho)) for rho in {0.1, 0.3, 0.5}.
/// Uniform: i.i.d. U[-2, 2].
Matrix gen_predictors(const SimConfig& config, RngStream& rng);

Matrix ar_covariance(Index p, double rho);

struct ResponseDraw {
  Vector y;
  std::vector<double> coefficients;  // theta_j ~ U(-theta, theta), aligned with support
};

/// y_i = sum_{j in S} theta_j f_j(x_ij) + eps_i, eps_i ~ N(0, 1).
ResponseDraw gen_response(const Matrix& X, std::span<const Index> support, double theta,
                          std::span<const ComponentFunction> components, RngStream& rng);

struct SimDataset {
  Matrix X;
  Vector y;
  std::vector<Index> support;  // sorted, 0-based
  std::vector<double> coefficients;
  std::vector<ComponentFunction> components;
};

/// Dataset `rep` of a configuration. Deterministic in (config.seed, rep).
SimDataset simulate(const SimConfig& config, std::uint64_t rep = 0);

struct MetricRecord {
  double fdp = 0.0;
  double power_frac = 0.0;
  Index selected_size = 0;
  double mfdr_term = 0.0;  // |S_hat n S_null| / (|S_hat| + 1/q)
};

/// Index sets are 0-based predictor indices.
MetricRecord metrics(std::span<const Index> selected, std::span<const Index> support, double q);

struct AggregateMetrics {
  double fdr = 0.0;
  double fdr_se = 0.0;
  double mfdr = 0.0;
  double power = 0.0;
  double power_se = 0.0;
  double mean_selected = 0.0;
  double runtime_s = 0.0;
  Index completed = 0;
  Index failures = 0;
};

AggregateMetrics aggregate(std::span<const MetricRecord> records);

// ---------------------------------------------------------------------------

struct BenchCell {
  SimConfig sim;
  SelectorConfig selector;
  ImportanceKind score = ImportanceKind::SelectionFrequency;
};

struct CellResult {
  BenchCell cell;
  std::vector<MetricRecord> records;
  std::vector<std::string> errors;
  AggregateMetrics summary;
};

/// Runs one cell: `replications` independent datasets through the selector.
/// Replication failures are recorded, not rethrown.
CellResult run_cell(const BenchCell& cell, int jobs);

/// Selected set under one of the single-fit comparison scores.
std::vector<Index> select_with_alt_score(const Matrix& X, const Vector& y,
                                         const SelectorConfig& config, ImportanceKind score);

std::vector<CellResult> run_experiment(std::span<const BenchCell> cells, int jobs);

/// Config columns, then fdr, fdr_se, mfdr, power, power_se, mean_selected,
/// runtime_s. With timing off the runtime column is written as 0.
void write_results_csv(std::ostream& out, std::span<const CellResult> results,
                       bool timing = true);

}  // namespace kknock
