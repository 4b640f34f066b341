#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kknock/simbench.hpp"
#include "oracles.hpp"

using namespace kknock;

namespace {

double sample_corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace

TEST(GenPredictors, IndependentWhenRhoZero) {
  SimConfig cfg;
  cfg.n = 2000;
  cfg.p = 4;
  cfg.s_size = 0;
  cfg.rho = 0.0;
  RngStream rng(1);
  const Matrix X = gen_predictors(cfg, rng);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = i + 1; j < 4; ++j) EXPECT_NEAR(sample_corr(X.col(i), X.col(j)), 0.0, 0.05);
  }
}

TEST(GenPredictors, ArCorrelation) {
  SimConfig cfg;
  cfg.n = 5000;
  cfg.p = 5;
  cfg.s_size = 0;
  cfg.rho = 0.3;
  RngStream rng(2);
  const Matrix X = gen_predictors(cfg, rng);
  EXPECT_NEAR(sample_corr(X.col(0), X.col(1)), 0.3, 0.04);
  EXPECT_NEAR(sample_corr(X.col(0), X.col(2)), 0.09, 0.04);
}

TEST(GenPredictors, MixtureCorrelationAveragesComponents) {
  SimConfig cfg;
  cfg.n = 30000;
  cfg.p = 3;
  cfg.s_size = 0;
  cfg.design = Design::MixtureNormal;
  RngStream rng(3);
  const Matrix X = gen_predictors(cfg, rng);
  EXPECT_NEAR(sample_corr(X.col(0), X.col(1)), (0.1 + 0.3 + 0.5) / 3.0, 0.02);
}

TEST(GenPredictors, UniformSupport) {
  SimConfig cfg;
  cfg.n = 1000;
  cfg.p = 3;
  cfg.s_size = 0;
  cfg.design = Design::Uniform;
  RngStream rng(4);
  const Matrix X = gen_predictors(cfg, rng);
  EXPECT_GE(X.minCoeff(), -2.0);
  EXPECT_LE(X.maxCoeff(), 2.0);
  EXPECT_NEAR(X.col(1).squaredNorm() / 1000.0, 4.0 / 3.0, 0.1);
}

TEST(ArCovariance, Entries) {
  const Matrix S = ar_covariance(4, 0.5);
  EXPECT_DOUBLE_EQ(S(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(S(0, 3), 0.125);
  EXPECT_DOUBLE_EQ(S(2, 1), 0.5);
}

TEST(ComponentFunction, TrigPolyExample) {
  ComponentFunction f;
  f.family = ComponentFamily::TrigPoly;
  f.u = {1, 1, 1, 1};
  f.c = {1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(f(0.0), 2.0);
  const double x = 0.7;
  EXPECT_NEAR(f(x), std::sin(x) + std::cos(x) + std::pow(std::sin(x), 2) + std::pow(std::cos(x), 2),
              1e-15);
}

TEST(ComponentFunction, SinRatioBounded) {
  RngStream rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto f = gen_component(ComponentFamily::SinRatio, rng);
    EXPECT_EQ(f.family, ComponentFamily::SinRatio);
    for (double x = -3; x <= 3; x += 0.01) {
      EXPECT_GE(f(x), -1.0);
      EXPECT_LE(f(x), 1.0);
    }
  }
}

TEST(ComponentFunction, ParameterRanges) {
  RngStream rng(6);
  for (int k = 0; k < 200; ++k) {
    const auto f = gen_component(ComponentFamily::TrigPoly, rng);
    for (int i = 0; i < 4; ++i) {
      EXPECT_GE(f.u[i], 1.0);
      EXPECT_LT(f.u[i], 2.0);
      EXPECT_GE(f.c[i], 1.0);
      EXPECT_LT(f.c[i], 10.0);
    }
  }
}

TEST(ComponentFunction, MixedIsFairCoin) {
  RngStream rng(7);
  int trig = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto f = gen_component(ComponentFamily::Mixed, rng);
    EXPECT_NE(f.family, ComponentFamily::Mixed);
    trig += f.family == ComponentFamily::TrigPoly;
  }
  EXPECT_NEAR(trig / 10000.0, 0.5, 0.02);
}

TEST(GenResponse, ThetaZeroIsNoise) {
  SimConfig cfg;
  cfg.n = 4000;
  cfg.p = 3;
  cfg.s_size = 2;
  cfg.theta = 0.0;
  const auto ds = simulate(cfg, 0);
  const double mean = ds.y.mean();
  EXPECT_NEAR(mean, 0.0, 0.06);
  EXPECT_NEAR((ds.y.array() - mean).square().sum() / 3999.0, 1.0, 0.08);
}

TEST(GenResponse, EmptySupportIsNoise) {
  RngStream rng(8);
  const Matrix X = Matrix::Zero(1000, 2);
  const auto draw = gen_response(X, {}, 100.0, {}, rng);
  EXPECT_TRUE(draw.coefficients.empty());
  EXPECT_NEAR(draw.y.squaredNorm() / 1000.0, 1.0, 0.12);
}

TEST(GenResponse, MatchesFormula) {
  RngStream rng(9);
  Matrix X(5, 3);
  for (Index i = 0; i < 5; ++i) X.row(i) << 0.1 * i, -0.2 * i, 0.3;
  const std::vector<Index> S{0, 2};
  std::vector<ComponentFunction> comps(2);
  comps[0].u = {1, 2, 1, 2};
  comps[0].c = {1, 2, 3, 4};
  comps[1].family = ComponentFamily::SinRatio;
  comps[1].c = {2, 5, 0, 0};
  RngStream a(10), b(10);
  const auto draw = gen_response(X, S, 10.0, comps, a);
  ASSERT_EQ(draw.coefficients.size(), 2u);
  for (double th : draw.coefficients) {
    EXPECT_GE(th, -10.0);
    EXPECT_LE(th, 10.0);
  }
  const auto same = gen_response(X, S, 10.0, comps, b);
  EXPECT_TRUE((draw.y.array() == same.y.array()).all());
  // Subtract the signal; what remains must be the noise part and be small
  // enough to be plausibly N(0,1).
  for (Index i = 0; i < 5; ++i) {
    const double signal = draw.coefficients[0] * comps[0](X(i, 0)) + draw.coefficients[1] * comps[1](X(i, 2));
    EXPECT_LT(std::fabs(draw.y(i) - signal), 6.0);
  }
}

TEST(GenResponse, VarianceGrowsWithTheta) {
  SimConfig cfg;
  cfg.n = 2000;
  cfg.p = 5;
  cfg.s_size = 3;
  std::vector<double> vars;
  for (double th : {1.0, 10.0, 100.0}) {
    cfg.theta = th;
    const auto ds = simulate(cfg, 2);
    vars.push_back((ds.y.array() - ds.y.mean()).square().mean());
  }
  EXPECT_LT(vars[0], vars[1]);
  EXPECT_LT(vars[1], vars[2]);
}

TEST(Simulate, DeterministicAndSupportShape) {
  SimConfig cfg;
  cfg.n = 100;
  cfg.p = 20;
  cfg.s_size = 5;
  const auto a = simulate(cfg, 3);
  const auto b = simulate(cfg, 3);
  EXPECT_TRUE((a.X.array() == b.X.array()).all());
  EXPECT_TRUE((a.y.array() == b.y.array()).all());
  EXPECT_EQ(a.support, b.support);
  ASSERT_EQ(a.support.size(), 5u);
  EXPECT_TRUE(std::is_sorted(a.support.begin(), a.support.end()));
  const auto c = simulate(cfg, 4);
  EXPECT_FALSE((a.X.array() == c.X.array()).all());
}

TEST(SimConfigTest, Validation) {
  SimConfig cfg;
  cfg.s_size = cfg.p + 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.theta = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rho = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_design("gamma"), ConfigError);
  EXPECT_EQ(parse_design("mixture_normal"), Design::MixtureNormal);
  EXPECT_EQ(parse_component_family("sin_ratio"), ComponentFamily::SinRatio);
}

TEST(Metrics, Examples) {
  const std::vector<Index> S{0, 1};
  const auto exact = metrics(S, S, 0.2);
  EXPECT_EQ(exact.fdp, 0.0);
  EXPECT_EQ(exact.power_frac, 1.0);
  const auto none = metrics({}, S, 0.2);
  EXPECT_EQ(none.fdp, 0.0);
  EXPECT_EQ(none.power_frac, 0.0);
  EXPECT_EQ(none.selected_size, 0);
  const std::vector<Index> sel{0, 1, 2};
  const auto m = metrics(sel, S, 0.2);
  EXPECT_NEAR(m.fdp, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.power_frac, 1.0);
  EXPECT_NEAR(m.mfdr_term, 1.0 / (3.0 + 5.0), 1e-15);
  EXPECT_NEAR(m.mfdr_term, 0.125, 1e-15);
  const auto empty_truth = metrics(sel, {}, 0.2);
  EXPECT_EQ(empty_truth.power_frac, 0.0);
  EXPECT_EQ(empty_truth.fdp, 1.0);
}

TEST(Aggregate, MeanAndStandardError) {
  std::vector<MetricRecord> recs(4);
  const double fdp[4] = {0.0, 0.5, 0.25, 0.25};
  for (int i = 0; i < 4; ++i) {
    recs[i].fdp = fdp[i];
    recs[i].power_frac = 1.0 - fdp[i];
    recs[i].mfdr_term = fdp[i] / 2;
    recs[i].selected_size = i;
  }
  const auto agg = aggregate(recs);
  const double mean = 0.25;
  double ss = 0;
  for (double v : fdp) ss += (v - mean) * (v - mean);
  EXPECT_EQ(agg.fdr, (0.0 + 0.5 + 0.25 + 0.25) / 4.0);
  EXPECT_NEAR(agg.fdr_se, std::sqrt(ss / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(agg.power, 0.75, 1e-15);
  EXPECT_NEAR(agg.mfdr, 0.125, 1e-15);
  EXPECT_NEAR(agg.mean_selected, 1.5, 1e-15);
  EXPECT_EQ(agg.completed, 4);
}

TEST(RunCell, RecordsAndCsvAreReproducible) {
  BenchCell cell;
  cell.sim.n = 80;
  cell.sim.p = 5;
  cell.sim.s_size = 2;
  cell.sim.theta = 50;
  cell.sim.replications = 3;
  cell.selector.r = 2;
  cell.selector.tau = 5.0;
  cell.selector.L = 10;
  const std::vector<BenchCell> cells{cell, cell};
  const auto a = run_experiment(cells, 1);
  const auto b = run_experiment(cells, 2);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].records.size(), 3u);
  for (const auto& r : a[0].records) {
    EXPECT_GE(r.fdp, 0.0);
    EXPECT_LE(r.fdp, 1.0);
    EXPECT_GE(r.power_frac, 0.0);
    EXPECT_LE(r.power_frac, 1.0);
  }
  double mean = 0;
  for (const auto& r : a[0].records) mean += r.fdp;
  EXPECT_EQ(a[0].summary.fdr, aggregate(a[0].records).fdr);
  EXPECT_NEAR(a[0].summary.fdr, mean / 3.0, 1e-15);
  std::ostringstream sa, sb;
  write_results_csv(sa, a, false);
  write_results_csv(sb, b, false);
  EXPECT_EQ(sa.str(), sb.str());
  const std::string header = sa.str().substr(0, sa.str().find('\n'));
  EXPECT_NE(header.find("fdr,fdr_se,mfdr,power,power_se,mean_selected,runtime_s"), std::string::npos);
  EXPECT_EQ(header.rfind("runtime_s"), header.size() - 9);
}

TEST(RunCell, AlternativeScores) {
  BenchCell cell;
  cell.sim.n = 80;
  cell.sim.p = 5;
  cell.sim.s_size = 2;
  cell.sim.theta = 50;
  cell.sim.replications = 2;
  cell.selector.r = 2;
  cell.selector.tau = 5.0;
  for (auto score : {ImportanceKind::CoefDiff, ImportanceKind::LogCoefDiff, ImportanceKind::SignedMax}) {
    cell.score = score;
    const auto res = run_cell(cell, 1);
    EXPECT_EQ(res.records.size(), 2u);
    EXPECT_TRUE(res.errors.empty());
  }
}
