#include "kknock/simbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kknock/parallel.hpp"
#include "kknock/tuning.hpp"

namespace kknock {

std::string to_string(Design d) {
  switch (d) {
    case Design::ArNormal:
      return "ar_normal";
    case Design::MixtureNormal:
      return "mixture_normal";
    case Design::Uniform:
      return "uniform";
  }
  return "unknown";
}

std::string to_string(ComponentFamily c) {
  switch (c) {
    case ComponentFamily::TrigPoly:
      return "trig_poly";
    case ComponentFamily::SinRatio:
      return "sin_ratio";
    case ComponentFamily::Mixed:
      return "mixed";
  }
  return "unknown";
}

Design parse_design(std::string_view name) {
  if (name == "ar_normal") return Design::ArNormal;
  if (name == "mixture_normal") return Design::MixtureNormal;
  if (name == "uniform") return Design::Uniform;
  throw ConfigError("unknown design '" + std::string(name) + "'");
}

ComponentFamily parse_component_family(std::string_view name) {
  if (name == "trig_poly") return ComponentFamily::TrigPoly;
  if (name == "sin_ratio") return ComponentFamily::SinRatio;
  if (name == "mixed") return ComponentFamily::Mixed;
  throw ConfigError("unknown component family '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (n < 4) throw ConfigError("n must be at least 4");
  if (p < 1) throw ConfigError("p must be at least 1");
  if (s_size < 0 || s_size > p) throw ConfigError("s_size must lie in [0, p]");
  if (!(theta >= 0.0)) throw ConfigError("theta must be nonnegative");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (replications < 1) throw ConfigError("replications must be at least 1");
}

double ComponentFunction::operator()(double x) const {
  if (family == ComponentFamily::SinRatio) {
    return std::sin(c[0] * x) / (2.0 - std::sin(c[1] * x));
  }
  const double s3 = std::sin(c[2] * x);
  const double c4 = std::cos(c[3] * x);
  return u[0] * std::sin(c[0] * x) + u[1] * std::cos(c[1] * x) + u[2] * s3 * s3 +
         u[3] * c4 * c4;
}

ComponentFunction gen_component(ComponentFamily family, RngStream& rng) {
  ComponentFunction f;
  if (family == ComponentFamily::Mixed) {
    family = rng.uniform() < 0.5 ? ComponentFamily::TrigPoly : ComponentFamily::SinRatio;
  }
  f.family = family;
  if (family == ComponentFamily::TrigPoly) {
    for (auto& v : f.u) v = rng.uniform(1.0, 2.0);
    for (auto& v : f.c) v = rng.uniform(1.0, 10.0);
  } else {
    f.u = {1.0, 1.0, 0.0, 0.0};
    f.c[0] = rng.uniform(1.0, 10.0);
    f.c[1] = rng.uniform(1.0, 10.0);
  }
  return f;
}

Matrix ar_covariance(Index p, double rho) {
  Matrix sigma(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    }
  }
  return sigma;
}

namespace {

Matrix standard_normal(Index n, Index p, RngStream& rng) {
  Matrix Z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  }
  return Z;
}

Matrix ar_factor(Index p, double rho) {
  if (rho == 0.0) return Matrix::Identity(p, p);
  Eigen::LLT<Matrix> llt(ar_covariance(p, rho));
  return llt.matrixL();
}

}  // namespace

Matrix gen_predictors(const SimConfig& config, RngStream& rng) {
  const Index n = config.n;
  const Index p = config.p;
  switch (config.design) {
    case Design::ArNormal: {
      const Matrix L = ar_factor(p, config.rho);
      return standard_normal(n, p, rng) * L.transpose();
    }
    case Design::MixtureNormal: {
      const std::array<Matrix, 3> factors{ar_factor(p, 0.1), ar_factor(p, 0.3),
                                          ar_factor(p, 0.5)};
      Matrix X(n, p);
      for (Index i = 0; i < n; ++i) {
        const auto k = std::min<Index>(2, static_cast<Index>(rng.uniform() * 3.0));
        Vector z(p);
        for (Index j = 0; j < p; ++j) z(j) = rng.normal();
        X.row(i) = (factors[static_cast<std::size_t>(k)] * z).transpose();
      }
      return X;
    }
    case Design::Uniform: {
      Matrix X(n, p);
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
      }
      return X;
    }
  }
  return {};
}

ResponseDraw gen_response(const Matrix& X, std::span<const Index> support, double theta,
                          std::span<const ComponentFunction> components, RngStream& rng) {
  if (support.size() != components.size()) {
    throw ConfigError("need one component function per relevant predictor");
  }
  ResponseDraw out;
  out.y = Vector::Zero(X.rows());
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double coef = rng.uniform(-theta, theta);
    out.coefficients.push_back(coef);
    const Index j = support[k];
    for (Index i = 0; i < X.rows(); ++i) out.y(i) += coef * components[k](X(i, j));
  }
  for (Index i = 0; i < X.rows(); ++i) out.y(i) += rng.normal();
  return out;
}

SimDataset simulate(const SimConfig& config, std::uint64_t rep) {
  config.validate();
  SimDataset data;
  RngStream x_rng(config.seed, StreamTag::Predictors, rep);
  data.X = gen_predictors(config, x_rng);

  RngStream s_rng(config.seed, StreamTag::Support, rep);
  std::vector<Index> all(static_cast<std::size_t>(config.p));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index i = 0; i < config.s_size; ++i) {
    auto k = i + static_cast<Index>(s_rng.uniform() * static_cast<double>(config.p - i));
    k = std::min(k, config.p - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(k)]);
  }
  data.support.assign(all.begin(), all.begin() + config.s_size);
  std::sort(data.support.begin(), data.support.end());

  RngStream c_rng(config.seed, StreamTag::Components, rep);
  for (Index k = 0; k < config.s_size; ++k) {
    data.components.push_back(gen_component(config.component, c_rng));
  }
  RngStream y_rng(config.seed, StreamTag::Response, rep);
  ResponseDraw draw = gen_response(data.X, data.support, config.theta, data.components, y_rng);
  data.y = std::move(draw.y);
  data.coefficients = std::move(draw.coefficients);
  return data;
}

MetricRecord metrics(std::span<const Index> selected, std::span<const Index> support, double q) {
  const std::set<Index> truth(support.begin(), support.end());
  const std::set<Index> chosen(selected.begin(), selected.end());
  Index true_pos = 0;
  for (Index j : chosen) true_pos += truth.count(j) ? 1 : 0;
  const auto size = static_cast<Index>(chosen.size());
  const Index false_pos = size - true_pos;
  MetricRecord rec;
  rec.selected_size = size;
  rec.fdp = static_cast<double>(false_pos) / static_cast<double>(std::max<Index>(1, size));
  rec.power_frac = static_cast<double>(true_pos) /
                   static_cast<double>(std::max<Index>(1, static_cast<Index>(truth.size())));
  rec.mfdr_term = static_cast<double>(false_pos) / (static_cast<double>(size) + 1.0 / q);
  return rec;
}

AggregateMetrics aggregate(std::span<const MetricRecord> records) {
  AggregateMetrics agg;
  const auto R = static_cast<double>(records.size());
  agg.completed = static_cast<Index>(records.size());
  if (records.empty()) return agg;
  double fdp_sq = 0.0, pow_sq = 0.0;
  for (const auto& rec : records) {
    agg.fdr += rec.fdp;
    agg.mfdr += rec.mfdr_term;
    agg.power += rec.power_frac;
    agg.mean_selected += static_cast<double>(rec.selected_size);
  }
  agg.fdr /= R;
  agg.mfdr /= R;
  agg.power /= R;
  agg.mean_selected /= R;
  for (const auto& rec : records) {
    fdp_sq += (rec.fdp - agg.fdr) * (rec.fdp - agg.fdr);
    pow_sq += (rec.power_frac - agg.power) * (rec.power_frac - agg.power);
  }
  if (records.size() > 1) {
    agg.fdr_se = std::sqrt(fdp_sq / (R - 1.0) / R);
    agg.power_se = std::sqrt(pow_sq / (R - 1.0) / R);
  }
  return agg;
}

std::vector<Index> select_with_alt_score(const Matrix& X, const Vector& y,
                                         const SelectorConfig& config, ImportanceKind score) {
  config.validate();
  const Matrix X_aug = augmented_predictors(X, config);
  SelectorConfig fixed = config;
  if (!fixed.r) fixed.r = fixed.xi.front();
  Index r = *fixed.r;
  double tau = config.tau.value_or(0.0);
  if (!config.tau) {
    const TuneReport report = tune(X_aug, y, fixed);
    r = report.chosen_r;
    tau = report.chosen_tau;
  }
  RngStream rng(config.seed, StreamTag::AltScores);
  RngStream grid_rng(config.seed, StreamTag::AltScores, 1);
  const double tau_max = augmented_tau_max(X_aug, y, config.kernel, r, grid_rng);
  const auto grid = default_tau_grid(tau_max > 0.0 ? tau_max : 1.0, 100, config.tau_grid_ratio);
  const AltImportance alt =
      alt_importance_scores(X_aug, y, config.kernel, r, tau, grid, rng, config.replication.solver);
  const Vector& w = score == ImportanceKind::CoefDiff      ? alt.cd
                    : score == ImportanceKind::LogCoefDiff ? alt.log_cd
                                                           : alt.sm;
  return select(w, knockoff_threshold(w, config.q, config.filter));
}

CellResult run_cell(const BenchCell& cell, int jobs) {
  cell.sim.validate();
  cell.selector.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto R = cell.sim.replications;
  std::vector<std::optional<MetricRecord>> slots(static_cast<std::size_t>(R));
  std::vector<std::string> errors(static_cast<std::size_t>(R));
  parallel_for(R, jobs, [&](long rep) {
    try {
      const SimDataset data = simulate(cell.sim, static_cast<std::uint64_t>(rep));
      SelectorConfig sel = cell.selector;
      sel.seed = derive_seed(cell.sim.seed ^ cell.selector.seed, StreamTag::Selector,
                             static_cast<std::uint64_t>(rep));
      sel.jobs = 1;
      std::vector<Index> chosen;
      if (cell.score == ImportanceKind::SelectionFrequency) {
        chosen = run(data.X, data.y, sel).selected;
      } else {
        chosen = select_with_alt_score(data.X, data.y, sel, cell.score);
      }
      slots[static_cast<std::size_t>(rep)] = metrics(chosen, data.support, sel.q);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(rep)] = e.what();
    }
  });

  CellResult out;
  out.cell = cell;
  Index failures = 0;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k]) {
      out.records.push_back(*slots[k]);
    } else {
      ++failures;
      out.errors.push_back("replication " + std::to_string(k) + ": " + errors[k]);
    }
  }
  out.summary = aggregate(out.records);
  out.summary.failures = failures;
  out.summary.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<CellResult> run_experiment(std::span<const BenchCell> cells, int jobs) {
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (const auto& cell : cells) results.push_back(run_cell(cell, jobs));
  return results;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const CellResult> results, bool timing) {
  out << "n,p,s_size,theta,design,rho,component,seed,replications,kernel,kernel_scale,L,q,"
         "filter,score,r,tau,completed,failures,"
         "fdr,fdr_se,mfdr,power,power_se,mean_selected,runtime_s\n";
  for (const auto& res : results) {
    const auto& s = res.cell.sim;
    const auto& c = res.cell.selector;
    const auto& m = res.summary;
    out << s.n << ',' << s.p << ',' << s.s_size << ',' << fmt(s.theta) << ','
        << to_string(s.design) << ',' << fmt(s.rho) << ',' << to_string(s.component) << ','
        << s.seed << ',' << s.replications << ',' << to_string(c.kernel.family) << ','
        << fmt(c.kernel.scale) << ',' << c.L << ',' << fmt(c.q) << ',' << to_string(c.filter)
        << ',' << to_string(res.cell.score) << ',' << (c.r ? std::to_string(*c.r) : "tuned")
        << ',' << (c.tau ? fmt(*c.tau) : "tuned") << ',' << m.completed << ',' << m.failures
        << ',' << fmt(m.fdr) << ',' << fmt(m.fdr_se) << ',' << fmt(m.mfdr) << ','
        << fmt(m.power) << ',' << fmt(m.power_se) << ',' << fmt(m.mean_selected) << ','
        << (timing ? fmt(m.runtime_s) : std::string("0")) << '\n';
  }
}

}  // namespace kknock
