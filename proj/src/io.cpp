#include "kknock/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kknock {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvData parse_csv(std::istream& in) {
  CsvData data;
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty");
  data.header = split(line);
  const std::size_t cols = data.header.size();
  if (cols < 2) throw DataError("CSV needs at least one predictor column and a response");

  std::vector<std::vector<double>> rows;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols) {
      throw DataError("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(cols));
    }
    std::vector<double> values(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      const bool parsed = ec == std::errc() && ptr == cell.data() + cell.size() && !cell.empty();
      if (!parsed || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(row_no) + ", column " + std::to_string(c + 1) +
                        " ('" + data.header[c] + "'): value '" + cell +
                        "' is not a finite number");
      }
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("CSV has no observations");

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(cols - 1);
  data.X.resize(n, p);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) data.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    data.y(i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
  }
  return data;
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  return parse_csv(in);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Matrix& X, const Vector& y) {
  for (Index j = 0; j < X.cols(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) out << format_double(X(i, j)) << ',';
    out << format_double(y(i)) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Matrix& X, const Vector& y) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_csv(out, X, y);
}

namespace {

json one_based(std::span<const Index> idx) {
  json arr = json::array();
  for (Index j : idx) arr.push_back(j + 1);
  return arr;
}

json threshold_json(double t) {
  if (std::isinf(t)) return "inf";
  return t;
}

}  // namespace

json config_to_json(const SelectorConfig& c) {
  json j;
  j["q"] = c.q;
  j["L"] = c.L;
  j["kernel"] = to_string(c.kernel.family);
  j["kernel_scale"] = c.kernel.scale;
  j["r"] = c.r ? json(*c.r) : json("tuned");
  j["xi"] = c.xi;
  j["tau"] = c.tau ? json(*c.tau) : json("tuned");
  j["retune_tau_each_rep"] = c.retune_tau_each_rep;
  j["filter"] = to_string(c.filter);
  j["seed"] = c.seed;
  j["knockoff"] = "second-order";
  j["ridge"] = c.ridge ? json(*c.ridge) : json("auto");
  j["pilot_L"] = c.pilot_L;
  j["tau_grid_size"] = c.tau_grid_size;
  j["tau_grid_ratio"] = c.tau_grid_ratio;
  j["folds"] = c.folds;
  j["subsample_fraction"] = c.replication.subsample_fraction;
  j["shared_features"] = c.replication.shared_features;
  j["max_iter"] = c.replication.solver.max_iter;
  j["tol"] = c.replication.solver.tol;
  return j;
}

json result_to_json(const SelectionResult& res, const SelectorConfig& config, bool timing) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["selected"] = one_based(res.selected);
  j["delta"] = std::vector<double>(res.delta.data(), res.delta.data() + res.delta.size());
  j["pi_hat"] = res.freq.pi_hat();
  j["threshold"] = threshold_json(res.threshold);
  j["q"] = res.q;
  j["filter"] = to_string(res.filter);
  j["config"] = config_to_json(config);
  json refit;
  refit["selected"] = one_based(res.refit.selected);
  refit["intercept"] = res.refit.intercept;
  refit["coef"] = std::vector<double>(res.refit.coef.data(), res.refit.coef.data() + res.refit.coef.size());
  refit["r"] = res.diagnostics.chosen_r;
  j["refit"] = refit;
  json diag;
  diag["converged_frac"] = res.diagnostics.converged_frac;
  diag["runtime_s"] = timing ? res.diagnostics.runtime_s : 0.0;
  diag["chosen_r"] = res.diagnostics.chosen_r;
  diag["chosen_tau"] = res.diagnostics.chosen_tau;
  diag["rep_converged"] = res.diagnostics.rep_converged;
  if (res.tau_per_rep) diag["tau_per_rep"] = *res.tau_per_rep;
  j["diagnostics"] = diag;
  return j;
}

namespace {

json tau_report_to_json(const TauTuneReport& t) {
  return json{{"r", t.r},       {"n", t.n},           {"folds", t.folds},
              {"grid", t.grid}, {"rss", t.rss},       {"active", t.active},
              {"bic", t.bic},   {"chosen_tau", t.chosen_tau}, {"all_empty", t.all_empty}};
}

TauTuneReport tau_report_from_json(const json& j) {
  TauTuneReport t;
  t.r = j.at("r").get<Index>();
  t.n = j.at("n").get<Index>();
  t.folds = j.at("folds").get<Index>();
  t.grid = j.at("grid").get<std::vector<double>>();
  t.rss = j.at("rss").get<std::vector<double>>();
  t.active = j.at("active").get<std::vector<Index>>();
  t.bic = j.at("bic").get<std::vector<double>>();
  t.chosen_tau = j.at("chosen_tau").get<double>();
  t.all_empty = j.at("all_empty").get<bool>();
  return t;
}

}  // namespace

json tune_report_to_json(const TuneReport& rep) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["candidates"] = rep.candidates;
  j["sigma_r"] = rep.sigma_r;
  j["objective"] = rep.objective;
  j["tau_for_candidate"] = rep.tau_for_candidate;
  j["chosen_r"] = rep.chosen_r;
  j["tau_grid"] = rep.tau_grid;
  j["bic"] = rep.bic;
  j["chosen_tau"] = rep.chosen_tau;
  json taus = json::array();
  for (const auto& t : rep.tau_reports) taus.push_back(tau_report_to_json(t));
  j["tau_reports"] = taus;
  return j;
}

TuneReport tune_report_from_json(const json& j) {
  TuneReport rep;
  rep.candidates = j.at("candidates").get<std::vector<Index>>();
  rep.sigma_r = j.at("sigma_r").get<std::vector<double>>();
  rep.objective = j.at("objective").get<std::vector<double>>();
  rep.tau_for_candidate = j.at("tau_for_candidate").get<std::vector<double>>();
  rep.chosen_r = j.at("chosen_r").get<Index>();
  rep.tau_grid = j.at("tau_grid").get<std::vector<double>>();
  rep.bic = j.at("bic").get<std::vector<double>>();
  rep.chosen_tau = j.at("chosen_tau").get<double>();
  for (const auto& t : j.at("tau_reports")) rep.tau_reports.push_back(tau_report_from_json(t));
  return rep;
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* const kSimKeys[] = {"n", "p", "s_size", "theta", "design", "rho",
                                "component", "seed", "replications"};

bool is_sim_key(const std::string& k) {
  for (const char* s : kSimKeys) {
    if (k == s) return true;
  }
  return false;
}

void apply_sim(const json& j, SimConfig& c) {
  read_if(j, "n", c.n);
  read_if(j, "p", c.p);
  read_if(j, "s_size", c.s_size);
  read_if(j, "theta", c.theta);
  read_if(j, "rho", c.rho);
  read_if(j, "seed", c.seed);
  read_if(j, "replications", c.replications);
  if (j.contains("design")) c.design = parse_design(j.at("design").get<std::string>());
  if (j.contains("component")) {
    c.component = parse_component_family(j.at("component").get<std::string>());
  }
}

}  // namespace

SimConfig sim_config_from_json(const json& j) {
  try {
    SimConfig c;
    apply_sim(j, c);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad simulation config: ") + e.what());
  }
}

json sim_config_to_json(const SimConfig& c) {
  return json{{"n", c.n},
              {"p", c.p},
              {"s_size", c.s_size},
              {"theta", c.theta},
              {"design", to_string(c.design)},
              {"rho", c.rho},
              {"component", to_string(c.component)},
              {"seed", c.seed},
              {"replications", c.replications}};
}

SelectorConfig selector_config_from_json(const json& j, SelectorConfig c) {
  try {
    read_if(j, "q", c.q);
    read_if(j, "L", c.L);
    if (j.contains("kernel")) c.kernel.family = parse_kernel_family(j.at("kernel").get<std::string>());
    read_if(j, "kernel_scale", c.kernel.scale);
    if (j.contains("r")) {
      if (j.at("r").is_string()) c.r.reset();
      else c.r = j.at("r").get<Index>();
    }
    read_if(j, "xi", c.xi);
    if (j.contains("tau")) {
      if (j.at("tau").is_string()) c.tau.reset();
      else c.tau = j.at("tau").get<double>();
    }
    read_if(j, "retune_tau_each_rep", c.retune_tau_each_rep);
    if (j.contains("filter")) c.filter = parse_filter_kind(j.at("filter").get<std::string>());
    if (j.contains("plus") && j.at("plus").get<bool>()) c.filter = FilterKind::KnockoffsPlus;
    if (j.contains("selector_seed")) c.seed = j.at("selector_seed").get<std::uint64_t>();
    if (j.contains("ridge")) {
      if (j.at("ridge").is_string()) c.ridge.reset();
      else c.ridge = j.at("ridge").get<double>();
    }
    read_if(j, "pilot_L", c.pilot_L);
    read_if(j, "tau_grid_size", c.tau_grid_size);
    read_if(j, "tau_grid_ratio", c.tau_grid_ratio);
    read_if(j, "folds", c.folds);
    read_if(j, "subsample_fraction", c.replication.subsample_fraction);
    read_if(j, "shared_features", c.replication.shared_features);
    read_if(j, "max_iter", c.replication.solver.max_iter);
    read_if(j, "tol", c.replication.solver.tol);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad selector config: ") + e.what());
  }
}

json truth_to_json(const SimDataset& data, const SimConfig& config) {
  json comps = json::array();
  for (const auto& f : data.components) {
    comps.push_back(json{{"family", to_string(f.family)}, {"u", f.u}, {"c", f.c}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"support", one_based(data.support)},
              {"theta_j", data.coefficients},
              {"components", comps},
              {"config", sim_config_to_json(config)}};
}

std::vector<BenchCell> parse_manifest(const json& manifest) {
  try {
    const json selector_json = manifest.value("selector", json::object());
    const json base_json = manifest.value("base", json::object());
    ImportanceKind base_score = ImportanceKind::SelectionFrequency;
    if (selector_json.contains("score")) {
      base_score = parse_importance_kind(selector_json.at("score").get<std::string>());
    }

    std::vector<json> overrides;
    if (manifest.contains("cells")) {
      for (const auto& c : manifest.at("cells")) overrides.push_back(c);
    } else {
      overrides.push_back(json::object());
    }

    // Cartesian product of the sweep, applied to each override.
    std::vector<json> sweep_points{json::object()};
    if (manifest.contains("sweep")) {
      for (const auto& [key, values] : manifest.at("sweep").items()) {
        if (!values.is_array() || values.empty()) {
          throw ConfigError("sweep key '" + key + "' needs a nonempty array");
        }
        std::vector<json> next;
        for (const auto& pt : sweep_points) {
          for (const auto& v : values) {
            json q = pt;
            q[key] = v;
            next.push_back(q);
          }
        }
        sweep_points = std::move(next);
      }
    }

    std::vector<BenchCell> cells;
    for (const auto& ov : overrides) {
      for (const auto& pt : sweep_points) {
        json sim_j = base_json;
        json sel_j = selector_json;
        for (const json* layer : {&ov, &pt}) {
          for (const auto& [key, v] : layer->items()) {
            (is_sim_key(key) ? sim_j : sel_j)[key] = v;
          }
        }
        BenchCell cell;
        cell.sim = sim_config_from_json(sim_j);
        cell.selector = selector_config_from_json(sel_j);
        cell.score = sel_j.contains("score")
                         ? parse_importance_kind(sel_j.at("score").get<std::string>())
                         : base_score;
        cells.push_back(std::move(cell));
      }
    }
    return cells;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace kknock
