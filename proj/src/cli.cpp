#include "kknock/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "kknock/io.hpp"
#include "kknock/selector.hpp"
#include "kknock/simbench.hpp"
#include "kknock/tuning.hpp"

namespace kknock {

namespace fs = std::filesystem;

namespace {

struct SelectorFlags {
  double q = 0.2;
  Index L = 100;
  std::string kernel = "laplacian";
  double kernel_scale = 1.0;
  std::uint64_t seed = 0;
  Index r = 0;
  bool tune_r = false;
  std::vector<Index> xi{2, 3, 4};
  double tau = 0.0;
  bool tune_tau = false;
  bool retune_tau = false;
  bool plus = false;
  std::string knockoff = "second-order";
  double ridge = 0.0;
  int jobs = 0;
  Index pilot_L = 20;
  Index folds = 5;
  Index tau_grid_size = 30;
  double subsample_fraction = 0.5;
  bool shared_features = false;
  int max_iter = 5000;
  double tol = 1e-6;

  void attach(CLI::App& app) {
    app.add_option("--q", q, "target FDR level in [0,1]")->capture_default_str();
    app.add_option("--L", L, "number of subsampling replications")->capture_default_str();
    app.add_option("--kernel", kernel, "kernel family: laplacian | gaussian | cauchy")
        ->capture_default_str();
    app.add_option("--kernel-scale", kernel_scale, "kernel scale b > 0")->capture_default_str();
    app.add_option("--seed", seed, "master random seed")->capture_default_str();
    app.add_option("--r,--features", r, "random features per variable (fixes r)");
    app.add_flag("--tune-r", tune_r, "choose r from the candidate set (default when --r absent)");
    app.add_option("--xi", xi, "candidate feature counts for r tuning")->capture_default_str();
    app.add_option("--tau", tau, "group-lasso penalty (fixes tau)");
    app.add_flag("--tune-tau", tune_tau, "choose tau by cross-validated BIC (default when --tau absent)");
    app.add_flag("--retune-tau-each-rep", retune_tau, "re-tune tau inside every replication");
    app.add_flag("--plus", plus, "use the knockoff+ threshold");
    app.add_option("--knockoff", knockoff, "knockoff construction")
        ->check(CLI::IsMember({"second-order"}))
        ->capture_default_str();
    app.add_option("--ridge", ridge, "covariance ridge override (default: automatic)");
    app.add_option("--jobs", jobs, "parallel workers, 0 = all cores")->capture_default_str();
    app.add_option("--pilot-L", pilot_L, "pilot replications per candidate r")->capture_default_str();
    app.add_option("--folds", folds, "cross-validation folds for tau")->capture_default_str();
    app.add_option("--tau-grid-size", tau_grid_size, "points on the tau grid")->capture_default_str();
    app.add_option("--subsample-fraction", subsample_fraction, "subsample size as a fraction of n")
        ->capture_default_str();
    app.add_flag("--shared-features", shared_features,
                 "knockoff slots reuse the frequencies of their originals");
    app.add_option("--max-iter", max_iter, "solver iteration cap")->capture_default_str();
    app.add_option("--tol", tol, "solver KKT tolerance")->capture_default_str();
  }

  // One instance is attached to several verbs, so presence is read from the
  // verb that actually ran.
  SelectorConfig build(const CLI::App& cmd) const {
    const bool has_r = cmd.get_option("--r")->count() > 0;
    const bool has_tau = cmd.get_option("--tau")->count() > 0;
    const bool has_ridge = cmd.get_option("--ridge")->count() > 0;
    if (has_r && tune_r) throw ConfigError("--r and --tune-r are mutually exclusive");
    if (has_tau && tune_tau) {
      throw ConfigError("--tau and --tune-tau are mutually exclusive");
    }
    SelectorConfig c;
    c.q = q;
    c.L = L;
    c.kernel = make_kernel(parse_kernel_family(kernel), kernel_scale);
    c.seed = seed;
    if (has_r) c.r = r;
    c.xi = xi;
    if (has_tau) c.tau = tau;
    c.retune_tau_each_rep = retune_tau;
    c.filter = plus ? FilterKind::KnockoffsPlus : FilterKind::Knockoffs;
    if (has_ridge) c.ridge = ridge;
    c.jobs = jobs;
    c.pilot_L = pilot_L;
    c.folds = folds;
    c.tau_grid_size = tau_grid_size;
    c.replication.subsample_fraction = subsample_fraction;
    c.replication.shared_features = shared_features;
    c.replication.solver.max_iter = max_iter;
    c.replication.solver.tol = tol;
    c.validate();
    return c;
  }
};

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kknock: kernel knockoffs variable selection for additive models", "kknock"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "print help for every verb");

  SelectorFlags sel;
  std::string data_path;
  std::string select_out = "result.json";
  std::string tune_out = "-";
  std::string sim_out = "data.csv";
  std::string bench_out = "results.csv";
  bool no_timing = false;

  auto* select_cmd = app.add_subcommand("select", "run the selection procedure on a CSV dataset");
  select_cmd->add_option("--data", data_path, "input CSV (header x1..xp,y)")->required();
  select_cmd->add_option("--out", select_out, "output JSON path, - for stdout")
      ->capture_default_str();
  select_cmd->add_flag("--no-timing", no_timing, "write runtime_s as 0");
  sel.attach(*select_cmd);

  auto* tune_cmd = app.add_subcommand("tune", "tune r and tau and print the tuning report");
  tune_cmd->add_option("--data", data_path, "input CSV (header x1..xp,y)")->required();
  tune_cmd->add_option("--out", tune_out, "output JSON path, - for stdout")->capture_default_str();
  sel.attach(*tune_cmd);

  std::string config_path;
  std::string truth_path;
  std::uint64_t rep = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "generate one synthetic dataset");
  sim_cmd->add_option("--config", config_path, "simulation config JSON (defaults if absent)");
  sim_cmd->add_option("--out", sim_out, "output CSV path")->capture_default_str();
  sim_cmd->add_option("--truth", truth_path, "truth sidecar path (default: truth.json beside --out)");
  sim_cmd->add_option("--rep", rep, "dataset index within the configuration")->capture_default_str();

  std::string manifest_path;
  int bench_jobs = 0;
  auto* bench_cmd = app.add_subcommand("bench", "run a Monte-Carlo experiment manifest");
  bench_cmd->add_option("--manifest", manifest_path, "experiment manifest JSON")->required();
  bench_cmd->add_option("--out", bench_out, "output CSV path")->capture_default_str();
  bench_cmd->add_option("--jobs", bench_jobs, "parallel workers, 0 = all cores")
      ->capture_default_str();
  bench_cmd->add_flag("--no-timing", no_timing, "write runtime_s columns as 0");

  auto* version_cmd = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitConfig;
  }

  try {
    if (version_cmd->parsed()) {
      out << "kknock " << kVersion << " (schema_version " << kSchemaVersion << ")\n";
      return kExitOk;
    }

    if (select_cmd->parsed()) {
      const SelectorConfig config = sel.build(*select_cmd);
      const CsvData data = read_csv(data_path);
      const SelectionResult res = run(data.X, data.y, config);
      write_text(select_out, result_to_json(res, config, !no_timing).dump(2) + "\n", out);
      return kExitOk;
    }

    if (tune_cmd->parsed()) {
      SelectorConfig config = sel.build(*tune_cmd);
      const CsvData data = read_csv(data_path);
      const Matrix X_aug = augmented_predictors(data.X, config);
      const TuneReport report = tune(X_aug, data.y, config);
      write_text(tune_out, tune_report_to_json(report).dump(2) + "\n", out);
      return kExitOk;
    }

    if (sim_cmd->parsed()) {
      const SimConfig config =
          config_path.empty() ? SimConfig{} : sim_config_from_json(read_json(config_path));
      config.validate();
      const SimDataset ds = simulate(config, rep);
      write_csv(fs::path(sim_out), ds.X, ds.y);
      if (truth_path.empty()) truth_path = (fs::path(sim_out).parent_path() / "truth.json").string();
      write_text(truth_path, truth_to_json(ds, config).dump(2) + "\n", out);
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      const auto cells = parse_manifest(read_json(manifest_path));
      const auto results = run_experiment(cells, bench_jobs);
      for (const auto& r : results) {
        for (const auto& e : r.errors) err << "warning: replication failed: " << e << '\n';
      }
      std::ofstream f(bench_out);
      if (!f) throw ConfigError("cannot write " + bench_out);
      write_results_csv(f, results, !no_timing);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitConfig;
}

int parse_and_dispatch(int argc, const char* const* argv) {
  return parse_and_dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace kknock
