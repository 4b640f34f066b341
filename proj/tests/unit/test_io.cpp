#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "kknock/io.hpp"

using namespace kknock;

TEST(Csv, ParsesHeaderAndResponse) {
  std::istringstream in("x1,x2,y\n1.5,-2,3\n0, 4e-1 ,5\n\n");
  const auto data = parse_csv(in);
  EXPECT_EQ(data.header, (std::vector<std::string>{"x1", "x2", "y"}));
  ASSERT_EQ(data.X.rows(), 2);
  ASSERT_EQ(data.X.cols(), 2);
  EXPECT_EQ(data.X(0, 1), -2.0);
  EXPECT_EQ(data.X(1, 1), 0.4);
  EXPECT_EQ(data.y(1), 5.0);
}

TEST(Csv, NanNamesRowAndColumn) {
  std::istringstream in("x1,x2,y\n1,2,3\n1,nan,3\n");
  try {
    parse_csv(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

TEST(Csv, Malformed) {
  std::istringstream ragged("x1,y\n1,2,3\n");
  EXPECT_THROW(parse_csv(ragged), DataError);
  std::istringstream text("x1,y\n1,abc\n");
  EXPECT_THROW(parse_csv(text), DataError);
  std::istringstream inf("x1,y\ninf,1\n");
  EXPECT_THROW(parse_csv(inf), DataError);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), DataError);
  std::istringstream header_only("x1,y\n");
  EXPECT_THROW(parse_csv(header_only), DataError);
  std::istringstream one_col("y\n1\n");
  EXPECT_THROW(parse_csv(one_col), DataError);
}

TEST(Csv, RoundTripIsBitExact) {
  RngStream rng(1);
  Matrix X(20, 3);
  Vector y(20);
  for (Index i = 0; i < 20; ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(j * 5 - 5));
    y(i) = rng.normal() * 1e7;
  }
  X(0, 0) = 0.1;
  X(1, 0) = -0.0;
  X(2, 0) = 5e-324;
  std::stringstream buf;
  write_csv(buf, X, y);
  const auto back = parse_csv(buf);
  EXPECT_EQ(back.header, (std::vector<std::string>{"x1", "x2", "x3", "y"}));
  EXPECT_TRUE((back.X.array() == X.array()).all());
  EXPECT_TRUE((back.y.array() == y.array()).all());
}

TEST(Json, ResultRecordShape) {
  SelectionResult res;
  res.freq.n_reps = 4;
  res.freq.counts = {4, 1, 0, 0};
  res.delta = Vector(2);
  res.delta << 1.0, 0.25;
  res.threshold = kInfiniteThreshold;
  res.q = 0.2;
  res.diagnostics.runtime_s = 1.25;
  SelectorConfig cfg;
  auto j = result_to_json(res, cfg);
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(j["threshold"], "inf");
  EXPECT_EQ(j["pi_hat"].size(), 4u);
  EXPECT_EQ(j["diagnostics"]["runtime_s"], 1.25);
  EXPECT_TRUE(j["config"]["r"].is_string());
  EXPECT_EQ(result_to_json(res, cfg, false)["diagnostics"]["runtime_s"], 0.0);

  res.threshold = 0.25;
  res.selected = {0, 1};
  j = result_to_json(res, cfg);
  EXPECT_EQ(j["threshold"], 0.25);
  EXPECT_EQ(j["selected"], (nlohmann::json{1, 2}));
}

TEST(Json, TuneReportLossless) {
  TuneReport rep;
  rep.candidates = {2, 3};
  rep.sigma_r = {0.1 / 3.0, 0.2};
  rep.objective = {1.0 / 7.0, -0.5};
  rep.tau_for_candidate = {1e-300, 3.3};
  rep.chosen_r = 3;
  rep.chosen_tau = 3.3;
  TauTuneReport t;
  t.r = 3;
  t.n = 10;
  t.folds = 5;
  t.grid = {3.3, 1.1};
  t.rss = {10.0 / 3.0, 2.0};
  t.active = {0, 2};
  t.bic = {std::log(10.0 / 3.0), 0.7};
  t.chosen_tau = 3.3;
  rep.tau_reports = {t};
  rep.tau_grid = t.grid;
  rep.bic = t.bic;
  const auto text = tune_report_to_json(rep).dump();
  const auto back = tune_report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.sigma_r, rep.sigma_r);
  EXPECT_EQ(back.objective, rep.objective);
  EXPECT_EQ(back.tau_for_candidate, rep.tau_for_candidate);
  EXPECT_EQ(back.tau_reports[0].rss, t.rss);
  EXPECT_EQ(back.tau_reports[0].bic, t.bic);
  EXPECT_EQ(back.tau_reports[0].active, t.active);
  EXPECT_EQ(back.chosen_r, 3);
  EXPECT_EQ(tune_report_to_json(back).dump(), text);
}

TEST(Json, SimConfigRoundTrip) {
  SimConfig c;
  c.n = 123;
  c.design = Design::Uniform;
  c.component = ComponentFamily::Mixed;
  c.theta = 0.1;
  const auto back = sim_config_from_json(sim_config_to_json(c));
  EXPECT_EQ(back.n, 123);
  EXPECT_EQ(back.design, Design::Uniform);
  EXPECT_EQ(back.component, ComponentFamily::Mixed);
  EXPECT_EQ(back.theta, 0.1);
  EXPECT_THROW(sim_config_from_json(nlohmann::json{{"n", "many"}}), ConfigError);
  EXPECT_THROW(sim_config_from_json(nlohmann::json{{"design", "gamma"}}), ConfigError);
}

TEST(Manifest, SweepIsCartesian) {
  const auto m = nlohmann::json::parse(R"({
    "selector": {"q": 0.1, "L": 20, "score": "cd"},
    "base": {"p": 10, "s_size": 3, "replications": 2},
    "sweep": {"theta": [1, 10, 100], "kernel": ["laplacian", "gaussian"]}
  })");
  const auto cells = parse_manifest(m);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].sim.p, 10);
  EXPECT_EQ(cells[0].selector.q, 0.1);
  EXPECT_EQ(cells[0].score, ImportanceKind::CoefDiff);
  int gaussian = 0;
  for (const auto& c : cells) gaussian += c.selector.kernel.family == KernelFamily::Gaussian;
  EXPECT_EQ(gaussian, 3);
}

TEST(Manifest, ExplicitCells) {
  const auto m = nlohmann::json::parse(R"({
    "base": {"n": 100, "p": 10, "s_size": 2},
    "cells": [{"n": 200}, {"n": 300, "r": 2, "tau": 0.5, "plus": true}]
  })");
  const auto cells = parse_manifest(m);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].sim.n, 200);
  EXPECT_EQ(cells[1].sim.n, 300);
  EXPECT_EQ(cells[1].selector.r, 2);
  EXPECT_EQ(cells[1].selector.filter, FilterKind::KnockoffsPlus);
  EXPECT_FALSE(cells[0].selector.r.has_value());
}

TEST(Manifest, Errors) {
  EXPECT_THROW(parse_manifest(nlohmann::json::parse(R"({"sweep": {"n": []}})")), ConfigError);
  EXPECT_THROW(parse_manifest(nlohmann::json::parse(R"({"selector": {"q": 2}})")), ConfigError);
  EXPECT_THROW(parse_manifest(nlohmann::json::parse(R"({"base": {"s_size": 99, "p": 5}})")), ConfigError);
}

TEST(Manifest, ShippedManifestsParse) {
  namespace fs = std::filesystem;
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(KKNOCK_MANIFEST_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++files;
    std::vector<BenchCell> cells;
    EXPECT_NO_THROW(cells = parse_manifest(read_json(entry.path()))) << entry.path();
    EXPECT_FALSE(cells.empty()) << entry.path();
  }
  EXPECT_GE(files, 10u);
}
