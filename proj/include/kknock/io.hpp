#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kknock/common.hpp"
#include "kknock/selector.hpp"
#include "kknock/simbench.hpp"
#include "kknock/tuning.hpp"

namespace kknock {

/// Header row x1,...,xp,y then one observation per row. The last column
/// is the response.
struct CsvData {
  std::vector<std::string> header;
  Matrix X;
  Vector y;
};

/// Throws DataError naming the offending row/column for malformed or
/// non-finite cells. Rows are counted from 1 with the header as row 1.
CsvData parse_csv(std::istream& in);
CsvData read_csv(const std::filesystem::path& path);

/// Values are written with shortest round-trip formatting.
void write_csv(std::ostream& out, const Matrix& X, const Vector& y);
void write_csv(const std::filesystem::path& path, const Matrix& X, const Vector& y);

std::string format_double(double v);

nlohmann::json config_to_json(const SelectorConfig& config);
/// Index arrays are written 1-based to match the x1..xp header.
nlohmann::json result_to_json(const SelectionResult& result, const SelectorConfig& config,
                              bool timing = true);
nlohmann::json tune_report_to_json(const TuneReport& report);
TuneReport tune_report_from_json(const nlohmann::json& j);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& config);
/// Applies recognized keys on top of `base`.
SelectorConfig selector_config_from_json(const nlohmann::json& j, SelectorConfig base = {});
nlohmann::json truth_to_json(const SimDataset& data, const SimConfig& config);

/// Bench manifest:
///   { "selector": {...}, "base": {SimConfig...},
///     "sweep": { key: [values...] },  "cells": [ {overrides...} ] }
/// Sweep keys may name SimConfig or selector fields; the cartesian product
/// is taken in key order. Explicit "cells" entries override "base".
std::vector<BenchCell> parse_manifest(const nlohmann::json& manifest);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace kknock
