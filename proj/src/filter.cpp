#include <algorithm>
#include <cmath>

#include "kknock/selector.hpp"

namespace kknock {

std::string to_string(FilterKind kind) {
  return kind == FilterKind::KnockoffsPlus ? "knockoffs_plus" : "knockoffs";
}

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "knockoffs") return FilterKind::Knockoffs;
  if (name == "knockoffs_plus" || name == "plus") return FilterKind::KnockoffsPlus;
  throw ConfigError("unknown filter '" + std::string(name) + "'");
}

std::string to_string(ImportanceKind kind) {
  switch (kind) {
    case ImportanceKind::SelectionFrequency:
      return "kko";
    case ImportanceKind::CoefDiff:
      return "cd";
    case ImportanceKind::LogCoefDiff:
      return "logcd";
    case ImportanceKind::SignedMax:
      return "sm";
  }
  return "unknown";
}

ImportanceKind parse_importance_kind(std::string_view name) {
  if (name == "kko") return ImportanceKind::SelectionFrequency;
  if (name == "cd") return ImportanceKind::CoefDiff;
  if (name == "logcd") return ImportanceKind::LogCoefDiff;
  if (name == "sm") return ImportanceKind::SignedMax;
  throw ConfigError("unknown importance score '" + std::string(name) +
                    "' (expected kko, cd, logcd or sm)");
}

std::vector<double> SelectionFrequencies::pi_hat() const {
  std::vector<double> out(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    out[j] = static_cast<double>(counts[j]) / static_cast<double>(n_reps);
  }
  return out;
}

SelectionFrequencies selection_frequencies(std::span<const std::vector<Index>> reps,
                                           Index n_slots) {
  if (reps.empty()) throw ConfigError("selection frequencies need at least one replication");
  SelectionFrequencies freq;
  freq.counts.assign(static_cast<std::size_t>(n_slots), 0);
  freq.n_reps = static_cast<Index>(reps.size());
  for (const auto& rep : reps) {
    for (Index j : rep) {
      if (j < 0 || j >= n_slots) throw ConfigError("replication slot out of range");
      ++freq.counts[static_cast<std::size_t>(j)];
    }
  }
  return freq;
}

Vector importance_scores(const SelectionFrequencies& freq) {
  if (freq.n_slots() % 2 != 0) {
    throw ConfigError("importance scores need an even number of slots");
  }
  const Index p = freq.n_slots() / 2;
  Vector delta(p);
  const auto L = static_cast<double>(freq.n_reps);
  for (Index j = 0; j < p; ++j) {
    const int diff = freq.counts[static_cast<std::size_t>(j)] -
                     freq.counts[static_cast<std::size_t>(j + p)];
    delta(j) = static_cast<double>(diff) / L;
  }
  return delta;
}

double knockoff_threshold(std::span<const double> delta, double q, FilterKind filter) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("q must lie in [0, 1]");
  const int offset = filter == FilterKind::KnockoffsPlus ? 1 : 0;

  std::vector<double> sorted(delta.begin(), delta.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> candidates;
  candidates.reserve(sorted.size());
  for (double d : sorted) {
    if (d != 0.0) candidates.push_back(std::abs(d));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto total = static_cast<long>(sorted.size());
  for (double t : candidates) {
    const long neg = std::upper_bound(sorted.begin(), sorted.end(), -t) - sorted.begin();
    const long pos = total - (std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const double ratio = static_cast<double>(neg + offset) /
                         static_cast<double>(std::max<long>(1, pos));
    if (ratio <= q) return t;
  }
  return kInfiniteThreshold;
}

double knockoff_threshold(const Vector& delta, double q, FilterKind filter) {
  return knockoff_threshold(std::span<const double>(delta.data(), static_cast<std::size_t>(delta.size())),
                            q, filter);
}

std::vector<Index> select(const Vector& delta, double threshold) {
  std::vector<Index> out;
  for (Index j = 0; j < delta.size(); ++j) {
    if (delta(j) >= threshold) out.push_back(j);
  }
  return out;
}

}  // namespace kknock
