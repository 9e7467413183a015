#pragma once

#include "biopsim/json_util.hpp"
#include "biopsim/simkit.hpp"
#include "biopsim/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace biopsim {

struct TableRow {
  std::string metric;
  std::string procedure;
  stats::Descriptives summary;
  std::optional<stats::TestResult> test;
};

struct ComparisonReport {
  std::string mode_a;
  std::string mode_b;
  std::size_t n_pairs = 0;
  std::vector<TableRow> table2;  // accuracy: paired t on zone distances
  std::vector<TableRow> table3;  // one-factor ANOVA, target-zone distances by location
  std::vector<TableRow> table4;  // same for entry zone
  std::vector<TableRow> table5;  // reproducibility: squared deviation from mean
  std::vector<TableRow> table6;  // dispersion: volume per biopsy, single-coverage fraction
};

inline constexpr std::size_t kPaperPairCount = 158;

/// Tables comparing the first two modes of the dataset. Rows whose metric ends in
/// "_subsample158" repeat the paired analyses on a seeded random subset of 158 pairs.
/// ANOVA metrics named "*_diff_by_*" group the per-pair differences (mode_a − mode_b);
/// "*_raw_<mode>_by_*" group that mode's raw distances.
/// Throws UnpairedData when an (operator, station) lacks either mode.
ComparisonReport compare_modes(const ExperimentDataset& ds);

Json report_to_json(const ComparisonReport& r);

/// CSV with header metric,n,procedure,mean,sd,median,iqr,statistic,p,significant.
std::string table_csv(const std::vector<TableRow>& rows);

/// One row per biopsy: operator_id,mode,side,level,position,entry_error_mm,target_error_mm,missed,flagged.
std::string long_format_csv(const ExperimentDataset& ds);

}  // namespace biopsim
