#include "biopsim/report.hpp"

#include "biopsim/error.hpp"
#include "biopsim/rng.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace biopsim {

namespace {

struct PairedRecord {
  int operator_id;
  StationId station;
  const BiopsyRecord* a;
  const BiopsyRecord* b;
};

std::vector<PairedRecord> pair_records(const ExperimentDataset& ds) {
  std::vector<PairedRecord> pairs;
  for (int op = 0; op < ds.plan.n_operators; ++op) {
    const SessionRecord* sa = ds.find(op, 0);
    const SessionRecord* sb = ds.find(op, 1);
    if (!sa || !sb) throw Error(ErrorCode::UnpairedData, "operator " + std::to_string(op) + " lacks a session");
    for (int s = 0; s < kStationCount; ++s) {
      const StationId st = StationId::from_index(s);
      const auto find = [&](const SessionRecord* sess) -> const BiopsyRecord* {
        for (const auto& b : sess->biopsies) {
          if (b.station == st) return &b;
        }
        return nullptr;
      };
      const BiopsyRecord* ra = find(sa);
      const BiopsyRecord* rb = find(sb);
      if (!ra || !rb) {
        throw Error(ErrorCode::UnpairedData, "operator " + std::to_string(op) + " station " + st.label() + " unpaired");
      }
      pairs.push_back({op, st, ra, rb});
    }
  }
  return pairs;
}

using Getter = double (*)(const BiopsyRecord&);
double target_of(const BiopsyRecord& r) { return r.score.target_error_mm; }
double entry_of(const BiopsyRecord& r) { return r.score.entry_error_mm; }

void paired_rows(std::vector<TableRow>& out, const std::string& metric, const std::string& a,
                 const std::string& b, const std::vector<double>& xa, const std::vector<double>& xb) {
  const stats::TestResult t = stats::paired_t(xa, xb);
  out.push_back({metric, a, stats::describe(xa), t});
  out.push_back({metric, b, stats::describe(xb), t});
}

void reproducibility_rows(std::vector<TableRow>& out, const std::string& metric, const std::string& a,
                          const std::string& b, const std::vector<double>& xa, const std::vector<double>& xb) {
  const stats::ReproducibilityResult r = stats::reproducibility_test(xa, xb);
  out.push_back({metric, a, r.x_sq_dev, r.test});
  out.push_back({metric, b, r.y_sq_dev, r.test});
}

template <typename KeyFn>
void anova_rows(std::vector<TableRow>& out, const std::string& metric, const std::vector<std::string>& labels,
                const std::vector<double>& values, const std::vector<PairedRecord>& pairs, KeyFn key) {
  std::vector<std::vector<double>> groups(labels.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) groups[static_cast<std::size_t>(key(pairs[i].station))].push_back(values[i]);
  const stats::TestResult t = stats::one_way_anova(groups);
  for (std::size_t g = 0; g < labels.size(); ++g) out.push_back({metric, labels[g], stats::describe(groups[g]), t});
}

void location_tables(std::vector<TableRow>& out, const std::string& prefix, const std::string& a,
                     const std::string& b, const std::vector<double>& xa, const std::vector<double>& xb,
                     const std::vector<PairedRecord>& pairs) {
  const std::vector<std::string> levels{"apex", "middle", "base"};
  const std::vector<std::string> positions{"paramedian", "lateral"};
  const auto by_level = [](const StationId& s) { return static_cast<int>(s.level); };
  const auto by_position = [](const StationId& s) { return static_cast<int>(s.position); };
  std::vector<double> diff(xa.size());
  for (std::size_t i = 0; i < xa.size(); ++i) diff[i] = xa[i] - xb[i];
  anova_rows(out, prefix + "_diff_by_level", levels, diff, pairs, by_level);
  anova_rows(out, prefix + "_diff_by_position", positions, diff, pairs, by_position);
  anova_rows(out, prefix + "_raw_" + a + "_by_level", levels, xa, pairs, by_level);
  anova_rows(out, prefix + "_raw_" + b + "_by_level", levels, xb, pairs, by_level);
  anova_rows(out, prefix + "_raw_" + a + "_by_position", positions, xa, pairs, by_position);
  anova_rows(out, prefix + "_raw_" + b + "_by_position", positions, xb, pairs, by_position);
}

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Json row_to_json(const TableRow& r) {
  Json j;
  j["metric"] = r.metric;
  j["procedure"] = r.procedure;
  j["n"] = r.summary.n;
  j["mean"] = r.summary.mean;
  j["sd"] = r.summary.sd;
  j["median"] = r.summary.median;
  j["iqr"] = r.summary.iqr;
  if (r.test) {
    j["test"] = r.test->method;
    j["statistic"] = std::isfinite(r.test->statistic) ? Json(r.test->statistic) : Json("inf");
    if (r.test->df1) j["df1"] = *r.test->df1;
    if (r.test->df2) j["df2"] = *r.test->df2;
    j["p"] = r.test->p_value;
    j["significant"] = r.test->significant;
  }
  return j;
}

}  // namespace

ComparisonReport compare_modes(const ExperimentDataset& ds) {
  if (ds.plan.modes.size() < 2) throw Error(ErrorCode::UnpairedData, "dataset has fewer than two modes");
  ComparisonReport rep;
  rep.mode_a = ds.plan.modes[0];
  rep.mode_b = ds.plan.modes[1];
  const auto pairs = pair_records(ds);
  rep.n_pairs = pairs.size();

  const auto column = [&](const std::vector<PairedRecord>& ps, Getter get, bool first) {
    std::vector<double> v;
    v.reserve(ps.size());
    for (const auto& p : ps) v.push_back(get(first ? *p.a : *p.b));
    return v;
  };

  std::vector<PairedRecord> subset;
  if (pairs.size() > kPaperPairCount) {
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(ds.plan.master_seed, {kPaperPairCount}));
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    idx.resize(kPaperPairCount);
    std::sort(idx.begin(), idx.end());
    for (const std::size_t i : idx) subset.push_back(pairs[i]);
  }

  const std::string& a = rep.mode_a;
  const std::string& b = rep.mode_b;
  const struct {
    const char* name;
    Getter get;
  } metrics[] = {{"target_zone_distance_mm", target_of}, {"entry_zone_distance_mm", entry_of}};
  for (const auto& m : metrics) {
    paired_rows(rep.table2, m.name, a, b, column(pairs, m.get, true), column(pairs, m.get, false));
  }
  if (!subset.empty()) {
    for (const auto& m : metrics) {
      paired_rows(rep.table2, std::string(m.name) + "_subsample158", a, b, column(subset, m.get, true),
                  column(subset, m.get, false));
    }
  }

  const struct {
    const char* name;
    Getter get;
  } sq_metrics[] = {{"target_sq_deviation_mm2", target_of}, {"entry_sq_deviation_mm2", entry_of}};
  for (const auto& m : sq_metrics) {
    reproducibility_rows(rep.table5, m.name, a, b, column(pairs, m.get, true), column(pairs, m.get, false));
  }
  if (!subset.empty()) {
    for (const auto& m : sq_metrics) {
      reproducibility_rows(rep.table5, std::string(m.name) + "_subsample158", a, b, column(subset, m.get, true),
                           column(subset, m.get, false));
    }
  }

  location_tables(rep.table3, "target", a, b, column(pairs, target_of, true), column(pairs, target_of, false), pairs);
  location_tables(rep.table4, "entry", a, b, column(pairs, entry_of, true), column(pairs, entry_of, false), pairs);

  std::vector<double> vol_a, vol_b, single_a, single_b;
  for (const auto& s : ds.sessions) {
    if (s.mode_index == 0) {
      vol_a.push_back(s.coverage.per_biopsy_volume_mm3);
      single_a.push_back(s.coverage.single_fraction);
    } else if (s.mode_index == 1) {
      vol_b.push_back(s.coverage.per_biopsy_volume_mm3);
      single_b.push_back(s.coverage.single_fraction);
    }
  }
  const stats::TestResult vol_test = stats::mann_whitney_u(vol_a, vol_b);
  rep.table6.push_back({"volume_per_biopsy_mm3", a, stats::describe(vol_a), vol_test});
  rep.table6.push_back({"volume_per_biopsy_mm3", b, stats::describe(vol_b), vol_test});
  const stats::TestResult single_test = stats::mann_whitney_u(single_a, single_b);
  rep.table6.push_back({"single_fraction", a, stats::describe(single_a), single_test});
  rep.table6.push_back({"single_fraction", b, stats::describe(single_b), single_test});
  return rep;
}

Json report_to_json(const ComparisonReport& r) {
  Json j;
  j["mode_a"] = r.mode_a;
  j["mode_b"] = r.mode_b;
  j["n_pairs"] = r.n_pairs;
  j["anova_grouping"] = "diff = " + r.mode_a + " - " + r.mode_b + " per paired biopsy; raw = per-mode distances";
  const auto rows = [](const std::vector<TableRow>& t) {
    Json a = Json::array();
    for (const auto& row : t) a.push_back(row_to_json(row));
    return a;
  };
  j["table2"] = rows(r.table2);
  j["table3"] = rows(r.table3);
  j["table4"] = rows(r.table4);
  j["table5"] = rows(r.table5);
  j["table6"] = rows(r.table6);
  return j;
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "metric,n,procedure,mean,sd,median,iqr,statistic,p,significant\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.summary.n << ',' << r.procedure << ',' << fmt_num(r.summary.mean) << ','
        << fmt_num(r.summary.sd) << ',' << fmt_num(r.summary.median) << ',' << fmt_num(r.summary.iqr) << ',';
    if (r.test) {
      out << fmt_num(r.test->statistic) << ',' << fmt_num(r.test->p_value) << ','
          << (r.test->significant ? "true" : "false");
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string long_format_csv(const ExperimentDataset& ds) {
  std::ostringstream out;
  out << "operator_id,mode,side,level,position,entry_error_mm,target_error_mm,missed,flagged\n";
  for (const auto& s : ds.sessions) {
    for (const auto& b : s.biopsies) {
      out << s.operator_id << ',' << s.mode << ',' << to_string(b.station.side) << ','
          << to_string(b.station.level) << ',' << to_string(b.station.position) << ','
          << fmt_num(b.score.entry_error_mm) << ',' << fmt_num(b.score.target_error_mm) << ','
          << (b.score.missed ? "true" : "false") << ',' << (b.flagged ? "true" : "false") << '\n';
    }
  }
  return out.str();
}

}  // namespace biopsim
