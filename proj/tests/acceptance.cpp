// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include "biopsim/dataset_io.hpp"
#include "biopsim/error.hpp"
#include "biopsim/report.hpp"
#include "biopsim/simkit.hpp"
#include "biopsim/stats.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace biopsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ProtocolTemplate& default_tpl() {
  static const ProtocolTemplate t = default_template(make_prostate(kDefaultVolumeCc));
  return t;
}

const TableRow& row(const std::vector<TableRow>& table, const std::string& metric) {
  for (const auto& r : table)
    if (r.metric == metric) return r;
  throw std::runtime_error("missing report row " + metric);
}

Outcome geometry_oracles() {
  Rng rng(20240601);
  double kabsch_worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Point3> p;
    for (int i = 0; i < 5; ++i) p.push_back(30.0 * rng.uniform() * testing::random_unit(rng));
    const RigidTransform t = testing::random_rigid(rng);
    std::vector<Point3> tp;
    for (const auto& q : p) tp.push_back(t.apply(q));
    const RigidTransform c = kabsch_align(tp, p) * t;
    kabsch_worst = std::max({kabsch_worst, (c.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(),
                             c.translation().cwiseAbs().maxCoeff()});
  }

  double ray_worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Ellipsoid e = testing::random_ellipsoid(rng);
    const Point3 aim = e.to_world(e.semi_axes.cwiseProduct(testing::random_unit(rng)) * 0.9 * rng.uniform());
    const Point3 origin = e.center + (e.semi_axes.maxCoeff() + 5 + 40 * rng.uniform()) * testing::random_unit(rng);
    const Vec3 dir = (aim - origin).normalized();
    const auto marched = oracle::marched_entry(origin, dir, e, 0.05);
    if (!marched) return {false, "ray-marching oracle found no entry"};
    ray_worst = std::max(ray_worst, (*marched - ray_ellipsoid_entry(origin, dir, e)).norm());
  }

  double zone_worst = 0;
  const Sphere zone{{2, -1, 4}, 3.5};
  for (int trial = 0; trial < 200; ++trial) {
    const Point3 p = zone.center + 12.0 * rng.uniform() * testing::random_unit(rng);
    zone_worst = std::max(zone_worst, std::abs(sphere_surface_distance(p, zone) - oracle::zone_distance(p, zone)));
  }
  const bool pass = kabsch_worst < 1e-9 && ray_worst < 0.1 && zone_worst < 0.05;
  return {pass, fmt("kabsch max err %.2e (<1e-9), ray vs march %.4f mm (<0.1), zone vs sampling %.4f mm (<0.05)",
                    kabsch_worst, ray_worst, zone_worst)};
}

Outcome voxel_convergence() {
  const double analytic_cyl = std::numbers::pi * kBiopsyCylinderRadiusMm * kBiopsyCylinderRadiusMm * kCoreLengthMm;
  const ProstateModel big = make_prostate(4.0 / 3.0 * std::numbers::pi * 27.0, Vec3(1, 1, 1));
  const MaskVolume big_mask = rasterize_prostate_mask(big, 0.5);
  const BiopsyPath core = make_path({0.1, -0.2, 11.5}, Vec3(0.2, 0.1, 1.0), {});
  const double cyl = rasterize_biopsy_cylinder(core, big_mask).size() * big_mask.geometry().voxel_volume();
  const double cyl_err = std::abs(cyl - analytic_cyl) / analytic_cyl;

  const MaskVolume mask = rasterize_prostate_mask(make_prostate(40.0), 0.5);
  const double gland = mask_volume_mm3(mask);
  const double gland_err = std::abs(gland - 40000.0) / 40000.0;
  return {cyl_err < 0.02 && gland_err < 0.01,
          fmt("cylinder %.1f mm3 vs %.1f (%.2f%% < 2%%), 40 cc mask %.0f mm3 (%.2f%% < 1%%)", cyl, analytic_cyl,
              100 * cyl_err, gland, 100 * gland_err)};
}

Outcome statistics_exactness() {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
  const stats::TestResult t = stats::paired_t(x, y);
  const double t_oracle_p = oracle::t_two_sided(t.statistic, 4);
  const bool t_ok = std::abs(t.statistic - 4.2426) < 1e-4 && *t.df1 == 4 && std::abs(t.p_value - 0.0132) < 1e-3 &&
                    std::abs(t.p_value - t_oracle_p) < 1e-6;

  const std::vector<double> a{1, 2}, b{3, 4};
  const stats::TestResult mw = stats::mann_whitney_u(a, b);
  const double mw_oracle = oracle::mann_whitney_p(a, b);
  const bool mw_ok = mw.statistic == 0.0 && std::abs(mw.p_value - 1.0 / 3.0) < 1e-4 && std::abs(mw.p_value - mw_oracle) < 1e-12;

  const stats::TestResult f = stats::one_way_anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
  const double f_oracle = oracle::f_upper(3.0, 2, 6);
  const bool f_ok = std::abs(f.statistic - 3.0) < 1e-12 && std::abs(f.p_value - f_oracle) < 1e-6;
  return {t_ok && mw_ok && f_ok,
          fmt("t=%.4f df=4 p=%.5f (quadrature %.5f); MW U=0 p=%.4f (enumeration %.4f); F=%.3f p=%.4f (quadrature %.4f)",
              t.statistic, t.p_value, t_oracle_p, mw.p_value, mw_oracle, f.statistic, f.p_value, f_oracle)};
}

struct CalibratedPair {
  OperatorModel a, b;
};

const CalibratedPair& target_calibrated() {
  static const CalibratedPair p{calibrate(default_tpl(), 6.79, ErrorKind::Target, "2D"),
                                calibrate(default_tpl(), 5.1, ErrorKind::Target, "4D")};
  return p;
}

Outcome power_check() {
  const CalibratedPair& target = target_calibrated();
  const CalibratedPair entry{calibrate(default_tpl(), 5.28, ErrorKind::Entry, "2D"),
                             calibrate(default_tpl(), 5.19, ErrorKind::Entry, "4D")};
  const int seeds = 100;
  int target_sig = 0, entry_ns = 0;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentPlan plan;
    plan.master_seed = static_cast<std::uint64_t>(s);
    const ComparisonReport rt = compare_modes(run_experiment(plan, default_tpl(), {target.a, target.b}));
    if (rt.n_pairs != 168) return {false, "expected 168 pairs"};
    target_sig += row(rt.table2, "target_zone_distance_mm").test->p_value < 0.05;
    const ComparisonReport re = compare_modes(run_experiment(plan, default_tpl(), {entry.a, entry.b}));
    entry_ns += !row(re.table2, "entry_zone_distance_mm").test->significant;
  }
  return {target_sig >= 60 && entry_ns >= 90,
          fmt("target test p<0.05 in %d/100 seeds (>=60; calibrated %.2f vs %.2f mm), entry test NS in %d/100 (>=90; "
              "calibrated %.2f vs %.2f mm)",
              target_sig, *target.a.calibrated_mean_error_mm, *target.b.calibrated_mean_error_mm, entry_ns,
              *entry.a.calibrated_mean_error_mm, *entry.b.calibrated_mean_error_mm)};
}

Outcome coverage_plausibility() {
  const CalibratedPair& ops = target_calibrated();
  const int seeds = 100;
  int ns = 0, in_range = 0;
  double vol_lo = 1e9, vol_hi = 0, single_lo = 1, single_hi = 0;
  double session_single_hi = 0, session_vol_lo = 1e9;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentPlan plan;
    plan.master_seed = static_cast<std::uint64_t>(s);
    const ExperimentDataset ds = run_experiment(plan, default_tpl(), {ops.a, ops.b});
    const ComparisonReport r = compare_modes(ds);
    bool ok = true;
    for (const auto& rw : r.table6) {
      if (rw.metric == "volume_per_biopsy_mm3") {
        vol_lo = std::min(vol_lo, rw.summary.mean);
        vol_hi = std::max(vol_hi, rw.summary.mean);
        ok = ok && rw.summary.mean >= 500 && rw.summary.mean <= 2500;
      } else {
        single_lo = std::min(single_lo, rw.summary.mean);
        single_hi = std::max(single_hi, rw.summary.mean);
        ok = ok && rw.summary.mean >= 0.3 && rw.summary.mean <= 0.9;
      }
    }
    for (const auto& sess : ds.sessions) {
      session_single_hi = std::max(session_single_hi, sess.coverage.single_fraction);
      session_vol_lo = std::min(session_vol_lo, sess.coverage.per_biopsy_volume_mm3);
    }
    in_range += ok;
    ns += !row(r.table6, "single_fraction").test->significant;
  }
  return {in_range == seeds && ns >= 90,
          fmt("mode means: volume/biopsy %.0f-%.0f mm3, single_fraction %.3f-%.3f (in range for %d/100 seeds); "
              "MW on single_fraction NS in %d/100 (>=90); single sessions: min volume %.0f, max single %.3f",
              vol_lo, vol_hi, single_lo, single_hi, in_range, ns, session_vol_lo, session_single_hi)};
}

Outcome figure9_scene() {
  const ProstateModel gland = make_prostate(4.0 / 3.0 * std::numbers::pi * 27.0, Vec3(1, 1, 1));
  const MaskVolume mask = rasterize_prostate_mask(gland, 0.5);
  const double gap = 11.3;
  const std::vector<BiopsyPath> paths{make_path({-gap / 2, 0, 11.5}, Vec3::UnitZ(), {}),
                                      make_path({gap / 2, 0, 11.5}, Vec3::UnitZ(), {})};
  const CoverageReport r = coverage_report(paths, mask);
  const Sphere lesion{{0, 0, 0}, 5.0};
  const double needle_radius = 0.6;
  double clearance = 1e9;
  for (const auto& p : paths) clearance = std::min(clearance, point_segment_distance(lesion.center, p.core) - lesion.radius);
  const bool pass = r.single_fraction == 1.0 && clearance > needle_radius;
  return {pass, fmt("single_fraction %.3f, lesion surface to core axis %.2f mm vs needle radius %.1f mm", r.single_fraction,
                    clearance, needle_radius)};
}

Outcome pipeline_consistency() {
  ExperimentPlan plan;
  plan.n_operators = 1;
  plan.synthesis.background_noise_sd = 0.0;
  double worst = 0;
  int flagged = 0;
  for (const double scale : {0.0, 1.0}) {
    OperatorModel op = scale == 0.0 ? scaled_operator("2D", 0.0) : target_calibrated().a;
    op.landmark_noise_mm = 0.0;
    ExperimentPlan geo = plan;
    ExperimentPlan vol = plan;
    vol.use_volume_pipeline = true;
    const ExperimentDataset g = run_experiment(geo, default_tpl(), {op, op});
    const ExperimentDataset v = run_experiment(vol, default_tpl(), {op, op});
    const auto& gb = g.find(0, 0)->biopsies;
    const auto& vb = v.find(0, 0)->biopsies;
    for (int s = 0; s < kStationCount; ++s) {
      flagged += vb[static_cast<std::size_t>(s)].flagged;
      worst = std::max({worst,
                        std::abs(gb[static_cast<std::size_t>(s)].score.target_error_mm - vb[static_cast<std::size_t>(s)].score.target_error_mm),
                        std::abs(gb[static_cast<std::size_t>(s)].score.entry_error_mm - vb[static_cast<std::size_t>(s)].score.entry_error_mm)});
    }
  }
  return {worst <= 1.0 && flagged == 0,
          fmt("max |volume - geometric| error %.3f mm over 2x12 stations (<=1.0), %d flagged", worst, flagged)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "biopsim_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto simulate = [&](const std::string& threads, const std::string& name) {
    const std::string cmd = "BIOPSIM_THREADS=" + threads + " " + BIOPSIM_CLI_PATH +
                            " simulate --mode2d-error 6.79 --mode4d-error 5.1 --seed 11 -o " + (root / name).string() +
                            " > /dev/null";
    return std::system(cmd.c_str());
  };
  if (simulate("1", "a") != 0 || simulate("1", "b") != 0 || simulate("4", "c") != 0) return {false, "simulate failed"};
  const std::string a = slurp(root / "a" / "dataset.json");
  const bool cli_same = !a.empty() && a == slurp(root / "b" / "dataset.json") && a == slurp(root / "c" / "dataset.json");

  ExperimentPlan plan;
  plan.n_operators = 2;
  plan.use_volume_pipeline = true;
  plan.threads = 1;
  const OperatorModel& op = target_calibrated().a;
  const std::string one = dataset_to_json(run_experiment(plan, default_tpl(), {op, op})).dump();
  plan.threads = 3;
  const std::string three = dataset_to_json(run_experiment(plan, default_tpl(), {op, op})).dump();
  return {cli_same && one == three,
          fmt("cli datasets identical across reruns and 1/4 threads: %s; volume pipeline 1 vs 3 threads: %s",
              cli_same ? "yes" : "no", one == three ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "geometry oracle suite", 10, geometry_oracles},
      {2, "voxel convergence", 30, voxel_convergence},
      {3, "statistics exactness", 5, statistics_exactness},
      {4, "paper-anchored power check", 300, power_check},
      {5, "coverage plausibility", 300, coverage_plausibility},
      {6, "hidden-lesion failure mode", 60, figure9_scene},
      {7, "pipeline consistency", 120, pipeline_consistency},
      {8, "determinism", 300, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.name << "): " << o.detail
              << fmt(" [%.1f s, budget %.0f s%s]", secs, c.budget_s, in_time ? "" : " EXCEEDED") << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
