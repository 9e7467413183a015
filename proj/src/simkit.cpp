#include "biopsim/simkit.hpp"

#include "biopsim/error.hpp"
#include "biopsim/trailseg.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace biopsim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Sub-stream tags under (master, operator, mode, station).
constexpr std::uint64_t kStreamOperator = 0;
constexpr std::uint64_t kStreamPose = 1;
constexpr std::uint64_t kStreamSynthesis = 2;
constexpr std::uint64_t kStreamLandmarks = 3;

std::uint64_t stream_seed(std::uint64_t master, int op, int mode, int station, std::uint64_t tag) {
  return derive_seed(master, {static_cast<std::uint64_t>(op), static_cast<std::uint64_t>(mode),
                              static_cast<std::uint64_t>(station), tag});
}

double error_of(const BiopsyScore& s, ErrorKind which) {
  return which == ErrorKind::Target ? s.target_error_mm : s.entry_error_mm;
}

RigidTransform random_pose(Rng& rng, double rot_sd_deg, double trans_sd_mm) {
  const double angle = rot_sd_deg * kDegToRad * rng.normal();
  // Uniform axis on the sphere.
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 axis(rxy * std::cos(phi), rxy * std::sin(phi), z);
  Vec3 t;
  for (int i = 0; i < 3; ++i) t(i) = trans_sd_mm * rng.normal();
  return RigidTransform::from_axis_angle(axis, angle, t);
}

}  // namespace

void OperatorModel::validate() const {
  for (const double s : {sigma_entry_mm, sigma_angle_deg, sigma_depth_mm, landmark_noise_mm}) {
    if (!std::isfinite(s) || s < 0.0) throw Error(ErrorCode::InvalidArgument, "operator sigmas must be finite and >= 0");
  }
}

OperatorModel scaled_operator(const std::string& mode, double scale, const SigmaProfile& profile,
                              double landmark_noise_mm) {
  OperatorModel op;
  op.mode = mode;
  op.sigma_entry_mm = scale * profile.entry_mm;
  op.sigma_angle_deg = scale * profile.angle_deg;
  op.sigma_depth_mm = scale * profile.depth_mm;
  op.landmark_noise_mm = landmark_noise_mm;
  op.calibrated_scale = scale;
  return op;
}

OperatorDraw draw_operator_noise(Rng& rng) {
  OperatorDraw d;
  d.entry_u = rng.normal();
  d.entry_v = rng.normal();
  d.tilt = rng.normal();
  d.tilt_axis_angle = 2.0 * std::numbers::pi * rng.uniform();
  d.depth = rng.normal();
  return d;
}

BiopsyPath realize_biopsy(const TemplateEntry& ideal, const OperatorModel& op, const OperatorDraw& draw) {
  const Vec3 dir0 = ideal.approach_direction.normalized();
  const auto [u1, u2] = orthonormal_basis(dir0);
  const Point3 entry =
      ideal.entry_zone.center + op.sigma_entry_mm * (draw.entry_u * u1 + draw.entry_v * u2);

  Vec3 dir = dir0;
  const double tilt = op.sigma_angle_deg * kDegToRad * draw.tilt;
  if (tilt != 0.0) {
    const Vec3 axis = std::cos(draw.tilt_axis_angle) * u1 + std::sin(draw.tilt_axis_angle) * u2;
    dir = (Eigen::AngleAxisd(tilt, axis) * dir0).normalized();
  }
  const double depth = (ideal.target_zone.center - ideal.entry_zone.center).norm() + op.sigma_depth_mm * draw.depth;
  return make_path(entry + depth * dir, dir, ideal.station);
}

BiopsyPath simulate_biopsy(const TemplateEntry& ideal, const OperatorModel& op, Rng& rng) {
  return realize_biopsy(ideal, op, draw_operator_noise(rng));
}

double simulated_mean_error(const ProtocolTemplate& tpl, const OperatorModel& op, ErrorKind which,
                            std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const TemplateEntry& e = tpl.entries[i % kStationCount];
    const BiopsyPath p = realize_biopsy(e, op, draw_operator_noise(rng));
    sum += error_of(score_biopsy(p, e, tpl.model), which);
  }
  return sum / static_cast<double>(draws);
}

OperatorModel calibrate(const ProtocolTemplate& tpl, double target_mean_error_mm, ErrorKind which,
                        const std::string& mode, const CalibrationOptions& options) {
  if (!(target_mean_error_mm >= 0.0) || !std::isfinite(target_mean_error_mm)) {
    throw Error(ErrorCode::InvalidArgument, "target mean error must be >= 0");
  }
  if (options.draws < 20000) throw Error(ErrorCode::InvalidArgument, "calibration needs >= 20000 draws");
  if (target_mean_error_mm == 0.0) {
    OperatorModel op = scaled_operator(mode, 0.0, options.profile, options.landmark_noise_mm);
    op.calibrated_mean_error_mm = 0.0;
    return op;
  }

  // Common random numbers across scales make the mean error monotone in scale.
  Rng rng(options.seed);
  std::vector<OperatorDraw> draws(options.draws);
  for (auto& d : draws) d = draw_operator_noise(rng);
  const auto mean_at = [&](double scale) {
    const OperatorModel op = scaled_operator(mode, scale, options.profile, options.landmark_noise_mm);
    double sum = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const TemplateEntry& e = tpl.entries[i % kStationCount];
      sum += error_of(score_biopsy(realize_biopsy(e, op, draws[i]), e, tpl.model), which);
    }
    return sum / static_cast<double>(draws.size());
  };

  double lo = 0.0, hi = options.max_scale;
  double hi_mean = mean_at(hi);
  if (hi_mean < target_mean_error_mm * (1.0 - options.tolerance)) {
    throw Error(ErrorCode::CalibrationFailed,
                "mean error " + std::to_string(hi_mean) + " mm at the maximum scale is below the requested " +
                    std::to_string(target_mean_error_mm) + " mm");
  }
  double best_scale = hi, best_mean = hi_mean;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double m = mean_at(mid);
    if (std::abs(m - target_mean_error_mm) < std::abs(best_mean - target_mean_error_mm)) {
      best_scale = mid;
      best_mean = m;
    }
    if (std::abs(m - target_mean_error_mm) <= 1e-3 * target_mean_error_mm) break;
    (m < target_mean_error_mm ? lo : hi) = mid;
  }
  if (std::abs(best_mean - target_mean_error_mm) > options.tolerance * target_mean_error_mm) {
    throw Error(ErrorCode::CalibrationFailed, "bisection did not reach the requested mean error");
  }
  OperatorModel op = scaled_operator(mode, best_scale, options.profile, options.landmark_noise_mm);
  op.calibrated_mean_error_mm = best_mean;
  return op;
}

void ExperimentPlan::validate() const {
  if (biopsies_per_session != kStationCount) throw Error(ErrorCode::InvalidArgument, "biopsies_per_session must be 12");
  if (modes.empty()) throw Error(ErrorCode::InvalidArgument, "plan needs at least one mode");
  if (n_operators < 1) throw Error(ErrorCode::InvalidArgument, "plan needs at least one operator");
  if (!(spacing_mm > 0.1 && spacing_mm <= 2.0)) throw Error(ErrorCode::InvalidArgument, "spacing must lie in (0.1, 2.0] mm");
  if (!(pose_rotation_sd_deg >= 0.0) || !(pose_translation_sd_mm >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pose sigmas must be >= 0");
  }
  synthesis.validate();
}

const SessionRecord* ExperimentDataset::find(int operator_id, int mode_index) const {
  for (const auto& s : sessions) {
    if (s.operator_id == operator_id && s.mode_index == mode_index) return &s;
  }
  return nullptr;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BIOPSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BiopsyRecord run_volume_pipeline(const ExperimentPlan& plan, const ProtocolTemplate& tpl,
                                 const OperatorModel& op, int operator_id, int mode_index,
                                 const StationId& station) {
  const int s = station.index();
  const TemplateEntry& ideal = tpl.entries[s];
  Rng op_rng(stream_seed(plan.master_seed, operator_id, mode_index, s, kStreamOperator));
  const BiopsyPath truth = simulate_biopsy(ideal, op, op_rng);

  BiopsyRecord rec;
  rec.operator_id = operator_id;
  rec.mode_index = mode_index;
  rec.station = station;
  PipelineTrace trace;

  Rng pose_rng(stream_seed(plan.master_seed, operator_id, mode_index, s, kStreamPose));
  trace.pose = random_pose(pose_rng, plan.pose_rotation_sd_deg, plan.pose_translation_sd_mm);
  const ProstateModel posed = tpl.model.transformed(trace.pose);

  try {
    SynthesisParams sp = plan.synthesis;
    sp.spacing_mm = plan.spacing_mm;
    sp.rng_seed = stream_seed(plan.master_seed, operator_id, mode_index, s, kStreamSynthesis);
    const IntensityVolume vol = synthesize_volume(posed, trace.pose.apply(truth.core), sp);
    const TrailSegmentation seg = segment_trail(vol);
    trace.segmented = seg.fitted;
    trace.inlier_rms_mm = seg.inlier_rms;
    trace.threshold = seg.threshold;

    Rng lm_rng(stream_seed(plan.master_seed, operator_id, mode_index, s, kStreamLandmarks));
    std::array<Point3, 3> observed;
    for (std::size_t i = 0; i < 3; ++i) {
      Vec3 noise;
      for (int a = 0; a < 3; ++a) noise(a) = op.landmark_noise_mm * lm_rng.normal();
      observed[i] = posed.landmarks[i] + noise;
    }
    const RigidTransform to_ref = kabsch_align(observed, tpl.model.landmarks);
    double ss = 0.0;
    for (std::size_t i = 0; i < 3; ++i) ss += (to_ref.apply(observed[i]) - tpl.model.landmarks[i]).squaredNorm();
    trace.registration_rms_mm = std::sqrt(ss / 3.0);

    const Segment3 recovered = to_ref.apply(seg.fitted);
    const Point3 tip = core_tip(recovered, ideal.approach_direction);
    const Point3 tail = tip == recovered.end ? recovered.start : recovered.end;
    rec.path = make_path(tip, tip - tail, station);
    rec.score = score_biopsy(rec.path, ideal, tpl.model);
  } catch (const Error& err) {
    // Fall back to the ground-truth path so the record stays paired; the flag marks it.
    trace.ok = false;
    trace.error = err.what();
    rec.flagged = true;
    rec.path = truth;
    rec.score = score_biopsy(truth, ideal, tpl.model);
  }
  rec.pipeline = trace;
  return rec;
}

ExperimentDataset run_experiment(const ExperimentPlan& plan, const ProtocolTemplate& tpl,
                                 const std::vector<OperatorModel>& ops) {
  plan.validate();
  if (ops.size() != plan.modes.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one operator model per mode");
  }
  for (const auto& op : ops) op.validate();

  ExperimentDataset ds;
  ds.plan = plan;
  ds.operators = ops;
  const int n_modes = static_cast<int>(plan.modes.size());
  const int n_sessions = plan.n_operators * n_modes;
  ds.sessions.resize(static_cast<std::size_t>(n_sessions));

  const MaskVolume mask = rasterize_prostate_mask(tpl.model, plan.spacing_mm);

  const auto run_session = [&](int idx) {
    SessionRecord& sess = ds.sessions[static_cast<std::size_t>(idx)];
    sess.operator_id = idx / n_modes;
    sess.mode_index = idx % n_modes;
    sess.mode = plan.modes[static_cast<std::size_t>(sess.mode_index)];
    const OperatorModel& op = ops[static_cast<std::size_t>(sess.mode_index)];
    std::vector<BiopsyPath> paths;
    for (int s = 0; s < kStationCount; ++s) {
      const StationId station = StationId::from_index(s);
      BiopsyRecord rec;
      if (plan.use_volume_pipeline) {
        rec = run_volume_pipeline(plan, tpl, op, sess.operator_id, sess.mode_index, station);
      } else {
        Rng rng(stream_seed(plan.master_seed, sess.operator_id, sess.mode_index, s, kStreamOperator));
        rec.operator_id = sess.operator_id;
        rec.mode_index = sess.mode_index;
        rec.station = station;
        rec.path = simulate_biopsy(tpl.entries[s], op, rng);
        rec.score = score_biopsy(rec.path, tpl.entries[s], tpl.model);
      }
      paths.push_back(rec.path);
      sess.biopsies.push_back(std::move(rec));
    }
    sess.coverage = coverage_report(paths, mask);
  };

  const int n_threads = std::min(resolve_thread_count(plan.threads), n_sessions);
  if (n_threads <= 1) {
    for (int i = 0; i < n_sessions; ++i) run_session(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int i = next++; i < n_sessions; i = next++) run_session(i);
        } catch (...) {
          failures[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  return ds;
}

ExperimentDataset run_experiment(const ExperimentPlan& plan, const OperatorModel& op2d,
                                 const OperatorModel& op4d) {
  const ProtocolTemplate tpl = default_template(make_prostate(plan.volume_cc, plan.aspect));
  return run_experiment(plan, tpl, {op2d, op4d});
}

}  // namespace biopsim
