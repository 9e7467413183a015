#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/phantom.hpp"
#include "biopsim/protocol.hpp"
#include "biopsim/rng.hpp"
#include "biopsim/scoring.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace biopsim {

inline constexpr std::string_view kToolkitVersion = "1.0.0";

/// Stochastic stand-in for one guidance mode.
struct OperatorModel {
  std::string mode = "2D";
  double sigma_entry_mm = 0.0;   // per tangent axis
  double sigma_angle_deg = 0.0;  // needle tilt
  double sigma_depth_mm = 0.0;   // insertion depth
  double landmark_noise_mm = 0.5;
  /// Scale factor applied to the reference profile when produced by calibrate().
  std::optional<double> calibrated_scale;
  std::optional<double> calibrated_mean_error_mm;

  void validate() const;
};

/// Relative sigmas multiplied by the calibration scale.
/// The entry:depth weighting makes mean entry error about 0.88 of mean target error.
struct SigmaProfile {
  double entry_mm = 1.5;
  double angle_deg = 1.0;
  double depth_mm = 1.0;
};

OperatorModel scaled_operator(const std::string& mode, double scale, const SigmaProfile& profile = {},
                              double landmark_noise_mm = 0.5);

/// Standard-normal/uniform variates consumed by one simulated biopsy, kept so the
/// same draw can be realised at different noise scales.
struct OperatorDraw {
  double entry_u = 0.0;
  double entry_v = 0.0;
  double tilt = 0.0;
  double tilt_axis_angle = 0.0;  // uniform in [0, 2π)
  double depth = 0.0;
};

OperatorDraw draw_operator_noise(Rng& rng);

/// Needle placement for a template entry under op noise. With zero sigmas the core
/// tip lands on the target centre and the needle line passes through the entry centre.
BiopsyPath realize_biopsy(const TemplateEntry& ideal, const OperatorModel& op, const OperatorDraw& draw);

BiopsyPath simulate_biopsy(const TemplateEntry& ideal, const OperatorModel& op, Rng& rng);

enum class ErrorKind { Target, Entry };

struct CalibrationOptions {
  std::size_t draws = 24000;
  std::uint64_t seed = 0xC0FFEE;
  double max_scale = 10.0;
  double tolerance = 0.02;
  SigmaProfile profile;
  double landmark_noise_mm = 0.5;
};

/// Bisection on the profile scale until the mean simulated error matches
/// target_mean_error_mm within tolerance. Throws CalibrationFailed.
OperatorModel calibrate(const ProtocolTemplate& tpl, double target_mean_error_mm, ErrorKind which,
                        const std::string& mode, const CalibrationOptions& options = {});

/// Mean error over the calibration draws at a given scale.
double simulated_mean_error(const ProtocolTemplate& tpl, const OperatorModel& op, ErrorKind which,
                            std::size_t draws, std::uint64_t seed);

struct ExperimentPlan {
  int n_operators = 14;
  int biopsies_per_session = kStationCount;
  std::vector<std::string> modes{"2D", "4D"};
  std::uint64_t master_seed = 1;
  double spacing_mm = 0.5;
  bool use_volume_pipeline = false;

  double volume_cc = kDefaultVolumeCc;
  Vec3 aspect = kDefaultAspect;
  /// Phantom placement variability for the volume pipeline.
  double pose_rotation_sd_deg = 3.0;
  double pose_translation_sd_mm = 2.0;
  SynthesisParams synthesis;
  /// 0 selects BIOPSIM_THREADS or the hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct PipelineTrace {
  bool ok = true;
  std::string error;
  RigidTransform pose;
  Segment3 segmented;  // volume frame
  double inlier_rms_mm = 0.0;
  double threshold = 0.0;
  double registration_rms_mm = 0.0;
};

struct BiopsyRecord {
  int operator_id = 0;
  int mode_index = 0;
  StationId station;
  BiopsyPath path;  // path that was scored (recovered path for the volume pipeline)
  BiopsyScore score;
  bool flagged = false;
  std::optional<PipelineTrace> pipeline;
};

struct SessionRecord {
  int operator_id = 0;
  int mode_index = 0;
  std::string mode;
  std::vector<BiopsyRecord> biopsies;
  CoverageReport coverage;
};

struct ExperimentDataset {
  ExperimentPlan plan;
  std::vector<OperatorModel> operators;  // one per mode
  /// Ordered by (operator, mode).
  std::vector<SessionRecord> sessions;

  const SessionRecord* find(int operator_id, int mode_index) const;
};

int resolve_thread_count(int requested);

/// Runs every operator × mode × station. Pure function of (plan, tpl, ops).
ExperimentDataset run_experiment(const ExperimentPlan& plan, const ProtocolTemplate& tpl,
                                 const std::vector<OperatorModel>& ops);
ExperimentDataset run_experiment(const ExperimentPlan& plan, const OperatorModel& op2d,
                                 const OperatorModel& op4d);

/// One biopsy through synthesize → segment → register → score.
BiopsyRecord run_volume_pipeline(const ExperimentPlan& plan, const ProtocolTemplate& tpl,
                                 const OperatorModel& op, int operator_id, int mode_index,
                                 const StationId& station);

}  // namespace biopsim
