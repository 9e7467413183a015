#include "biopsim/dataset_io.hpp"

#include "biopsim/error.hpp"

#include <algorithm>

namespace biopsim {

namespace {

Json segment_to_json(const Segment3& s) { return Json::array({to_json(s.start), to_json(s.end)}); }

Segment3 segment_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::BadInput, "segment must be [start, end]");
  return {vec3_from_json(j[0], "segment start"), vec3_from_json(j[1], "segment end")};
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json plan_to_json(const ExperimentPlan& p) {
  Json j;
  j["n_operators"] = p.n_operators;
  j["biopsies_per_session"] = p.biopsies_per_session;
  j["modes"] = p.modes;
  j["master_seed"] = p.master_seed;
  j["spacing_mm"] = p.spacing_mm;
  j["use_volume_pipeline"] = p.use_volume_pipeline;
  j["volume_cc"] = p.volume_cc;
  j["aspect"] = to_json(p.aspect);
  j["pose_rotation_sd_deg"] = p.pose_rotation_sd_deg;
  j["pose_translation_sd_mm"] = p.pose_translation_sd_mm;
  j["synthesis"] = Json{{"background_mean", p.synthesis.background_mean},
                        {"background_noise_sd", p.synthesis.background_noise_sd},
                        {"prostate_intensity", p.synthesis.prostate_intensity},
                        {"trail_intensity", p.synthesis.trail_intensity},
                        {"landmark_intensity", p.synthesis.landmark_intensity},
                        {"trail_radius_mm", p.synthesis.trail_radius_mm}};
  return j;
}

ExperimentPlan plan_from_json(const Json& j) {
  ExperimentPlan p;
  try {
    if (!j.is_object()) throw Error(ErrorCode::BadInput, "plan must be an object");
    read_opt(j, "n_operators", p.n_operators);
    read_opt(j, "biopsies_per_session", p.biopsies_per_session);
    read_opt(j, "modes", p.modes);
    read_opt(j, "master_seed", p.master_seed);
    read_opt(j, "spacing_mm", p.spacing_mm);
    read_opt(j, "use_volume_pipeline", p.use_volume_pipeline);
    read_opt(j, "volume_cc", p.volume_cc);
    if (j.contains("aspect")) p.aspect = vec3_from_json(j["aspect"], "aspect");
    read_opt(j, "pose_rotation_sd_deg", p.pose_rotation_sd_deg);
    read_opt(j, "pose_translation_sd_mm", p.pose_translation_sd_mm);
    if (j.contains("synthesis")) {
      const Json& s = j["synthesis"];
      read_opt(s, "background_mean", p.synthesis.background_mean);
      read_opt(s, "background_noise_sd", p.synthesis.background_noise_sd);
      read_opt(s, "prostate_intensity", p.synthesis.prostate_intensity);
      read_opt(s, "trail_intensity", p.synthesis.trail_intensity);
      read_opt(s, "landmark_intensity", p.synthesis.landmark_intensity);
      read_opt(s, "trail_radius_mm", p.synthesis.trail_radius_mm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("plan: ") + e.what());
  }
  return p;
}

Json operator_to_json(const OperatorModel& op) {
  Json j;
  j["mode"] = op.mode;
  j["sigma_entry_mm"] = op.sigma_entry_mm;
  j["sigma_angle_deg"] = op.sigma_angle_deg;
  j["sigma_depth_mm"] = op.sigma_depth_mm;
  j["landmark_noise_mm"] = op.landmark_noise_mm;
  if (op.calibrated_scale) j["calibrated_scale"] = *op.calibrated_scale;
  if (op.calibrated_mean_error_mm) j["calibrated_mean_error_mm"] = *op.calibrated_mean_error_mm;
  return j;
}

OperatorModel operator_from_json(const Json& j) {
  OperatorModel op;
  try {
    op.mode = j.at("mode").get<std::string>();
    op.sigma_entry_mm = j.at("sigma_entry_mm").get<double>();
    op.sigma_angle_deg = j.at("sigma_angle_deg").get<double>();
    op.sigma_depth_mm = j.at("sigma_depth_mm").get<double>();
    op.landmark_noise_mm = j.at("landmark_noise_mm").get<double>();
    if (j.contains("calibrated_scale")) op.calibrated_scale = j["calibrated_scale"].get<double>();
    if (j.contains("calibrated_mean_error_mm")) op.calibrated_mean_error_mm = j["calibrated_mean_error_mm"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("operator: ") + e.what());
  }
  return op;
}

Json coverage_to_json(const CoverageReport& c) {
  Json hist = Json::object();
  for (std::size_t m = 1; m < c.hit_histogram.size(); ++m) hist[std::to_string(m)] = c.hit_histogram[m];
  return Json{{"explored_mm3", c.explored_volume_mm3},
              {"per_biopsy_mm3", c.per_biopsy_volume_mm3},
              {"single_fraction", c.single_fraction},
              {"redundancy_ratio", c.redundancy_ratio},
              {"hit_histogram", hist},
              {"union_voxels", c.union_voxels},
              {"summed_voxels", c.summed_voxels}};
}

Json session_to_json(const SessionRecord& s) {
  Json j;
  j["mode"] = s.mode;
  j["operator_id"] = s.operator_id;
  Json biopsies = Json::array();
  for (const auto& b : s.biopsies) {
    Json bj;
    bj["station"] = station_to_json(b.station);
    bj["entry_error_mm"] = b.score.entry_error_mm;
    bj["target_error_mm"] = b.score.target_error_mm;
    bj["missed"] = b.score.missed;
    bj["flagged"] = b.flagged;
    bj["core_mm"] = segment_to_json(b.path.core);
    bj["entry_point_mm"] = b.score.entry_point ? to_json(*b.score.entry_point) : Json(nullptr);
    bj["in_prostate_core_length_mm"] = b.score.in_prostate_core_length_mm;
    if (b.pipeline) {
      const PipelineTrace& t = *b.pipeline;
      Json pj;
      pj["ok"] = t.ok;
      if (!t.ok) pj["error"] = t.error;
      Json rows = Json::array();
      for (int r = 0; r < 3; ++r) rows.push_back(to_json(t.pose.rotation().row(r).transpose()));
      pj["pose"] = Json{{"rotation", rows}, {"translation_mm", to_json(t.pose.translation())}};
      if (t.ok) {
        pj["segmented_mm"] = segment_to_json(t.segmented);
        pj["inlier_rms_mm"] = t.inlier_rms_mm;
        pj["threshold"] = t.threshold;
        pj["registration_rms_mm"] = t.registration_rms_mm;
      }
      bj["pipeline"] = pj;
    }
    biopsies.push_back(bj);
  }
  j["biopsies"] = biopsies;
  j["coverage"] = coverage_to_json(s.coverage);
  return j;
}

Json dataset_to_json(const ExperimentDataset& ds) {
  Json j;
  j["format"] = "biopsim-dataset";
  j["toolkit_version"] = std::string(kToolkitVersion);
  j["plan"] = plan_to_json(ds.plan);
  Json ops = Json::array();
  for (const auto& op : ds.operators) ops.push_back(operator_to_json(op));
  j["operators"] = ops;
  j["tip_definition"] = "distal core end (farther along the approach direction)";
  Json sessions = Json::array();
  for (const auto& s : ds.sessions) sessions.push_back(session_to_json(s));
  j["sessions"] = sessions;
  return j;
}

ExperimentDataset dataset_from_json(const Json& j) {
  ExperimentDataset ds;
  try {
    if (!j.is_object() || j.value("format", std::string{}) != "biopsim-dataset") {
      throw Error(ErrorCode::BadInput, "not a biopsim dataset");
    }
    ds.plan = plan_from_json(j.at("plan"));
    for (const Json& op : j.at("operators")) ds.operators.push_back(operator_from_json(op));
    for (const Json& sj : j.at("sessions")) {
      SessionRecord s;
      s.mode = sj.at("mode").get<std::string>();
      s.operator_id = sj.at("operator_id").get<int>();
      const auto it = std::find(ds.plan.modes.begin(), ds.plan.modes.end(), s.mode);
      if (it == ds.plan.modes.end()) throw Error(ErrorCode::BadInput, "session mode not in plan: " + s.mode);
      s.mode_index = static_cast<int>(it - ds.plan.modes.begin());
      const Json& bs = sj.at("biopsies");
      if (!bs.is_array() || bs.size() != kStationCount) {
        throw Error(ErrorCode::BadInput, "each session needs 12 biopsies");
      }
      for (const Json& bj : bs) {
        BiopsyRecord b;
        b.operator_id = s.operator_id;
        b.mode_index = s.mode_index;
        try {
          b.station = station_from_json(bj.at("station"));
        } catch (const Error& err) {
          throw Error(ErrorCode::BadInput, err.detail());
        }
        b.score.entry_error_mm = bj.at("entry_error_mm").get<double>();
        b.score.target_error_mm = bj.at("target_error_mm").get<double>();
        b.score.missed = bj.at("missed").get<bool>();
        b.flagged = bj.value("flagged", false);
        if (bj.contains("core_mm")) b.path.core = segment_from_json(bj["core_mm"]);
        b.path.station = b.station;
        if (bj.contains("in_prostate_core_length_mm")) {
          b.score.in_prostate_core_length_mm = bj["in_prostate_core_length_mm"].get<double>();
        }
        if (bj.contains("entry_point_mm") && !bj["entry_point_mm"].is_null()) {
          b.score.entry_point = vec3_from_json(bj["entry_point_mm"], "entry_point_mm");
        }
        s.biopsies.push_back(std::move(b));
      }
      const Json& cj = sj.at("coverage");
      s.coverage.explored_volume_mm3 = cj.at("explored_mm3").get<double>();
      s.coverage.per_biopsy_volume_mm3 = cj.at("per_biopsy_mm3").get<double>();
      s.coverage.single_fraction = cj.at("single_fraction").get<double>();
      s.coverage.redundancy_ratio = cj.at("redundancy_ratio").get<double>();
      s.coverage.union_voxels = cj.value("union_voxels", std::uint64_t{0});
      s.coverage.summed_voxels = cj.value("summed_voxels", std::uint64_t{0});
      const Json& hist = cj.at("hit_histogram");
      for (auto it2 = hist.begin(); it2 != hist.end(); ++it2) {
        const auto m = static_cast<std::size_t>(std::stoul(it2.key()));
        if (s.coverage.hit_histogram.size() <= m) s.coverage.hit_histogram.resize(m + 1, 0);
        s.coverage.hit_histogram[m] = it2.value().get<std::uint64_t>();
      }
      ds.sessions.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("dataset: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::BadInput, "dataset: bad hit_histogram key");
  }
  return ds;
}

}  // namespace biopsim
