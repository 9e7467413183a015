#include "biopsim/cli.hpp"

#include "biopsim/dataset_io.hpp"
#include "biopsim/error.hpp"
#include "biopsim/phantom.hpp"
#include "biopsim/protocol.hpp"
#include "biopsim/report.hpp"
#include "biopsim/simkit.hpp"
#include "biopsim/trailseg.hpp"
#include "biopsim/volume_io.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace biopsim::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json manifest_base(const std::string& command, const std::vector<std::string>& args) {
  Json m;
  m["tool"] = "biopsim";
  m["toolkit_version"] = std::string(kToolkitVersion);
  m["command"] = command;
  // The output location is left out so manifests do not depend on where a run was written.
  Json argv = Json::array();
  for (std::size_t i = 0; i < args.size(); ++i) {
    const bool out_flag = args[i] == "-o" || args[i] == "--out";
    argv.push_back(args[i]);
    if (out_flag && i + 1 < args.size()) {
      argv.push_back("<out>");
      ++i;
    } else if (args[i].rfind("--out=", 0) == 0) {
      argv.back() = "--out=<out>";
    }
  }
  m["argv"] = argv;
  return m;
}

Json output_hashes(const fs::path& dir, const std::vector<std::string>& names) {
  Json h = Json::object();
  for (const auto& n : names) h[n] = sha256_file((dir / n).string());
  return h;
}

// ---- phantom ---------------------------------------------------------------

struct PhantomArgs {
  double volume_cc = kDefaultVolumeCc;
  std::vector<double> aspect{kDefaultAspect.x(), kDefaultAspect.y(), kDefaultAspect.z()};
  double voxel_mm = 0.5;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool volumes = false;
  int trail_station = -1;
  double noise_sd = SynthesisParams{}.background_noise_sd;
};

int cmd_phantom(const PhantomArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (!(a.volume_cc > 0.0)) throw UsageError("volume must be positive");
  if (a.aspect.size() != 3 || *std::min_element(a.aspect.begin(), a.aspect.end()) <= 0.0) {
    throw UsageError("aspect must be three positive numbers");
  }
  if (!(a.voxel_mm > 0.1 && a.voxel_mm <= 2.0)) throw UsageError("voxel size must lie in (0.1, 2.0] mm");
  if (a.trail_station >= kStationCount) throw UsageError("trail station must be in 0..11");
  if (!(a.noise_sd >= 0.0)) throw UsageError("noise sd must be >= 0");

  const ProstateModel model = make_prostate(a.volume_cc, Vec3(a.aspect[0], a.aspect[1], a.aspect[2]));
  const fs::path dir(a.out_dir);
  std::vector<std::string> written{"model.json"};

  Json model_json = model_to_json(model);
  model_json["analytic_volume_mm3"] = model.shape.volume_mm3();

  std::optional<ProtocolTemplate> tpl;
  try {
    tpl = default_template(model);
  } catch (const Error& e) {
    if (a.trail_station >= 0) throw;
    out << "note: no default template for this gland (" << e.detail() << ")\n";
  }

  Json manifest = manifest_base("phantom", argv);
  manifest["seed"] = a.seed;
  manifest["config"] = Json{{"volume_cc", a.volume_cc}, {"aspect", a.aspect}, {"voxel_mm", a.voxel_mm},
                            {"volumes", a.volumes}, {"trail_station", a.trail_station}, {"noise_sd", a.noise_sd}};
  manifest["acquisition_setting"] = "17.7 cm-15Hz (recorded only; no synthetic counterpart)";

  // Compute everything before touching the output directory.
  std::optional<MaskVolume> mask;
  std::optional<IntensityVolume> intensity;
  Json intensity_extra = Json::object();
  if (a.volumes || a.trail_station >= 0) {
    mask = rasterize_prostate_mask(model, a.voxel_mm);
    model_json["mask_volume_mm3"] = mask_volume_mm3(*mask);
    SynthesisParams sp;
    sp.spacing_mm = a.voxel_mm;
    sp.rng_seed = a.seed;
    sp.background_noise_sd = a.noise_sd;
    std::optional<Segment3> trail;
    if (a.trail_station >= 0) {
      const TemplateEntry& e = tpl->entries[static_cast<std::size_t>(a.trail_station)];
      trail = make_path(e.target_zone.center, e.approach_direction, e.station).core;
      intensity_extra["trail_station"] = station_to_json(e.station);
      intensity_extra["trail_mm"] = Json::array({to_json(trail->start), to_json(trail->end)});
      manifest["ground_truth_trail_mm"] = intensity_extra["trail_mm"];
    }
    intensity = synthesize_volume(model, trail, sp);
  }

  write_json_atomic(dir / "model.json", model_json);
  if (tpl) {
    save_template(*tpl, dir / "template.json");
    written.push_back("template.json");
  }
  if (mask) {
    write_volume(dir / "mask.json", *mask, a.seed);
    write_volume(dir / "intensity.json", *intensity, a.seed, intensity_extra);
    for (const char* n : {"mask.json", "mask.raw", "intensity.json", "intensity.raw"}) written.push_back(n);
  }
  manifest["outputs_sha256"] = output_hashes(dir, written);
  write_json_atomic(dir / "manifest.json", manifest);
  out << "phantom: " << model.shape.volume_mm3() / 1000.0 << " cc written to " << dir.string() << "\n";
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string plan = "defaults";
  double mode2d_error = 6.79;
  double mode4d_error = 5.1;
  std::string pipeline = "geometric";
  std::uint64_t seed = 1;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.pipeline != "geometric" && a.pipeline != "volume") throw UsageError("pipeline must be geometric or volume");
  if (!(a.mode2d_error >= 0.0) || !(a.mode4d_error >= 0.0)) throw UsageError("mode errors must be >= 0");

  ExperimentPlan plan;
  Json manifest = manifest_base("simulate", argv);
  if (a.plan != "defaults") {
    plan = plan_from_json(read_json_file(a.plan));
    manifest["inputs_sha256"] = Json{{"plan", sha256_file(a.plan)}};
  }
  plan.master_seed = a.seed;
  plan.use_volume_pipeline = a.pipeline == "volume";
  if (plan.modes.size() != 2) throw UsageError("simulate needs a plan with exactly two modes");
  try {
    plan.validate();
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }

  const ProtocolTemplate tpl = default_template(make_prostate(plan.volume_cc, plan.aspect));
  CalibrationOptions copt;
  copt.seed = derive_seed(plan.master_seed, {0xCA11B});
  const OperatorModel op_a = calibrate(tpl, a.mode2d_error, ErrorKind::Target, plan.modes[0], copt);
  const OperatorModel op_b = calibrate(tpl, a.mode4d_error, ErrorKind::Target, plan.modes[1], copt);
  const ExperimentDataset ds = run_experiment(plan, tpl, {op_a, op_b});

  std::size_t flagged = 0;
  for (const auto& s : ds.sessions)
    for (const auto& b : s.biopsies) flagged += b.flagged ? 1 : 0;

  const fs::path dir(a.out_dir);
  write_json_atomic(dir / "dataset.json", dataset_to_json(ds));
  save_template(tpl, dir / "template.json");
  manifest["seed"] = plan.master_seed;
  manifest["calibration_seed"] = copt.seed;
  manifest["seed_derivation"] = "per-biopsy streams = derive_seed(master_seed, {operator, mode_index, station, tag})";
  manifest["plan"] = plan_to_json(plan);
  manifest["config"] = Json{{"mode2d_error_mm", a.mode2d_error}, {"mode4d_error_mm", a.mode4d_error},
                            {"calibrated_on", "target"}, {"pipeline", a.pipeline}};
  manifest["operators"] = Json::array({operator_to_json(op_a), operator_to_json(op_b)});
  manifest["record_count"] = ds.sessions.size() * kStationCount;
  manifest["flagged_records"] = flagged;
  manifest["outputs_sha256"] = output_hashes(dir, {"dataset.json", "template.json"});
  write_json_atomic(dir / "manifest.json", manifest);
  out << "simulate: " << ds.sessions.size() * kStationCount << " biopsy records (" << flagged
      << " flagged) written to " << dir.string() << "\n";
  return kOk;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string dataset;
  std::string tables = "2,3,4,5,6";
  bool csv = false;
  std::string out_dir;
};

int cmd_report(const ReportArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  std::set<int> tables;
  {
    std::stringstream ss(a.tables);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      int t = 0;
      try {
        std::size_t used = 0;
        t = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw UsageError("unknown table '" + tok + "'");
      }
      if (t < 2 || t > 6) throw UsageError("unknown table " + tok);
      tables.insert(t);
    }
    if (tables.empty()) throw UsageError("no tables requested");
  }

  const ExperimentDataset ds = dataset_from_json(read_json_file(a.dataset));
  const ComparisonReport rep = compare_modes(ds);
  const fs::path dir(a.out_dir);

  Json full = report_to_json(rep);
  Json selected;
  for (const auto& [k, v] : full.items()) {
    if (k.rfind("table", 0) != 0 || tables.count(k.back() - '0')) selected[k] = v;
  }
  std::vector<std::string> written{"report.json"};
  write_json_atomic(dir / "report.json", selected);
  if (a.csv) {
    const std::vector<TableRow>* by_number[] = {nullptr, nullptr, &rep.table2, &rep.table3,
                                                &rep.table4, &rep.table5, &rep.table6};
    for (const int t : tables) {
      const std::string name = "table" + std::to_string(t) + ".csv";
      write_text_atomic(dir / name, table_csv(*by_number[t]));
      written.push_back(name);
    }
    write_text_atomic(dir / "biopsies_long.csv", long_format_csv(ds));
    written.push_back("biopsies_long.csv");
  }
  Json manifest = manifest_base("report", argv);
  manifest["inputs_sha256"] = Json{{"dataset", sha256_file(a.dataset)}};
  manifest["tables"] = std::vector<int>(tables.begin(), tables.end());
  manifest["outputs_sha256"] = output_hashes(dir, written);
  write_json_atomic(dir / "manifest.json", manifest);
  out << "report: " << rep.n_pairs << " paired biopsies, tables written to " << dir.string() << "\n";
  return kOk;
}

// ---- segment ---------------------------------------------------------------

struct SegmentArgs {
  std::string volume;
  std::string threshold = "auto";
  std::string out_file;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  std::optional<double> thr;
  if (a.threshold != "auto") {
    try {
      std::size_t used = 0;
      thr = std::stod(a.threshold, &used);
      if (used != a.threshold.size()) throw std::invalid_argument(a.threshold);
    } catch (const std::exception&) {
      throw UsageError("threshold must be 'auto' or a number");
    }
  }
  const LoadedVolume lv = read_volume(a.volume);
  const TrailSegmentation seg = segment_trail(lv.volume, thr);

  Json j;
  j["volume"] = fs::path(a.volume).filename().string();
  j["volume_sha256"] = sha256_file(a.volume);
  j["threshold"] = seg.threshold;
  j["fitted_mm"] = Json::array({to_json(seg.fitted.start), to_json(seg.fitted.end)});
  j["length_mm"] = seg.fitted.length();
  j["inlier_rms_mm"] = seg.inlier_rms;
  j["voxel_count"] = seg.voxel_indices.size();
  Json idx = Json::array();
  for (const auto& v : seg.voxel_indices) idx.push_back(Json::array({v[0], v[1], v[2]}));
  j["voxel_indices"] = idx;
  write_json_atomic(a.out_file, j);
  out << "segment: trail of " << seg.fitted.length() << " mm from " << seg.voxel_indices.size() << " voxels\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"biopsim: phantom biopsy simulation and scoring"};
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "Build the gland model, template and optional volumes");
  phantom->add_option("--volume-cc", pa.volume_cc, "Gland volume in cm^3");
  phantom->add_option("--aspect", pa.aspect, "Semi-axis ratios a,b,c")->delimiter(',')->expected(3);
  phantom->add_option("--voxel-mm", pa.voxel_mm, "Voxel spacing in mm");
  phantom->add_option("--seed", pa.seed, "Synthesis seed");
  phantom->add_option("-o,--out", pa.out_dir, "Output directory")->required();
  phantom->add_flag("--volumes", pa.volumes, "Also write mask and intensity volumes");
  phantom->add_option("--trail-station", pa.trail_station, "Render the ideal trail of station 0..11");
  phantom->add_option("--noise-sd", pa.noise_sd, "Background noise sd of the intensity volume");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Calibrate operators and run the two-mode experiment");
  simulate->add_option("--plan", sa.plan, "Plan JSON file or 'defaults'");
  simulate->add_option("--mode2d-error", sa.mode2d_error, "Mean target error for the first mode (mm)");
  simulate->add_option("--mode4d-error", sa.mode4d_error, "Mean target error for the second mode (mm)");
  simulate->add_option("--pipeline", sa.pipeline, "geometric|volume");
  simulate->add_option("--seed", sa.seed, "Master seed");
  simulate->add_option("-o,--out", sa.out_dir, "Output directory")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Statistical comparison tables from a dataset");
  report->add_option("--dataset", ra.dataset, "dataset.json")->required();
  report->add_option("--tables", ra.tables, "Comma-separated table numbers (2..6)");
  report->add_flag("--csv", ra.csv, "Write CSV tables and the long-format error CSV");
  report->add_option("-o,--out", ra.out_dir, "Output directory")->required();

  SegmentArgs ga;
  auto* segment = app.add_subcommand("segment", "Recover the needle trail from a volume");
  segment->add_option("--volume", ga.volume, "Volume header JSON")->required();
  segment->add_option("--threshold", ga.threshold, "auto or an intensity value");
  segment->add_option("-o,--out", ga.out_file, "Output JSON file")->required();

  std::vector<const char*> argv{"biopsim"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  }

  try {
    if (phantom->parsed()) return cmd_phantom(pa, args, out);
    if (simulate->parsed()) return cmd_simulate(sa, args, out);
    if (report->parsed()) return cmd_report(ra, args, out);
    if (segment->parsed()) return cmd_segment(ga, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::CalibrationFailed: return kCalibrationFailed;
      case ErrorCode::NoTrailFound:
      case ErrorCode::AmbiguousTrail: return kEmptySegmentation;
      case ErrorCode::InvalidArgument:
      case ErrorCode::TemplateInfeasible:
      case ErrorCode::GridTooLarge: return kBadArguments;
      default: return kBadInputFile;
    }
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInputFile;
  }
  return kBadArguments;
}

}  // namespace biopsim::cli
