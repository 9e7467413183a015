#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/json_util.hpp"
#include "biopsim/phantom.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace biopsim {

enum class Side { Right, Left };
enum class Level { Apex, Middle, Base };
enum class Position { Paramedian, Lateral };

struct StationId {
  Side side = Side::Right;
  Level level = Level::Apex;
  Position position = Position::Paramedian;

  /// Canonical 0..11 ordering: level-major, then side, then position.
  int index() const;
  static StationId from_index(int i);
  std::string label() const;

  bool operator==(const StationId&) const = default;
};

inline constexpr int kStationCount = 12;
inline constexpr double kZoneDiameterMm = 7.0;

std::string_view to_string(Side s);
std::string_view to_string(Level l);
std::string_view to_string(Position p);

struct TemplateEntry {
  StationId station;
  Sphere entry_zone;
  Sphere target_zone;
  Vec3 approach_direction = Vec3::UnitZ();
};

/// The ideal 12-core scheme on a specific gland.
struct ProtocolTemplate {
  ProstateModel model;
  std::array<TemplateEntry, kStationCount> entries;

  const TemplateEntry& at(const StationId& s) const;
};

struct TemplateLayout {
  std::array<double, 3> level_fractions{-0.6, 0.0, 0.6};  // of the cranio-caudal semi-axis
  double paramedian_fraction = 0.25;                       // of the transverse semi-axis
  double lateral_fraction = 0.6;
  double target_depth_fraction = 0.3;  // of centre -> anchor; the target sits 70% of the way in from the surface
  double probe_standoff_mm = 15.0;
};

/// Entry anchors on the posterior surface at the layout fractions; each target lies
/// on the segment from the gland centre to its anchor at target_depth_fraction, and
/// the needle approaches radially from a virtual probe origin outside the anchor.
/// Throws TemplateInfeasible when the template invariants cannot hold.
ProtocolTemplate default_template(const ProstateModel& model, const TemplateLayout& layout = {});

/// Throws ValidationFailed with the first violated invariant named.
void validate(const ProtocolTemplate& t);

Json template_to_json(const ProtocolTemplate& t);
ProtocolTemplate template_from_json(const Json& j);

void save_template(const ProtocolTemplate& t, const std::filesystem::path& path);
ProtocolTemplate load_template(const std::filesystem::path& path);

Json station_to_json(const StationId& s);
StationId station_from_json(const Json& j);

}  // namespace biopsim
