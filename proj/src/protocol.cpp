#include "biopsim/protocol.hpp"

#include "biopsim/error.hpp"

#include <cmath>

namespace biopsim {

namespace {

constexpr double kSurfaceTol = 1e-6;
constexpr double kZoneRadius = kZoneDiameterMm / 2.0;

template <typename E>
E parse_enum(const Json& j, const char* field, std::initializer_list<E> values) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw Error(ErrorCode::ValidationFailed, std::string("station.") + field + " missing");
  }
  const std::string s = j[field].get<std::string>();
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::ValidationFailed, std::string("unknown station.") + field + " '" + s + "'");
}

}  // namespace

std::string_view to_string(Side s) { return s == Side::Right ? "right" : "left"; }

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Apex: return "apex";
    case Level::Middle: return "middle";
    case Level::Base: return "base";
  }
  return "?";
}

std::string_view to_string(Position p) { return p == Position::Paramedian ? "paramedian" : "lateral"; }

int StationId::index() const {
  return static_cast<int>(level) * 4 + static_cast<int>(side) * 2 + static_cast<int>(position);
}

StationId StationId::from_index(int i) {
  if (i < 0 || i >= kStationCount) throw Error(ErrorCode::InvalidArgument, "station index out of range");
  return {static_cast<Side>((i / 2) % 2), static_cast<Level>(i / 4), static_cast<Position>(i % 2)};
}

std::string StationId::label() const {
  return std::string(to_string(side)) + "-" + std::string(to_string(level)) + "-" +
         std::string(to_string(position));
}

const TemplateEntry& ProtocolTemplate::at(const StationId& s) const { return entries[s.index()]; }

ProtocolTemplate default_template(const ProstateModel& model, const TemplateLayout& layout) {
  const Ellipsoid& e = model.shape;
  const Vec3& ax = e.semi_axes;
  ProtocolTemplate t;
  t.model = model;
  for (int i = 0; i < kStationCount; ++i) {
    const StationId s = StationId::from_index(i);
    const double side_sign = s.side == Side::Right ? 1.0 : -1.0;
    const double u = side_sign *
                     (s.position == Position::Paramedian ? layout.paramedian_fraction : layout.lateral_fraction);
    const double v = layout.level_fractions[static_cast<int>(s.level)];
    const double w2 = 1.0 - u * u - v * v;
    if (!(w2 > 0.0)) throw Error(ErrorCode::TemplateInfeasible, "layout fractions leave the surface");
    const Point3 anchor_local(u * ax.x(), v * ax.y(), -std::sqrt(w2) * ax.z());
    const Point3 target = e.to_world(layout.target_depth_fraction * anchor_local);
    const Point3 anchor = e.to_world(anchor_local);
    const Vec3 outward = (anchor - target).normalized();
    const Point3 probe = anchor + layout.probe_standoff_mm * outward;
    const Vec3 dir = (target - probe).normalized();

    TemplateEntry& entry = t.entries[i];
    entry.station = s;
    entry.approach_direction = dir;
    entry.entry_zone = {ray_ellipsoid_entry(probe, dir, e), kZoneRadius};
    entry.target_zone = {target, kZoneRadius};
  }
  try {
    validate(t);
  } catch (const Error& err) {
    throw Error(ErrorCode::TemplateInfeasible, err.detail());
  }
  return t;
}

void validate(const ProtocolTemplate& t) {
  const Ellipsoid& e = t.model.shape;
  for (int i = 0; i < kStationCount; ++i) {
    for (int j = i + 1; j < kStationCount; ++j) {
      if ((t.entries[i].entry_zone.center - t.entries[j].entry_zone.center).norm() < kZoneDiameterMm) {
        throw Error(ErrorCode::ValidationFailed, "entry overlap");
      }
    }
  }
  for (int i = 0; i < kStationCount; ++i) {
    const TemplateEntry& entry = t.entries[i];
    if (entry.station.index() != i) throw Error(ErrorCode::ValidationFailed, "duplicate or misordered station");
    if (entry.entry_zone.radius != kZoneRadius || entry.target_zone.radius != kZoneRadius) {
      throw Error(ErrorCode::ValidationFailed, "zone diameter must be 7 mm");
    }
    if (std::abs(entry.approach_direction.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::ValidationFailed, "approach direction not unit length");
    }
    if (ellipsoid_surface_distance(entry.entry_zone.center, e) > kSurfaceTol ||
        e.to_local(entry.entry_zone.center).z() >= 0.0) {
      throw Error(ErrorCode::ValidationFailed, "entry center not on the posterior surface");
    }
    if (!e.contains(entry.target_zone.center) ||
        !(ellipsoid_surface_distance(entry.target_zone.center, e) > kZoneRadius)) {
      throw Error(ErrorCode::ValidationFailed, "target zone not inside the prostate");
    }
  }
}

Json station_to_json(const StationId& s) {
  return Json{{"side", to_string(s.side)}, {"level", to_string(s.level)}, {"position", to_string(s.position)}};
}

StationId station_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ValidationFailed, "station must be an object");
  StationId s;
  s.side = parse_enum(j, "side", {Side::Right, Side::Left});
  s.level = parse_enum(j, "level", {Level::Apex, Level::Middle, Level::Base});
  s.position = parse_enum(j, "position", {Position::Paramedian, Position::Lateral});
  return s;
}

Json template_to_json(const ProtocolTemplate& t) {
  Json j;
  j["model_ref"] = model_to_json(t.model);
  Json entries = Json::array();
  for (const auto& e : t.entries) {
    entries.push_back(Json{{"station", station_to_json(e.station)},
                           {"entry_center_mm", to_json(e.entry_zone.center)},
                           {"target_center_mm", to_json(e.target_zone.center)},
                           {"zone_diameter_mm", kZoneDiameterMm},
                           {"approach_dir", to_json(e.approach_direction)}});
  }
  j["entries"] = entries;
  return j;
}

ProtocolTemplate template_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCode::ValidationFailed, "entries array missing");
  }
  const Json& entries = j["entries"];
  if (entries.size() != kStationCount) throw Error(ErrorCode::ValidationFailed, "12 entries required");
  if (!j.contains("model_ref")) throw Error(ErrorCode::ValidationFailed, "model_ref missing");

  ProtocolTemplate t;
  try {
    t.model = model_from_json(j["model_ref"]);
  } catch (const Error& err) {
    throw Error(ErrorCode::ValidationFailed, "model_ref: " + err.detail());
  }
  std::array<bool, kStationCount> seen{};
  for (const Json& ej : entries) {
    try {
      TemplateEntry e;
      e.station = station_from_json(ej.at("station"));
      const double diameter = ej.at("zone_diameter_mm").get<double>();
      if (diameter != kZoneDiameterMm) throw Error(ErrorCode::ValidationFailed, "zone diameter must be 7 mm");
      e.entry_zone = {vec3_from_json(ej.at("entry_center_mm"), "entry_center_mm"), diameter / 2.0};
      e.target_zone = {vec3_from_json(ej.at("target_center_mm"), "target_center_mm"), diameter / 2.0};
      e.approach_direction = vec3_from_json(ej.at("approach_dir"), "approach_dir");
      const int idx = e.station.index();
      if (seen[idx]) throw Error(ErrorCode::ValidationFailed, "duplicate station " + e.station.label());
      seen[idx] = true;
      t.entries[idx] = e;
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ValidationFailed, std::string("entry: ") + ex.what());
    } catch (const Error& err) {
      if (err.code() == ErrorCode::ValidationFailed) throw;
      throw Error(ErrorCode::ValidationFailed, err.detail());
    }
  }
  validate(t);
  return t;
}

void save_template(const ProtocolTemplate& t, const std::filesystem::path& path) {
  write_json_atomic(path, template_to_json(t));
}

ProtocolTemplate load_template(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& err) {
    throw Error(ErrorCode::ValidationFailed, err.detail());
  }
  return template_from_json(j);
}

}  // namespace biopsim
