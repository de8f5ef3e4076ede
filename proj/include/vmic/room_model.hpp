#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace vmic {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class FractionalDelay { kNearest, kSinc };

// Shoebox room: axis-aligned rectangle extruded from z = 0 to z = extrude.
class RoomModel {
 public:
  static constexpr double kDefaultSpeedOfSound = 343.0;
  static constexpr double kDefaultSampleRate = 48000.0;

  // Corners in any rotational order; throws ConfigError("room.*") if the
  // rectangle is not axis-aligned or any scalar is out of range.
  RoomModel(std::array<Point2, 4> corners, double extrude, double absorption, int max_order,
            double speed_of_sound = kDefaultSpeedOfSound,
            double sample_rate = kDefaultSampleRate,
            FractionalDelay delay_mode = FractionalDelay::kNearest);

  // Canonical order: (min-x,min-y), (min-x,max-y), (max-x,max-y), (max-x,min-y).
  const std::array<Point2, 4>& corners() const { return corners_; }
  double extrude() const { return extrude_; }
  double absorption() const { return absorption_; }
  int max_order() const { return max_order_; }
  double speed_of_sound() const { return speed_of_sound_; }
  double sample_rate() const { return sample_rate_; }
  FractionalDelay delay_mode() const { return delay_mode_; }

  Vec3 lower() const { return {corners_[0].x, corners_[0].y, 0.0}; }
  Vec3 upper() const { return {corners_[2].x, corners_[2].y, extrude_}; }
  Vec3 dimensions() const;
  double volume() const;
  double surface_area() const;

  bool strictly_inside(const Vec3& p) const;

  friend bool operator==(const RoomModel&, const RoomModel&) = default;

 private:
  std::array<Point2, 4> corners_;
  double extrude_;
  double absorption_;
  int max_order_;
  double speed_of_sound_;
  double sample_rate_;
  FractionalDelay delay_mode_;
};

enum class SourceRole { kSpeaker, kNoise, kSilent };

std::string_view to_string(SourceRole role);

struct SourceSpec {
  std::string label;
  Vec3 position;
  SourceRole role = SourceRole::kSpeaker;
  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct MicSpec {
  std::string label;
  Vec3 position;
  friend bool operator==(const MicSpec&, const MicSpec&) = default;
};

struct MicArraySpec {
  std::vector<MicSpec> mics;
  std::size_t reference_index = 0;

  const Vec3& reference() const { return mics.at(reference_index).position; }
  friend bool operator==(const MicArraySpec&, const MicArraySpec&) = default;
};

struct RoomConfig {
  RoomModel room;
  std::vector<SourceSpec> sources;
  MicArraySpec mics;

  const SourceSpec& source(std::string_view label) const;
  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;
};

// Parses the bracketed-section room configuration format. Every violated
// invariant raises ConfigError naming the offending key.
RoomConfig parse_room_config(std::string_view text);
RoomConfig load_room_config(const std::string& path);

// Inverse of parse_room_config; doubles are written with round-trip precision.
std::string serialize_room_config(const RoomConfig& config);

// Sabine's formula, all six faces counted in the surface area.
double reverberation_time(const RoomModel& room);

// Largest microphone spacing free of spatial aliasing up to f_max.
double max_alias_free_spacing(double f_max, double speed_of_sound);

struct GeometryWarning {
  enum class Kind { kSpatialAliasing, kSourceAwayFromWall };
  Kind kind;
  std::string message;
};

// Distance below which a source counts as "against a wall".
inline constexpr double kWallProximity = 0.05;

std::vector<GeometryWarning> validate_geometry(const RoomConfig& config, double f_max);

}  // namespace vmic
