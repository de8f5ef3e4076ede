#include "vmic/room_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vmic/error.hpp"

namespace vmic {

namespace {

constexpr double kCornerTolerance = 1e-9;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view token, const std::string& key) {
  token = trim(token);
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(key, "expected a decimal number, got '" + std::string(token) + "'");
  }
  return value;
}

int parse_int(std::string_view token, const std::string& key) {
  token = trim(token);
  int value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key, "expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

Vec3 parse_vec3(std::string_view token, const std::string& key) {
  const auto parts = split(token, ',');
  if (parts.size() != 3) throw ConfigError(key, "expected x,y,z");
  return {parse_double(parts[0], key), parse_double(parts[1], key), parse_double(parts[2], key)};
}

std::array<Point2, 4> parse_corners(std::string_view token, const std::string& key) {
  const auto pairs = split(token, ';');
  if (pairs.size() != 4) throw ConfigError(key, "expected exactly 4 corners");
  std::array<Point2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto xy = split(pairs[i], ',');
    if (xy.size() != 2) throw ConfigError(key, "expected x,y pairs separated by ';'");
    out[i] = {parse_double(xy[0], key), parse_double(xy[1], key)};
  }
  return out;
}

bool near(double a, double b) { return std::abs(a - b) <= kCornerTolerance; }

std::array<Point2, 4> canonical_rectangle(const std::array<Point2, 4>& corners) {
  double xmin = corners[0].x, xmax = corners[0].x, ymin = corners[0].y, ymax = corners[0].y;
  for (const auto& c : corners) {
    xmin = std::min(xmin, c.x);
    xmax = std::max(xmax, c.x);
    ymin = std::min(ymin, c.y);
    ymax = std::max(ymax, c.y);
  }
  if (!(xmax - xmin > kCornerTolerance) || !(ymax - ymin > kCornerTolerance)) {
    throw ConfigError("room.corners", "rectangle has zero area");
  }
  const std::array<Point2, 4> expected{{{xmin, ymin}, {xmin, ymax}, {xmax, ymax}, {xmax, ymin}}};
  std::array<bool, 4> used{};
  for (const auto& c : corners) {
    bool matched = false;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!used[i] && near(c.x, expected[i].x) && near(c.y, expected[i].y)) {
        used[i] = true;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError("room.corners", "corners do not form an axis-aligned rectangle");
    }
  }
  return expected;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_vec3(const Vec3& p) {
  return format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z);
}

SourceRole parse_role(std::string_view token, const std::string& key) {
  token = trim(token);
  if (token == "speaker") return SourceRole::kSpeaker;
  if (token == "noise") return SourceRole::kNoise;
  if (token == "silent") return SourceRole::kSilent;
  throw ConfigError(key, "role must be speaker, noise or silent");
}

struct Section {
  std::string kind;   // room, source, mic
  std::string label;  // empty for [room]
  std::map<std::string, std::string> values;
  int line = 0;
};

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

RoomModel::RoomModel(std::array<Point2, 4> corners, double extrude, double absorption,
                     int max_order, double speed_of_sound, double sample_rate,
                     FractionalDelay delay_mode)
    : corners_(canonical_rectangle(corners)),
      extrude_(extrude),
      absorption_(absorption),
      max_order_(max_order),
      speed_of_sound_(speed_of_sound),
      sample_rate_(sample_rate),
      delay_mode_(delay_mode) {
  if (!(extrude > 0.0)) throw ConfigError("room.extrude", "must be > 0");
  if (!(absorption > 0.0 && absorption <= 1.0)) {
    throw ConfigError("room.absorption", "must lie in (0, 1]");
  }
  if (max_order < 0) throw ConfigError("room.max_order", "must be >= 0");
  if (!(speed_of_sound > 0.0)) throw ConfigError("room.speed_of_sound", "must be > 0");
  if (!(sample_rate > 0.0)) throw ConfigError("room.sample_rate", "must be > 0");
}

Vec3 RoomModel::dimensions() const {
  return {corners_[2].x - corners_[0].x, corners_[2].y - corners_[0].y, extrude_};
}

double RoomModel::volume() const {
  const auto d = dimensions();
  return d.x * d.y * d.z;
}

double RoomModel::surface_area() const {
  const auto d = dimensions();
  return 2.0 * (d.x * d.y + d.x * d.z + d.y * d.z);
}

bool RoomModel::strictly_inside(const Vec3& p) const {
  const auto lo = lower();
  const auto hi = upper();
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] > lo[a] && p[a] < hi[a])) return false;
  }
  return true;
}

std::string_view to_string(SourceRole role) {
  switch (role) {
    case SourceRole::kSpeaker:
      return "speaker";
    case SourceRole::kNoise:
      return "noise";
    case SourceRole::kSilent:
      return "silent";
  }
  return "speaker";
}

const SourceSpec& RoomConfig::source(std::string_view label) const {
  for (const auto& s : sources) {
    if (s.label == label) return s;
  }
  throw InputError("unknown source label '" + std::string(label) + "'");
}

RoomConfig parse_room_config(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                                 : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      }
      const auto header = trim(line.substr(1, line.size() - 2));
      Section sec;
      sec.line = line_no;
      const auto space = header.find_first_of(" \t");
      sec.kind = std::string(header.substr(0, space));
      if (space != std::string_view::npos) sec.label = std::string(trim(header.substr(space)));
      if (sec.kind == "room") {
        if (!sec.label.empty()) throw ConfigError("room", "[room] takes no label");
      } else if (sec.kind == "source" || sec.kind == "mic") {
        if (sec.label.empty()) throw ConfigError(sec.kind, "section requires a label");
      } else {
        throw ConfigError("line " + std::to_string(line_no),
                          "unknown section '" + std::string(header) + "'");
      }
      sections.push_back(std::move(sec));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    if (sections.empty()) {
      throw ConfigError("line " + std::to_string(line_no), "key outside of any section");
    }
    auto& sec = sections.back();
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!sec.values.emplace(key, value).second) {
      throw ConfigError(sec.kind + (sec.label.empty() ? "" : " " + sec.label) + "." + key,
                        "duplicate key");
    }
  }

  const Section* room_sec = nullptr;
  for (const auto& sec : sections) {
    if (sec.kind == "room") {
      if (room_sec) throw ConfigError("room", "duplicate [room] section");
      room_sec = &sec;
    }
  }
  if (!room_sec) throw ConfigError("room", "missing [room] section");

  auto require = [](const Section& sec, const std::string& prefix,
                    const std::string& key) -> const std::string& {
    const auto it = sec.values.find(key);
    if (it == sec.values.end()) throw ConfigError(prefix + "." + key, "missing required key");
    return it->second;
  };
  auto check_keys = [](const Section& sec, const std::string& prefix,
                       std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : sec.values) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        throw ConfigError(prefix + "." + k, "unknown key");
      }
    }
  };

  check_keys(*room_sec, "room",
             {"corners", "extrude", "absorption", "max_order", "speed_of_sound", "sample_rate",
              "fractional_delay"});
  const auto corners = parse_corners(require(*room_sec, "room", "corners"), "room.corners");
  const double extrude = parse_double(require(*room_sec, "room", "extrude"), "room.extrude");
  const double absorption =
      parse_double(require(*room_sec, "room", "absorption"), "room.absorption");
  const int max_order = parse_int(require(*room_sec, "room", "max_order"), "room.max_order");
  double c = RoomModel::kDefaultSpeedOfSound;
  double fs = RoomModel::kDefaultSampleRate;
  auto delay_mode = FractionalDelay::kNearest;
  if (auto it = room_sec->values.find("speed_of_sound"); it != room_sec->values.end()) {
    c = parse_double(it->second, "room.speed_of_sound");
  }
  if (auto it = room_sec->values.find("sample_rate"); it != room_sec->values.end()) {
    fs = parse_double(it->second, "room.sample_rate");
  }
  if (auto it = room_sec->values.find("fractional_delay"); it != room_sec->values.end()) {
    if (it->second == "nearest") {
      delay_mode = FractionalDelay::kNearest;
    } else if (it->second == "sinc") {
      delay_mode = FractionalDelay::kSinc;
    } else {
      throw ConfigError("room.fractional_delay", "must be nearest or sinc");
    }
  }
  RoomModel room(corners, extrude, absorption, max_order, c, fs, delay_mode);

  std::vector<SourceSpec> sources;
  MicArraySpec mics;
  bool have_reference = false;
  std::set<std::string> source_labels;
  std::set<std::string> mic_labels;
  for (const auto& sec : sections) {
    const std::string prefix = sec.kind + " " + sec.label;
    if (sec.kind == "source") {
      check_keys(sec, prefix, {"position", "role"});
      if (!source_labels.insert(sec.label).second) {
        throw ConfigError(prefix, "duplicate source label");
      }
      SourceSpec src;
      src.label = sec.label;
      src.position = parse_vec3(require(sec, prefix, "position"), prefix + ".position");
      if (auto it = sec.values.find("role"); it != sec.values.end()) {
        src.role = parse_role(it->second, prefix + ".role");
      }
      if (!room.strictly_inside(src.position)) {
        throw ConfigError(prefix + ".position", "position outside room");
      }
      sources.push_back(std::move(src));
    } else if (sec.kind == "mic") {
      check_keys(sec, prefix, {"position", "reference"});
      if (!mic_labels.insert(sec.label).second) {
        throw ConfigError(prefix, "duplicate mic label");
      }
      MicSpec mic{sec.label, parse_vec3(require(sec, prefix, "position"), prefix + ".position")};
      if (!room.strictly_inside(mic.position)) {
        throw ConfigError(prefix + ".position", "position outside room");
      }
      if (auto it = sec.values.find("reference"); it != sec.values.end()) {
        if (it->second == "true") {
          if (have_reference) {
            throw ConfigError(prefix + ".reference", "duplicate reference microphone");
          }
          have_reference = true;
          mics.reference_index = mics.mics.size();
        } else if (it->second != "false") {
          throw ConfigError(prefix + ".reference", "must be true or false");
        }
      }
      mics.mics.push_back(std::move(mic));
    }
  }
  if (sources.empty()) throw ConfigError("source", "at least one [source] section required");
  if (mics.mics.size() < 2) throw ConfigError("mic", "at least two [mic] sections required");
  if (!have_reference) throw ConfigError("mic.reference", "no reference microphone");

  return RoomConfig{std::move(room), std::move(sources), std::move(mics)};
}

RoomConfig load_room_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open room config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_room_config(buf.str());
}

std::string serialize_room_config(const RoomConfig& config) {
  const auto& room = config.room;
  std::ostringstream out;
  out << "[room]\ncorners = ";
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) out << "; ";
    out << format_double(room.corners()[i].x) << "," << format_double(room.corners()[i].y);
  }
  out << "\nextrude = " << format_double(room.extrude())
      << "\nabsorption = " << format_double(room.absorption())
      << "\nmax_order = " << room.max_order()
      << "\nspeed_of_sound = " << format_double(room.speed_of_sound())
      << "\nsample_rate = " << format_double(room.sample_rate()) << "\nfractional_delay = "
      << (room.delay_mode() == FractionalDelay::kSinc ? "sinc" : "nearest") << "\n";
  for (const auto& s : config.sources) {
    out << "\n[source " << s.label << "]\nposition = " << format_vec3(s.position)
        << "\nrole = " << to_string(s.role) << "\n";
  }
  for (std::size_t i = 0; i < config.mics.mics.size(); ++i) {
    const auto& m = config.mics.mics[i];
    out << "\n[mic " << m.label << "]\nposition = " << format_vec3(m.position) << "\n";
    if (i == config.mics.reference_index) out << "reference = true\n";
  }
  return out.str();
}

double reverberation_time(const RoomModel& room) {
  return 55.25 * room.volume() /
         (room.speed_of_sound() * room.surface_area() * room.absorption());
}

double max_alias_free_spacing(double f_max, double speed_of_sound) {
  if (!(f_max > 0.0)) throw std::invalid_argument("f_max must be > 0");
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("speed of sound must be > 0");
  return speed_of_sound / (2.0 * f_max);
}

std::vector<GeometryWarning> validate_geometry(const RoomConfig& config, double f_max) {
  std::vector<GeometryWarning> warnings;
  const double limit = max_alias_free_spacing(f_max, config.room.speed_of_sound());
  const auto& mics = config.mics.mics;
  for (std::size_t i = 0; i < mics.size(); ++i) {
    for (std::size_t j = i + 1; j < mics.size(); ++j) {
      const double d = distance(mics[i].position, mics[j].position);
      if (d > limit) {
        std::ostringstream msg;
        msg << "mics " << mics[i].label << "-" << mics[j].label << " are " << d
            << " m apart; spatial aliasing above " << limit << " m at " << f_max << " Hz";
        warnings.push_back({GeometryWarning::Kind::kSpatialAliasing, msg.str()});
      }
    }
  }
  // Only the vertical walls matter here: the speaker's back should face one.
  const auto lo = config.room.lower();
  const auto hi = config.room.upper();
  for (const auto& s : config.sources) {
    const double wall = std::min({s.position.x - lo.x, hi.x - s.position.x,
                                  s.position.y - lo.y, hi.y - s.position.y});
    if (wall > kWallProximity) {
      std::ostringstream msg;
      msg << "source " << s.label << " is " << wall << " m from the nearest wall (> "
          << kWallProximity << " m)";
      warnings.push_back({GeometryWarning::Kind::kSourceAwayFromWall, msg.str()});
    }
  }
  return warnings;
}

}  // namespace vmic
