#ifndef WEARBF_GEOMETRY_HPP
#define WEARBF_GEOMETRY_HPP

// Microphone-array geometry, look directions and steering vectors.
//
// Device frame: x forward, y left, z up. Azimuth is measured from +x towards
// +y, elevation from the horizontal plane towards +z. Steering vectors use a
// negative exponent for propagation delay: a source whose wavefront reaches
// microphone m after a delay tau_m contributes exp(-j*omega*tau_m).

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/common.hpp"

namespace wearbf {

class ArrayGeometry {
 public:
  ArrayGeometry() = default;

  ArrayGeometry(std::string id, std::vector<Vec3> mics)
      : id_(std::move(id)), mics_(std::move(mics)) {
    require(!mics_.empty(), ErrorKind::kData, "geometry '" + id_ + "' has no microphones");
    for (std::size_t i = 0; i < mics_.size(); ++i) {
      require(mics_[i].allFinite(), ErrorKind::kData,
              "geometry '" + id_ + "': mic " + std::to_string(i) + " has a non-finite coordinate");
      for (std::size_t j = 0; j < i; ++j) {
        require((mics_[i] - mics_[j]).norm() > 1e-6, ErrorKind::kData,
                "geometry '" + id_ + "': mics " + std::to_string(j) + " and " +
                    std::to_string(i) + " coincide");
      }
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<Vec3>& mics() const { return mics_; }
  const Vec3& mic(std::size_t i) const { return mics_.at(i); }
  std::size_t num_mics() const { return mics_.size(); }

  double aperture() const {
    double a = 0.0;
    for (const auto& p : mics_)
      for (const auto& q : mics_) a = std::max(a, (p - q).norm());
    return a;
  }

  bool operator==(const ArrayGeometry& o) const { return id_ == o.id_ && mics_ == o.mics_; }

 private:
  std::string id_;
  std::vector<Vec3> mics_;
};

/// A look or source direction. Without a range it denotes a far-field plane
/// wave; with a range it denotes a point at that distance from the origin.
struct DirectionSpec {
  double azimuth = 0.0;    // radians, (-pi, pi]
  double elevation = 0.0;  // radians, [-pi/2, pi/2]
  std::optional<double> range;

  static DirectionSpec far(double azimuth, double elevation = 0.0) {
    DirectionSpec d{wrap_angle(azimuth), elevation, std::nullopt};
    d.validate();
    return d;
  }

  static DirectionSpec near(const Vec3& point) {
    const double r = point.norm();
    require(r > 0.01, ErrorKind::kData, "near-field point must be more than 1 cm from the origin");
    DirectionSpec d;
    d.azimuth = wrap_angle(std::atan2(point.y(), point.x()));
    d.elevation = std::asin(std::clamp(point.z() / r, -1.0, 1.0));
    d.range = r;
    return d;
  }

  void validate() const {
    require(std::isfinite(azimuth) && azimuth > -kPi - 1e-12 && azimuth <= kPi + 1e-12,
            ErrorKind::kData, "azimuth out of (-pi, pi]");
    require(std::isfinite(elevation) && std::abs(elevation) <= kPi / 2 + 1e-12, ErrorKind::kData,
            "elevation out of [-pi/2, pi/2]");
    if (range) require(*range > 0.01, ErrorKind::kData, "direction range must exceed 0.01 m");
  }

  bool is_far_field() const { return !range.has_value(); }

  /// Unit vector pointing from the array origin towards the source.
  Vec3 unit() const {
    return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
            std::sin(elevation)};
  }

  Vec3 point() const {
    require(range.has_value(), ErrorKind::kData, "far-field direction has no point");
    return *range * unit();
  }

  bool operator==(const DirectionSpec&) const = default;
};

struct SteeringVector {
  double frequency = 0.0;
  CVector entries;

  std::size_t size() const { return static_cast<std::size_t>(entries.size()); }
};

// ---------------------------------------------------------------------------

/// Builds a geometry from the given channels of `geometry`, in order.
inline ArrayGeometry select_subset(const ArrayGeometry& geometry,
                                   const std::vector<std::size_t>& indices) {
  require(!indices.empty(), ErrorKind::kData, "invalid subset: empty index list");
  std::vector<Vec3> mics;
  std::string suffix;
  std::vector<bool> seen(geometry.num_mics(), false);
  for (std::size_t idx : indices) {
    require(idx < geometry.num_mics(), ErrorKind::kData,
            "invalid subset: index " + std::to_string(idx) + " >= M=" +
                std::to_string(geometry.num_mics()));
    require(!seen[idx], ErrorKind::kData, "invalid subset: duplicate index " + std::to_string(idx));
    seen[idx] = true;
    mics.push_back(geometry.mic(idx));
    suffix += (suffix.empty() ? "" : "-") + std::to_string(idx);
  }
  return ArrayGeometry(geometry.id() + "[" + suffix + "]", std::move(mics));
}

inline SteeringVector far_field_atf(const ArrayGeometry& geometry, const DirectionSpec& dir,
                                    double frequency, double sound_speed = kDefaultSoundSpeed) {
  require(frequency >= 0.0, ErrorKind::kData, "frequency must be non-negative");
  require(dir.is_far_field(), ErrorKind::kData, "far_field_atf called with a ranged direction");
  const double omega = 2.0 * kPi * frequency;
  // The wave propagates along -unit(); a mic at r hears it r.(-u)/c later
  // than the origin.
  const Vec3 propagation = -dir.unit();
  SteeringVector sv;
  sv.frequency = frequency;
  sv.entries.resize(static_cast<Eigen::Index>(geometry.num_mics()));
  for (std::size_t m = 0; m < geometry.num_mics(); ++m) {
    const double tau = geometry.mic(m).dot(propagation) / sound_speed;
    sv.entries(static_cast<Eigen::Index>(m)) = std::polar(1.0, -omega * tau);
  }
  return sv;
}

inline SteeringVector near_field_atf(const ArrayGeometry& geometry, const Vec3& point,
                                     double frequency, double sound_speed = kDefaultSoundSpeed) {
  require(frequency >= 0.0, ErrorKind::kData, "frequency must be non-negative");
  std::vector<double> dist(geometry.num_mics());
  double d_ref = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < geometry.num_mics(); ++m) {
    dist[m] = (point - geometry.mic(m)).norm();
    require(dist[m] > 0.01, ErrorKind::kData,
            "degenerate source: point within 1 cm of mic " + std::to_string(m));
    d_ref = std::min(d_ref, dist[m]);
  }
  const double omega = 2.0 * kPi * frequency;
  SteeringVector sv;
  sv.frequency = frequency;
  sv.entries.resize(static_cast<Eigen::Index>(geometry.num_mics()));
  for (std::size_t m = 0; m < geometry.num_mics(); ++m)
    sv.entries(static_cast<Eigen::Index>(m)) =
        std::polar(d_ref / dist[m], -omega * dist[m] / sound_speed);
  return sv;
}

/// Analytic free-field response: plane wave for far-field directions, point
/// source for ranged ones.
inline SteeringVector free_field_atf(const ArrayGeometry& geometry, const DirectionSpec& dir,
                                     double frequency, double sound_speed = kDefaultSoundSpeed) {
  return dir.is_far_field() ? far_field_atf(geometry, dir, frequency, sound_speed)
                            : near_field_atf(geometry, dir.point(), frequency, sound_speed);
}

// ---------------------------------------------------------------------------

/// Steering vectors sampled over directions and a frequency grid.
class AtfSet {
 public:
  AtfSet() = default;

  AtfSet(std::string geometry_id, std::size_t num_mics, std::vector<double> frequencies,
         std::vector<DirectionSpec> directions)
      : geometry_id_(std::move(geometry_id)),
        num_mics_(num_mics),
        frequencies_(std::move(frequencies)),
        directions_(std::move(directions)) {
    require(num_mics_ >= 1, ErrorKind::kData, "ATF set needs at least one channel");
    for (std::size_t i = 1; i < frequencies_.size(); ++i)
      require(frequencies_[i] > frequencies_[i - 1], ErrorKind::kData,
              "ATF frequency grid must be strictly increasing");
    data_.assign(directions_.size() * frequencies_.size(),
                 CVector::Zero(static_cast<Eigen::Index>(num_mics_)));
  }

  const std::string& geometry_id() const { return geometry_id_; }
  std::size_t num_mics() const { return num_mics_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  const std::vector<DirectionSpec>& directions() const { return directions_; }

  CVector& at(std::size_t dir, std::size_t freq) { return data_.at(dir * frequencies_.size() + freq); }
  const CVector& at(std::size_t dir, std::size_t freq) const {
    return data_.at(dir * frequencies_.size() + freq);
  }

  void set(std::size_t dir, std::size_t freq, const CVector& v) {
    require(static_cast<std::size_t>(v.size()) == num_mics_, ErrorKind::kData,
            "steering vector length does not match ATF set channel count");
    at(dir, freq) = v;
  }

  SteeringVector steering(std::size_t dir, std::size_t freq) const {
    return {frequencies_.at(freq), at(dir, freq)};
  }

  std::optional<std::size_t> find_frequency(double f) const {
    for (std::size_t i = 0; i < frequencies_.size(); ++i)
      if (std::abs(frequencies_[i] - f) <= 1e-9 * std::max(1.0, f)) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> find_direction(const DirectionSpec& d) const {
    for (std::size_t i = 0; i < directions_.size(); ++i) {
      const auto& e = directions_[i];
      if (std::abs(wrap_angle(e.azimuth - d.azimuth)) <= 1e-9 &&
          std::abs(e.elevation - d.elevation) <= 1e-9 && e.range.has_value() == d.range.has_value() &&
          (!e.range || std::abs(*e.range - *d.range) <= 1e-9))
        return i;
    }
    return std::nullopt;
  }

  bool operator==(const AtfSet& o) const {
    if (geometry_id_ != o.geometry_id_ || num_mics_ != o.num_mics_ ||
        frequencies_ != o.frequencies_ || directions_ != o.directions_)
      return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (data_[i] != o.data_[i]) return false;
    return true;
  }

 private:
  std::string geometry_id_;
  std::size_t num_mics_ = 0;
  std::vector<double> frequencies_;
  std::vector<DirectionSpec> directions_;
  std::vector<CVector> data_;
};

inline AtfSet make_free_field_atfs(const ArrayGeometry& geometry,
                                   const std::vector<DirectionSpec>& directions,
                                   const std::vector<double>& frequencies,
                                   double sound_speed = kDefaultSoundSpeed) {
  AtfSet set(geometry.id(), geometry.num_mics(), frequencies, directions);
  for (std::size_t d = 0; d < directions.size(); ++d)
    for (std::size_t f = 0; f < frequencies.size(); ++f)
      set.at(d, f) = free_field_atf(geometry, directions[d], frequencies[f], sound_speed).entries;
  return set;
}

/// Where steering vectors come from when designing: the analytic free-field
/// model or a measured (imported) ATF set.
class SteeringSource {
 public:
  explicit SteeringSource(double sound_speed = kDefaultSoundSpeed) : sound_speed_(sound_speed) {}
  SteeringSource(AtfSet atfs, double sound_speed)
      : sound_speed_(sound_speed), atfs_(std::move(atfs)) {}

  bool is_measured() const { return atfs_.has_value(); }
  double sound_speed() const { return sound_speed_; }
  const AtfSet* atfs() const { return atfs_ ? &*atfs_ : nullptr; }

  SteeringVector steer(const ArrayGeometry& geometry, const DirectionSpec& dir,
                       double frequency) const {
    if (!atfs_) return free_field_atf(geometry, dir, frequency, sound_speed_);
    require(atfs_->num_mics() == geometry.num_mics(), ErrorKind::kData,
            "ATF set channel count does not match geometry");
    const auto di = atfs_->find_direction(dir);
    require(di.has_value(), ErrorKind::kData,
            "direction (az " + std::to_string(rad2deg(dir.azimuth)) + " deg) not in ATF set");
    const auto fi = atfs_->find_frequency(frequency);
    require(fi.has_value(), ErrorKind::kData,
            "frequency " + std::to_string(frequency) + " Hz not on ATF grid (interpolation unsupported)");
    return atfs_->steering(*di, *fi);
  }

 private:
  double sound_speed_;
  std::optional<AtfSet> atfs_;
};

// ---------------------------------------------------------------------------
// Reference geometry.

/// A seven-microphone glasses-like layout (meters, device frame). Positions
/// are illustrative, not measured coordinates of any commercial device.
///   0 nose pad, 1 bridge top, 2/3 left/right front rim, 4/5 left/right
///   temple front, 6 left temple rear.
inline ArrayGeometry reference_glasses() {
  return ArrayGeometry("glasses7", {
                                       {0.010, 0.000, -0.025},
                                       {0.012, 0.000, 0.018},
                                       {0.000, 0.068, 0.012},
                                       {0.000, -0.068, 0.012},
                                       {-0.045, 0.075, 0.004},
                                       {-0.045, -0.075, 0.004},
                                       {-0.110, 0.078, -0.004},
                                   });
}

/// Five-mic working subset of the reference glasses (channels 2..6).
inline ArrayGeometry reference_glasses_5mic() {
  return select_subset(reference_glasses(), {2, 3, 4, 5, 6});
}

/// Mouth position relative to the array reference point.
inline Vec3 default_mouth_point() { return {0.08, 0.0, -0.06}; }

// ---------------------------------------------------------------------------
// Geometry files: {"id": "...", "mics": [[x, y, z], ...]}

inline nlohmann::json geometry_to_json(const ArrayGeometry& g) {
  nlohmann::json mics = nlohmann::json::array();
  for (const auto& p : g.mics()) mics.push_back({p.x(), p.y(), p.z()});
  return {{"id", g.id()}, {"mics", mics}};
}

inline ArrayGeometry geometry_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::kData, "geometry must be an object");
  for (const auto& [key, _] : j.items())
    require(key == "id" || key == "mics", ErrorKind::kData, "geometry: unknown key '" + key + "'");
  require(j.contains("id") && j["id"].is_string(), ErrorKind::kData, "geometry: missing string 'id'");
  require(j.contains("mics") && j["mics"].is_array(), ErrorKind::kData, "geometry: missing array 'mics'");
  std::vector<Vec3> mics;
  for (std::size_t i = 0; i < j["mics"].size(); ++i) {
    const auto& p = j["mics"][i];
    require(p.is_array() && p.size() == 3 && p[0].is_number() && p[1].is_number() && p[2].is_number(),
            ErrorKind::kData, "geometry: mics[" + std::to_string(i) + "] must be [x, y, z]");
    mics.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return ArrayGeometry(j["id"].get<std::string>(), std::move(mics));
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kData, path + ": " + e.what());
  }
}

inline ArrayGeometry load_geometry(const std::string& path) {
  try {
    return geometry_from_json(read_json_file(path));
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

inline void save_geometry(const ArrayGeometry& g, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  out << geometry_to_json(g).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// ATF files: one JSON header line, then little-endian float64 payload with
// interleaved (re, im) ordered direction-major, then frequency, then channel.

inline nlohmann::json direction_to_json(const DirectionSpec& d) {
  nlohmann::json j = {{"azimuth", d.azimuth}, {"elevation", d.elevation}};
  j["range"] = d.range ? nlohmann::json(*d.range) : nlohmann::json(nullptr);
  return j;
}

inline DirectionSpec direction_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("azimuth") && j.contains("elevation"), ErrorKind::kData,
          "direction needs azimuth and elevation");
  DirectionSpec d;
  d.azimuth = j["azimuth"].get<double>();
  d.elevation = j["elevation"].get<double>();
  if (j.contains("range") && !j["range"].is_null()) d.range = j["range"].get<double>();
  d.validate();
  return d;
}

inline void write_atfs(const AtfSet& set, std::ostream& out) {
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : set.directions()) dirs.push_back(direction_to_json(d));
  const nlohmann::json header = {
      {"format", "wearbf-atf"},
      {"version", 1},
      {"id", set.geometry_id()},
      {"M", set.num_mics()},
      {"frequencies", set.frequencies()},
      {"directions", dirs},
      {"channels_per_direction", std::vector<std::size_t>(set.directions().size(), set.num_mics())},
  };
  out << header.dump() << '\n';
  for (std::size_t d = 0; d < set.directions().size(); ++d)
    for (std::size_t f = 0; f < set.frequencies().size(); ++f)
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(set.num_mics()); ++m) {
        write_le(out, set.at(d, f)(m).real());
        write_le(out, set.at(d, f)(m).imag());
      }
}

inline AtfSet read_atfs_unchecked(std::istream& in, const std::string& where) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kData, where + ": missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kData, where + ": header: " + e.what());
  }
  require(h.value("format", "") == "wearbf-atf", ErrorKind::kData, where + ": not an ATF file");
  require(h.value("version", 0) == 1, ErrorKind::kData, where + ": unsupported ATF version");
  const auto num_mics = h.at("M").get<std::size_t>();
  std::vector<DirectionSpec> dirs;
  for (const auto& jd : h.at("directions")) dirs.push_back(direction_from_json(jd));
  if (h.contains("channels_per_direction")) {
    const auto& cpd = h["channels_per_direction"];
    require(cpd.size() == dirs.size(), ErrorKind::kData,
            where + ": channels_per_direction has " + std::to_string(cpd.size()) +
                " entries for " + std::to_string(dirs.size()) + " directions");
    for (std::size_t d = 0; d < cpd.size(); ++d)
      require(cpd[d].get<std::size_t>() == num_mics, ErrorKind::kData,
              where + ": direction " + std::to_string(d) + " has " +
                  std::to_string(cpd[d].get<std::size_t>()) + " channels, header says M=" +
                  std::to_string(num_mics));
  }
  AtfSet set(h.at("id").get<std::string>(), num_mics, h.at("frequencies").get<std::vector<double>>(),
             std::move(dirs));
  for (std::size_t d = 0; d < set.directions().size(); ++d)
    for (std::size_t f = 0; f < set.frequencies().size(); ++f)
      for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(num_mics); ++m) {
        try {
          const double re = read_le<double>(in);
          const double im = read_le<double>(in);
          set.at(d, f)(m) = Complex(re, im);
        } catch (const Error&) {
          fail(ErrorKind::kData, where + ": payload truncated at direction " + std::to_string(d) +
                                     ", frequency " + std::to_string(f) + ", channel " +
                                     std::to_string(m));
        }
      }
  in.peek();
  require(in.eof(), ErrorKind::kData, where + ": trailing bytes after payload");
  return set;
}

inline AtfSet read_atfs(std::istream& in, const std::string& where = "<stream>") {
  try {
    return read_atfs_unchecked(in, where);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, where + ": malformed header: " + e.what());
  }
}

inline void export_atfs(const AtfSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  write_atfs(set, out);
}

inline AtfSet import_atfs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  return read_atfs(in, path);
}

}  // namespace wearbf

#endif  // WEARBF_GEOMETRY_HPP
