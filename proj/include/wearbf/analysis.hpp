#ifndef WEARBF_ANALYSIS_HPP
#define WEARBF_ANALYSIS_HPP

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/beamformer.hpp"
#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"

namespace wearbf {

/// Horizontal-plane response, in dB relative to the look response.
struct BeamPattern {
  double frequency = 0.0;
  std::vector<double> azimuths;  // radians, covering (-pi, pi]
  std::vector<double> response_db;
};

inline double magnitude_db(double x) { return 20.0 * std::log10(std::max(x, 1e-300)); }

/// Azimuth grid (-180 + res, ..., 180] degrees in radians.
inline std::vector<double> azimuth_grid(double resolution_deg) {
  require(resolution_deg > 0.0, ErrorKind::kData, "pattern resolution must be positive");
  const double steps = 360.0 / resolution_deg;
  const auto n = static_cast<long>(std::llround(steps));
  require(n >= 1 && std::abs(steps - static_cast<double>(n)) < 1e-9, ErrorKind::kData,
          "pattern resolution must divide 360 degrees");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = deg2rad(-180.0 + resolution_deg * static_cast<double>(i + 1));
  return grid;
}

/// `look` is the design steering vector; the pattern is normalized by
/// |h^H look| so the look response is 0 dB.
inline BeamPattern beam_pattern(const CVector& h, const ArrayGeometry& geometry,
                                const SteeringVector& look, double resolution_deg = 1.0,
                                double sound_speed = kDefaultSoundSpeed) {
  BeamPattern p;
  p.frequency = look.frequency;
  p.azimuths = azimuth_grid(resolution_deg);
  const double ref = std::abs(response(h, look.entries));
  require(ref > 0.0, ErrorKind::kNumerical, "beamformer has zero look-direction response");
  p.response_db.reserve(p.azimuths.size());
  for (double az : p.azimuths) {
    const auto g = far_field_atf(geometry, DirectionSpec{az, 0.0, std::nullopt}, look.frequency, sound_speed);
    p.response_db.push_back(magnitude_db(std::abs(response(h, g.entries)) / ref));
  }
  return p;
}

inline BeamPattern beam_pattern(const BeamformerWeights& h, const ArrayGeometry& geometry,
                                const DirectionSpec& look, double resolution_deg = 1.0,
                                double sound_speed = kDefaultSoundSpeed) {
  return beam_pattern(h.weights, geometry, free_field_atf(geometry, look, h.frequency, sound_speed),
                      resolution_deg, sound_speed);
}

/// 10 log10(|h^H g|^2 / ||h||^2)
inline double white_noise_gain_db(const CVector& h, const CVector& g) {
  const double hn = h.squaredNorm();
  require(hn > 0.0, ErrorKind::kData, "white noise gain of zero weights is undefined");
  return 10.0 * std::log10(std::norm(response(h, g)) / hn);
}

/// 10 log10(|h^H g|^2 / h^H Phi_dd h)
inline double directivity_index_db(const CVector& h, const CVector& g, const CMatrix& diffuse) {
  const double den = objective(h, diffuse);
  require(den > 0.0, ErrorKind::kNumerical, "diffuse output power is not positive");
  return 10.0 * std::log10(std::norm(response(h, g)) / den);
}

// ---------------------------------------------------------------------------

inline constexpr double kPatternFloorDb = -80.0;

inline std::string format_fixed(double v, int decimals = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

/// Writes (azimuth_deg, response_db) rows with the -80 dB export floor.
inline void write_pattern_csv(const BeamPattern& p, std::ostream& out) {
  out << "azimuth_deg,response_db\n";
  for (std::size_t i = 0; i < p.azimuths.size(); ++i)
    out << format_fixed(rad2deg(p.azimuths[i])) << ','
        << format_fixed(std::max(p.response_db[i], kPatternFloorDb)) << '\n';
}

inline void write_pattern_json(const BeamPattern& p, std::ostream& out) {
  // Values go through the same fixed-point rendering as the CSV so both
  // formats carry identical numbers.
  out << "{\"frequency\":" << format_fixed(p.frequency) << ",\"rows\":[";
  for (std::size_t i = 0; i < p.azimuths.size(); ++i) {
    if (i) out << ',';
    out << "{\"azimuth_deg\":" << format_fixed(rad2deg(p.azimuths[i]))
        << ",\"response_db\":" << format_fixed(std::max(p.response_db[i], kPatternFloorDb)) << '}';
  }
  out << "]}\n";
}

inline void export_pattern(const BeamPattern& p, const std::string& path, const std::string& format) {
  require(format == "csv" || format == "json", ErrorKind::kConfig, "pattern format must be csv or json");
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  if (format == "csv")
    write_pattern_csv(p, out);
  else
    write_pattern_json(p, out);
  require(static_cast<bool>(out), ErrorKind::kData, "write failed for '" + path + "'");
}

/// Parsed rows of an exported pattern: (azimuth_deg, response_db).
inline std::vector<std::pair<double, double>> read_pattern_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    const auto j = nlohmann::json::parse(in);
    for (const auto& r : j.at("rows"))
      rows.emplace_back(r.at("azimuth_deg").get<double>(), r.at("response_db").get<double>());
    return rows;
  }
  std::string line;
  std::getline(in, line);
  require(line == "azimuth_deg,response_db", ErrorKind::kData, path + ": bad CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::kData, path + ": malformed row '" + line + "'");
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace wearbf

#endif  // WEARBF_ANALYSIS_HPP
