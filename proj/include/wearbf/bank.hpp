#ifndef WEARBF_BANK_HPP
#define WEARBF_BANK_HPP

// K+1 fixed beamformers: K horizontal look directions plus one aimed at the
// wearer's mouth, each designed on every STFT bin.

#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/beamformer.hpp"
#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"
#include "wearbf/noise_model.hpp"

namespace wearbf {

/// Rejects keys of `j` outside `allowed`.
inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& context) {
  require(j.is_object(), ErrorKind::kConfig, context + ": expected an object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, ErrorKind::kConfig, context + ": unknown key '" + key + "'");
}

/// A soft null as written in a design config. Angles in degrees; relative
/// azimuths are offsets from each beam's look azimuth.
struct NullConfig {
  double azimuth_deg = 180.0;
  double elevation_deg = 0.0;
  double alpha = 10.0;
  double psd = 1.0;
  bool relative = true;
};

struct DesignConfig {
  ArrayGeometry geometry = reference_glasses_5mic();
  std::string atf_source = "freefield";  // freefield | file
  std::string atf_file;
  std::string diffuse_model = "sinc";  // sinc | atf
  std::vector<double> azimuths_deg = {0.0, 90.0, 180.0, 270.0};
  Vec3 mouth = default_mouth_point();
  Method method = Method::kNlcmv;
  std::vector<NullConfig> nulls = {NullConfig{}};
  double fs = 16000.0;
  int n_fft = 512;
  double sound_speed = kDefaultSoundSpeed;
  double wng_tolerance = 1e-8;
  double wng_margin = 1.0;
  /// Explicit design grid; empty means every STFT bin 0..n_fft/2.
  std::vector<double> frequency_list;

  std::vector<double> frequencies() const {
    if (!frequency_list.empty()) return frequency_list;
    std::vector<double> f(static_cast<std::size_t>(n_fft / 2 + 1));
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * fs / n_fft;
    return f;
  }

  void validate() const {
    require(fs > 0.0, ErrorKind::kConfig, "fs must be positive");
    require(n_fft >= 2 && n_fft % 2 == 0, ErrorKind::kConfig, "n_fft must be even and >= 2");
    require(sound_speed > 0.0, ErrorKind::kConfig, "sound_speed must be positive");
    require(!azimuths_deg.empty(), ErrorKind::kConfig, "need at least one horizontal direction (K >= 1)");
    require(atf_source == "freefield" || atf_source == "file", ErrorKind::kConfig,
            "atf_source must be 'freefield' or 'file'");
    require(atf_source == "freefield" || !atf_file.empty(), ErrorKind::kConfig,
            "atf_source 'file' needs atf_file");
    require(diffuse_model == "sinc" || diffuse_model == "atf", ErrorKind::kConfig,
            "diffuse must be 'sinc' or 'atf'");
    require(diffuse_model == "sinc" || atf_source == "file", ErrorKind::kConfig,
            "diffuse 'atf' needs atf_source 'file'");
    require(wng_tolerance > 0.0, ErrorKind::kConfig, "wng_tolerance must be positive");
    for (std::size_t i = 0; i < frequency_list.size(); ++i) {
      require(frequency_list[i] >= 0.0 && frequency_list[i] <= fs / 2, ErrorKind::kConfig,
              "frequencies must lie in [0, fs/2]");
      require(i == 0 || frequency_list[i] > frequency_list[i - 1], ErrorKind::kConfig,
              "frequencies must be strictly increasing");
    }
    for (const auto& n : nulls) {
      require(n.alpha >= 0.0, ErrorKind::kConfig, "null alpha must be >= 0");
      require(n.psd > 0.0, ErrorKind::kConfig, "null psd must be > 0");
    }
  }
};

inline const std::set<std::string>& design_config_keys() {
  static const std::set<std::string> keys = {
      "geometry", "geometry_file", "atf_source", "atf_file", "diffuse", "directions", "method",
      "nulls",    "fs",            "n_fft",      "sound_speed", "wng_tolerance", "wng_margin",
      "frequencies"};
  return keys;
}

/// `geometry` may be a built-in name ("glasses7", "glasses7_5mic") or an
/// inline {id, mics} object.
inline ArrayGeometry geometry_from_config(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "glasses7") return reference_glasses();
    if (name == "glasses7_5mic") return reference_glasses_5mic();
    fail(ErrorKind::kConfig, "unknown built-in geometry '" + name + "'");
  }
  try {
    return geometry_from_json(j);
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
}

inline DesignConfig design_config_from_json(const nlohmann::json& j) {
  check_keys(j, design_config_keys(), "design config");
  DesignConfig c;
  try {
    require(!(j.contains("geometry") && j.contains("geometry_file")), ErrorKind::kConfig,
            "give either geometry or geometry_file, not both");
    if (j.contains("geometry")) c.geometry = geometry_from_config(j["geometry"]);
    if (j.contains("geometry_file")) c.geometry = load_geometry(j["geometry_file"].get<std::string>());
    c.atf_source = j.value("atf_source", c.atf_source);
    c.atf_file = j.value("atf_file", c.atf_file);
    c.diffuse_model = j.value("diffuse", c.diffuse_model);
    if (j.contains("directions")) {
      const auto& d = j["directions"];
      check_keys(d, {"azimuths", "mouth"}, "directions");
      if (d.contains("azimuths")) c.azimuths_deg = d["azimuths"].get<std::vector<double>>();
      if (d.contains("mouth")) {
        const auto p = d["mouth"].get<std::vector<double>>();
        require(p.size() == 3, ErrorKind::kConfig, "directions.mouth must be [x, y, z]");
        c.mouth = Vec3(p[0], p[1], p[2]);
      }
    }
    if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
    if (j.contains("nulls")) {
      c.nulls.clear();
      for (const auto& n : j["nulls"]) {
        check_keys(n, {"azimuth", "elevation", "alpha", "psd", "relative"}, "nulls[]");
        NullConfig nc;
        nc.azimuth_deg = n.at("azimuth").get<double>();
        nc.elevation_deg = n.value("elevation", 0.0);
        nc.alpha = n.value("alpha", nc.alpha);
        nc.psd = n.value("psd", nc.psd);
        nc.relative = n.value("relative", nc.relative);
        c.nulls.push_back(nc);
      }
    }
    c.fs = j.value("fs", c.fs);
    c.n_fft = j.value("n_fft", c.n_fft);
    c.sound_speed = j.value("sound_speed", c.sound_speed);
    c.wng_tolerance = j.value("wng_tolerance", c.wng_tolerance);
    c.wng_margin = j.value("wng_margin", c.wng_margin);
    if (j.contains("frequencies")) c.frequency_list = j["frequencies"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("design config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json design_config_to_json(const DesignConfig& c) {
  nlohmann::json nulls = nlohmann::json::array();
  for (const auto& n : c.nulls)
    nulls.push_back({{"azimuth", n.azimuth_deg},
                     {"elevation", n.elevation_deg},
                     {"alpha", n.alpha},
                     {"psd", n.psd},
                     {"relative", n.relative}});
  nlohmann::json j = {
      {"geometry", geometry_to_json(c.geometry)},
      {"atf_source", c.atf_source},
      {"diffuse", c.diffuse_model},
      {"directions", {{"azimuths", c.azimuths_deg}, {"mouth", {c.mouth.x(), c.mouth.y(), c.mouth.z()}}}},
      {"method", method_name(c.method)},
      {"nulls", nulls},
      {"fs", c.fs},
      {"n_fft", c.n_fft},
      {"sound_speed", c.sound_speed},
      {"wng_tolerance", c.wng_tolerance},
      {"wng_margin", c.wng_margin},
  };
  if (c.atf_source == "file") j["atf_file"] = c.atf_file;
  if (!c.frequency_list.empty()) j["frequencies"] = c.frequency_list;
  return j;
}

// ---------------------------------------------------------------------------

struct BankEntry {
  std::string label;
  DirectionSpec look;
  std::vector<CVector> weights;  // one per frequency
  std::vector<double> loading;   // eps per frequency
};

struct BeamformerBank {
  ArrayGeometry geometry;
  DesignConfig config;
  std::vector<double> frequencies;
  std::vector<BankEntry> entries;  // K horizontal, then the mouth beam

  std::size_t num_mics() const { return geometry.num_mics(); }
  std::size_t num_directions() const { return entries.size(); }
  std::size_t num_horizontal() const { return entries.size() - 1; }
  std::size_t num_bins() const { return frequencies.size(); }
};

inline std::vector<std::pair<std::string, DirectionSpec>> bank_directions(const DesignConfig& c) {
  std::vector<std::pair<std::string, DirectionSpec>> dirs;
  for (double az : c.azimuths_deg) {
    char label[32];
    std::snprintf(label, sizeof(label), "az%+07.2f", az);
    dirs.emplace_back(label, DirectionSpec::far(deg2rad(az)));
  }
  dirs.emplace_back("mouth", DirectionSpec::near(c.mouth));
  return dirs;
}

/// Soft nulls for one beam, with relative azimuths resolved against `look`.
inline std::vector<PointNoiseSpec> resolve_nulls(const DesignConfig& c, const DirectionSpec& look) {
  std::vector<PointNoiseSpec> out;
  for (const auto& n : c.nulls) {
    const double az = deg2rad(n.azimuth_deg) + (n.relative ? look.azimuth : 0.0);
    PointNoiseSpec p;
    p.direction = DirectionSpec::far(az, deg2rad(n.elevation_deg));
    p.weight = n.alpha;
    p.psd = n.psd;
    out.push_back(std::move(p));
  }
  return out;
}

inline SteeringSource make_steering_source(const DesignConfig& c) {
  if (c.atf_source == "file") return SteeringSource(import_atfs(c.atf_file), c.sound_speed);
  return SteeringSource(c.sound_speed);
}

/// The per-bin design problem of one beam: look steering vector, diffuse and
/// composite covariances.
struct BinProblem {
  SteeringVector look;
  NoiseCovariance diffuse;
  NoiseCovariance total;
};

inline BinProblem make_bin_problem(const DesignConfig& c, const SteeringSource& source,
                                   const DirectionSpec& look, double frequency) {
  BinProblem p;
  p.look = source.steer(c.geometry, look, frequency);
  if (c.diffuse_model == "atf") {
    p.diffuse = diffuse_covariance_from_atfs(*source.atfs(), frequency);
  } else {
    p.diffuse = diffuse_covariance_sinc(c.geometry, frequency, c.sound_speed);
  }
  p.total = composite_covariance(p.diffuse, resolve_nulls(c, look), c.geometry, frequency, source);
  return p;
}

inline DesignSpec design_spec_for(const DesignConfig& c, const DirectionSpec& look) {
  DesignSpec s;
  s.method = c.method;
  s.look = look;
  s.nulls = resolve_nulls(c, look);
  s.frequencies = c.frequencies();
  s.sound_speed = c.sound_speed;
  s.wng_tolerance = c.wng_tolerance;
  s.wng_margin = c.wng_margin;
  return s;
}

inline BeamformerBank design_bank(const DesignConfig& config, const SteeringSource& source,
                                  unsigned workers = 1) {
  config.validate();
  BeamformerBank bank;
  bank.geometry = config.geometry;
  bank.config = config;
  bank.frequencies = config.frequencies();
  for (double f : bank.frequencies)
    require(f <= config.fs / 2 + 1e-9, ErrorKind::kConfig, "frequency grid exceeds fs/2");
  const auto dirs = bank_directions(config);
  const std::size_t nf = bank.frequencies.size();
  bank.entries.resize(dirs.size());
  std::vector<DesignSpec> specs;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    bank.entries[d].label = dirs[d].first;
    bank.entries[d].look = dirs[d].second;
    bank.entries[d].weights.resize(nf);
    bank.entries[d].loading.resize(nf);
    specs.push_back(design_spec_for(config, dirs[d].second));
  }
  parallel_for(dirs.size() * nf, workers, [&](std::size_t i) {
    const std::size_t d = i / nf, k = i % nf;
    const double f = bank.frequencies[k];
    try {
      const BinProblem p = make_bin_problem(config, source, dirs[d].second, f);
      const BeamformerWeights w = design(specs[d], p.diffuse, p.total, p.look);
      bank.entries[d].weights[k] = w.weights;
      bank.entries[d].loading[k] = w.diagnostics.loading;
    } catch (const Error& e) {
      fail(e.kind(), "direction '" + dirs[d].first + "', " + std::to_string(f) + " Hz: " + e.what());
    }
  });
  return bank;
}

inline BeamformerBank design_bank(const DesignConfig& config, unsigned workers = 1) {
  return design_bank(config, make_steering_source(config), workers);
}

// ---------------------------------------------------------------------------
// Bank files: one JSON header line, then little-endian float64 weights
// (direction, frequency, channel, re/im) followed by one loading value per
// (direction, frequency).

inline void write_bank(const BeamformerBank& bank, std::ostream& out) {
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& e : bank.entries) {
    auto jd = direction_to_json(e.look);
    jd["label"] = e.label;
    dirs.push_back(jd);
  }
  const nlohmann::json header = {
      {"format", "wearbf-bank"},
      {"version", 1},
      {"geometry_id", bank.geometry.id()},
      {"M", bank.num_mics()},
      {"fs", bank.config.fs},
      {"n_fft", bank.config.n_fft},
      {"method", method_name(bank.config.method)},
      {"frequencies", bank.frequencies},
      {"directions", dirs},
      {"config", design_config_to_json(bank.config)},
  };
  out << header.dump() << '\n';
  for (const auto& e : bank.entries)
    for (const auto& w : e.weights)
      for (Eigen::Index m = 0; m < w.size(); ++m) {
        write_le(out, w(m).real());
        write_le(out, w(m).imag());
      }
  for (const auto& e : bank.entries)
    for (double eps : e.loading) write_le(out, eps);
}

inline BeamformerBank read_bank_unchecked(std::istream& in, const std::string& where) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kData, where + ": missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kData, where + ": header: " + e.what());
  }
  require(h.value("format", "") == "wearbf-bank", ErrorKind::kData, where + ": not a bank file");
  require(h.value("version", 0) == 1, ErrorKind::kData, where + ": unsupported bank version");
  BeamformerBank bank;
  try {
    bank.config = design_config_from_json(h.at("config"));
  } catch (const Error& e) {
    fail(ErrorKind::kData, where + ": embedded config: " + e.what());
  }
  bank.geometry = bank.config.geometry;
  bank.frequencies = h.at("frequencies").get<std::vector<double>>();
  const auto m = h.at("M").get<std::size_t>();
  require(m == bank.geometry.num_mics(), ErrorKind::kData, where + ": M does not match geometry");
  require(bank.frequencies == bank.config.frequencies(), ErrorKind::kData,
          where + ": frequency grid does not match fs / n_fft");
  for (const auto& jd : h.at("directions")) {
    BankEntry e;
    e.label = jd.at("label").get<std::string>();
    e.look = direction_from_json(jd);
    bank.entries.push_back(std::move(e));
  }
  require(bank.entries.size() >= 2, ErrorKind::kData, where + ": bank needs K >= 1 plus the mouth beam");
  const std::size_t nf = bank.frequencies.size();
  for (std::size_t d = 0; d < bank.entries.size(); ++d) {
    auto& e = bank.entries[d];
    e.weights.assign(nf, CVector::Zero(static_cast<Eigen::Index>(m)));
    for (std::size_t k = 0; k < nf; ++k)
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
        try {
          const double re = read_le<double>(in);
          const double im = read_le<double>(in);
          e.weights[k](i) = Complex(re, im);
        } catch (const Error&) {
          fail(ErrorKind::kData, where + ": weight payload truncated at direction " +
                                     std::to_string(d) + ", bin " + std::to_string(k));
        }
      }
  }
  for (auto& e : bank.entries) {
    e.loading.resize(nf);
    for (std::size_t k = 0; k < nf; ++k) {
      try {
        e.loading[k] = read_le<double>(in);
      } catch (const Error&) {
        fail(ErrorKind::kData, where + ": loading payload truncated");
      }
    }
  }
  in.peek();
  require(in.eof(), ErrorKind::kData, where + ": trailing bytes after payload");
  return bank;
}

inline BeamformerBank read_bank(std::istream& in, const std::string& where = "<stream>") {
  try {
    return read_bank_unchecked(in, where);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, where + ": malformed header: " + e.what());
  }
}

inline void save_bank(const BeamformerBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  write_bank(bank, out);
}

inline BeamformerBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  return read_bank(in, path);
}

// ---------------------------------------------------------------------------

struct BankVerification {
  std::size_t designs_checked = 0;
  std::size_t failures = 0;
  double max_distortionless_error = 0.0;
  double max_wng_value = -std::numeric_limits<double>::infinity();
  double max_stationarity_ratio = 0.0;  // stationarity / bound
  double max_slackness = 0.0;
  std::string first_failure;  // "<label>@<freq>Hz: <condition>"

  bool ok() const { return failures == 0; }
};

/// Re-derives every bin problem from the bank's embedded config and checks
/// the stored weights: full KKT certification for NLCMV banks, the
/// distortionless and feasibility invariants for the baselines.
inline BankVerification verify_bank(const BeamformerBank& bank, unsigned workers = 1) {
  const SteeringSource source = make_steering_source(bank.config);
  const std::size_t nf = bank.frequencies.size();
  std::vector<KktReport> reports(bank.entries.size() * nf);
  parallel_for(reports.size(), workers, [&](std::size_t i) {
    const auto& e = bank.entries[i / nf];
    const std::size_t k = i % nf;
    const BinProblem p = make_bin_problem(bank.config, source, e.look, bank.frequencies[k]);
    BeamformerWeights w;
    w.frequency = bank.frequencies[k];
    w.weights = e.weights[k];
    w.diagnostics.loading = e.loading[k];
    KktReport r = verify_kkt(w, p.total, p.look, bank.config.wng_margin);
    if (bank.config.method != Method::kNlcmv) {
      r.stationarity_ok = true;
      r.slackness_ok = true;
      r.primal_ok = bank.config.method != Method::kDelayAndSum || r.wng_value <= 1e-9;
    }
    reports[i] = r;
  });
  BankVerification v;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    ++v.designs_checked;
    v.max_distortionless_error = std::max(v.max_distortionless_error, r.distortionless_error);
    v.max_wng_value = std::max(v.max_wng_value, r.wng_value);
    if (r.stationarity_bound > 0.0)
      v.max_stationarity_ratio = std::max(v.max_stationarity_ratio, r.stationarity / r.stationarity_bound);
    v.max_slackness = std::max(v.max_slackness, r.slackness);
    if (!r.ok()) {
      if (v.failures == 0) {
        std::ostringstream where;
        where << std::setprecision(10) << bank.entries[i / nf].label << "@" << bank.frequencies[i % nf] << "Hz: ";
        v.first_failure = where.str() + r.first_failure();
      }
      ++v.failures;
    }
  }
  return v;
}

}  // namespace wearbf

#endif  // WEARBF_BANK_HPP
