#ifndef WEARBF_DATASET_HPP
#define WEARBF_DATASET_HPP

// Multi-geometry dataset generation: each scene gets one geometry drawn by
// catalog proportion, a sampled SceneSpec, clips, noise and an SNR.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/bank.hpp"
#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"
#include "wearbf/scene.hpp"
#include "wearbf/wav.hpp"

namespace wearbf {

struct CatalogEntry {
  ArrayGeometry geometry;
  double proportion = 1.0;
};

struct GeometryCatalog {
  std::vector<CatalogEntry> entries;

  void validate() const {
    require(!entries.empty(), ErrorKind::kConfig, "geometry catalog is empty");
    double total = 0.0;
    std::set<std::string> ids;
    for (const auto& e : entries) {
      require(e.proportion >= 0.0, ErrorKind::kConfig, "catalog proportions must be >= 0");
      require(ids.insert(e.geometry.id()).second, ErrorKind::kConfig,
              "duplicate geometry id '" + e.geometry.id() + "' in catalog");
      total += e.proportion;
    }
    require(std::abs(total - 1.0) <= 1e-6, ErrorKind::kConfig,
            "catalog proportions must sum to 1 (got " + std::to_string(total) + ")");
  }

  /// Index of the entry selected by u in [0, 1).
  std::size_t pick(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      acc += entries[i].proportion;
      if (u < acc) return i;
    }
    return entries.size() - 1;
  }
};

/// Entry: {"geometry": <built-in name | {id, mics}>, "subset": [..]?, "id": ".."?, "proportion": p}
inline GeometryCatalog catalog_from_json(const nlohmann::json& j) {
  check_keys(j, {"geometries"}, "catalog");
  require(j.contains("geometries") && j["geometries"].is_array(), ErrorKind::kConfig,
          "catalog: 'geometries' must be an array");
  GeometryCatalog c;
  for (const auto& e : j["geometries"]) {
    check_keys(e, {"geometry", "subset", "id", "proportion"}, "catalog.geometries[]");
    require(e.contains("geometry") && e.contains("proportion"), ErrorKind::kConfig,
            "catalog entries need 'geometry' and 'proportion'");
    ArrayGeometry g = geometry_from_config(e["geometry"]);
    if (e.contains("subset")) g = select_subset(g, e["subset"].get<std::vector<std::size_t>>());
    if (e.contains("id")) g = ArrayGeometry(e["id"].get<std::string>(), g.mics());
    c.entries.push_back({std::move(g), e["proportion"].get<double>()});
  }
  c.validate();
  return c;
}

inline nlohmann::json catalog_to_json(const GeometryCatalog& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : c.entries) arr.push_back({{"geometry", geometry_to_json(e.geometry)}, {"proportion", e.proportion}});
  return {{"geometries", arr}};
}

inline GeometryCatalog single_geometry_catalog(const ArrayGeometry& g) { return {{{g, 1.0}}}; }

// ---------------------------------------------------------------------------

/// Deterministic speech-like stand-in clips: syllable-rate modulated,
/// low-passed noise bursts with placeholder transcripts. Used when no clip
/// directory is configured.
inline std::vector<Clip> synthetic_clips(std::size_t count, double seconds, double fs, std::uint64_t seed) {
  std::vector<Clip> clips;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    const auto n = static_cast<Eigen::Index>(std::llround(seconds * fs));
    Eigen::VectorXd x(n);
    const double rate = uniform(rng, 3.0, 6.0), phase = uniform(rng, 0.0, 2.0 * kPi);
    const double pole = uniform(rng, 0.85, 0.95);
    double lp = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      lp = pole * lp + (1.0 - pole) * normal(rng);
      const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * rate * static_cast<double>(t) / fs + phase));
      x(t) = 0.3 * env * lp;
    }
    std::ostringstream text;
    const auto words = 3 + uniform_int(rng, 0, 5);
    for (std::int64_t w = 0; w < words; ++w) text << (w ? " " : "") << "w" << i << "_" << w;
    clips.push_back({std::move(x), fs, text.str(), "synthetic_" + std::to_string(i)});
  }
  return clips;
}

/// Deterministic mono noise, 1/f-tilted by a leaky integrator.
inline Audio synthetic_noise(double seconds, double fs, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * fs));
  Audio a;
  a.fs = fs;
  a.samples.resize(1, n);
  double lp = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double w = normal(rng);
    lp = 0.98 * lp + 0.02 * w;
    a.samples(0, t) = 0.05 * (0.3 * w + lp * 5.0);
  }
  return a;
}

struct DatasetConfig {
  GeometryCatalog catalog = single_geometry_catalog(reference_glasses_5mic());
  std::string clip_dir;   // empty: synthetic clips
  std::string noise_dir;  // empty: synthetic noise
  std::size_t count = 10;
  double fs = 16000.0;
  double sound_speed = kDefaultSoundSpeed;
  double self_other_overlap = 0.1;
  std::size_t synthetic_clip_count = 16;
  double synthetic_clip_seconds = 2.0;
  bool add_noise = true;
  int max_order = 6;
  SampleFormat format = SampleFormat::kFloat32;

  void validate() const {
    catalog.validate();
    require(count >= 1, ErrorKind::kConfig, "count must be >= 1");
    require(fs > 0.0, ErrorKind::kConfig, "fs must be positive");
    require(self_other_overlap >= 0.0 && self_other_overlap < 1.0, ErrorKind::kConfig,
            "self_other_overlap must lie in [0, 1)");
    require(max_order >= 0, ErrorKind::kConfig, "max_order must be >= 0");
    require(clip_dir.empty() == false || synthetic_clip_count >= 2, ErrorKind::kConfig,
            "need at least two synthetic clips");
    require(synthetic_clip_seconds >= 1.0, ErrorKind::kConfig, "synthetic clips must be at least 1 s");
  }
};

inline const std::set<std::string>& dataset_config_keys() {
  static const std::set<std::string> keys = {
      "catalog", "catalog_file", "geometry", "clip_dir", "noise_dir", "count", "fs", "sound_speed",
      "self_other_overlap", "synthetic_clips", "synthetic_clip_seconds", "noise", "max_order", "sample_format"};
  return keys;
}

inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  check_keys(j, dataset_config_keys(), "dataset config");
  DatasetConfig c;
  try {
    const int sources = static_cast<int>(j.contains("catalog")) + static_cast<int>(j.contains("catalog_file")) +
                        static_cast<int>(j.contains("geometry"));
    require(sources <= 1, ErrorKind::kConfig, "give at most one of catalog, catalog_file, geometry");
    if (j.contains("catalog")) c.catalog = catalog_from_json(j["catalog"]);
    if (j.contains("catalog_file")) c.catalog = catalog_from_json(read_json_file(j["catalog_file"].get<std::string>()));
    if (j.contains("geometry")) c.catalog = single_geometry_catalog(geometry_from_config(j["geometry"]));
    c.clip_dir = j.value("clip_dir", c.clip_dir);
    c.noise_dir = j.value("noise_dir", c.noise_dir);
    c.count = j.value("count", c.count);
    c.fs = j.value("fs", c.fs);
    c.sound_speed = j.value("sound_speed", c.sound_speed);
    c.self_other_overlap = j.value("self_other_overlap", c.self_other_overlap);
    c.synthetic_clip_count = j.value("synthetic_clips", c.synthetic_clip_count);
    c.synthetic_clip_seconds = j.value("synthetic_clip_seconds", c.synthetic_clip_seconds);
    c.add_noise = j.value("noise", c.add_noise);
    c.max_order = j.value("max_order", c.max_order);
    const auto fmt = j.value("sample_format", std::string("float32"));
    require(fmt == "float32" || fmt == "pcm16", ErrorKind::kConfig, "sample_format must be float32 or pcm16");
    c.format = fmt == "pcm16" ? SampleFormat::kPcm16 : SampleFormat::kFloat32;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("dataset config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

struct GeneratedScene {
  SceneAudio audio;
  std::size_t geometry_index = 0;
  Eigen::MatrixXd noise;  // the scaled noise added to audio.mixture; empty without noise
};

struct SceneSources {
  std::vector<Clip> clips;
  std::vector<Audio> noises;
};

inline SceneSources load_scene_sources(const DatasetConfig& c, std::uint64_t seed) {
  SceneSources s;
  s.clips = c.clip_dir.empty()
                ? synthetic_clips(c.synthetic_clip_count, c.synthetic_clip_seconds, c.fs, derive_seed(seed, 0xC11B))
                : load_clip_dir(c.clip_dir, c.fs);
  require(s.clips.size() >= 2, ErrorKind::kData, "need at least two clips");
  if (c.add_noise) {
    if (c.noise_dir.empty())
      s.noises.push_back(synthetic_noise(30.0, c.fs, derive_seed(seed, 0x0015E)));
    else
      s.noises = load_noise_dir(c.noise_dir, c.fs);
  }
  return s;
}

/// Scene `index` of a seeded run. Pure in (config, sources, seed, index).
inline GeneratedScene generate_scene(const DatasetConfig& c, const SceneSources& src, std::uint64_t seed,
                                     std::size_t index) {
  Rng rng(derive_seed(seed, index));
  GeneratedScene g;
  g.geometry_index = c.catalog.pick(uniform01(rng));
  const auto& geometry = c.catalog.entries[g.geometry_index].geometry;
  SceneSampling sampling;
  sampling.max_order = c.max_order;
  sampling.self_other_overlap = c.self_other_overlap;
  const SceneSpec spec = sample_scene(rng, sampling);

  const auto n = static_cast<std::int64_t>(src.clips.size());
  const auto i_self = uniform_int(rng, 0, n - 1);
  auto i_other = uniform_int(rng, 0, n - 2);
  if (i_other >= i_self) ++i_other;
  auto i_by = uniform_int(rng, 0, n - 1);
  const Clip* bystander = spec.crosstalk == Crosstalk::kNone ? nullptr : &src.clips[static_cast<std::size_t>(i_by)];
  SceneOptions so;
  so.sound_speed = c.sound_speed;
  g.audio = compose_scene(spec, geometry, src.clips[static_cast<std::size_t>(i_self)],
                          src.clips[static_cast<std::size_t>(i_other)], bystander, c.fs, so);
  if (!src.noises.empty()) {
    const auto& noise = src.noises[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(src.noises.size()) - 1))];
    const auto mix = mix_noise(g.audio.mixture, noise, spec.snr_db, g.audio.reference, g.audio.main_begin,
                               g.audio.main_end, rng);
    g.noise = mix.mixture.samples - g.audio.mixture.samples;
    g.audio.mixture = mix.mixture;
    g.audio.manifest.measured_snr_db = mix.measured_snr_db;
    g.audio.manifest.noise_scale = mix.scale;
  }
  return g;
}

inline std::string scene_file_name(std::size_t index) {
  std::ostringstream os;
  os << "scene_" << std::setw(6) << std::setfill('0') << index << ".wav";
  return os.str();
}

struct DatasetSummary {
  std::size_t scenes = 0;
  std::vector<std::size_t> geometry_counts;
  std::string manifest_path;
};

/// Writes out_dir/scene_NNNNNN.wav and out_dir/manifest.jsonl. Manifest rows
/// are in scene-index order regardless of worker scheduling.
inline DatasetSummary build_dataset(const DatasetConfig& c, std::uint64_t seed, const std::string& out_dir,
                                    unsigned workers = 1) {
  c.validate();
  namespace fs_ = std::filesystem;
  fs_::create_directories(out_dir);
  const SceneSources src = load_scene_sources(c, seed);
  std::vector<nlohmann::json> rows(c.count);
  std::vector<std::size_t> assigned(c.count);
  parallel_for(c.count, workers, [&](std::size_t i) {
    GeneratedScene g;
    try {
      g = generate_scene(c, src, seed, i);
    } catch (const Error& e) {
      fail(e.kind(), "scene " + std::to_string(i) + ": " + e.what());
    }
    const auto name = scene_file_name(i);
    g.audio.manifest.audio_path = name;
    write_wav(g.audio.mixture, (fs_::path(out_dir) / name).string(), c.format);
    rows[i] = scene_to_json(g.audio.manifest);
    rows[i]["index"] = i;
    assigned[i] = g.geometry_index;
  });
  DatasetSummary s;
  s.scenes = c.count;
  s.geometry_counts.assign(c.catalog.entries.size(), 0);
  for (auto a : assigned) ++s.geometry_counts[a];
  s.manifest_path = (fs_::path(out_dir) / "manifest.jsonl").string();
  std::ofstream out(s.manifest_path);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + s.manifest_path + "'");
  for (const auto& r : rows) out << r.dump() << '\n';
  return s;
}

inline std::vector<nlohmann::json> read_manifest(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kData, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace wearbf

#endif  // WEARBF_DATASET_HPP
