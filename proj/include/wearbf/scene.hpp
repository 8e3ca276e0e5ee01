#ifndef WEARBF_SCENE_HPP
#define WEARBF_SCENE_HPP

// Conversation scenes: the wearer ("self"), a frontal partner ("other") and
// an optional out-of-sector bystander, convolved with simulated room
// responses and mixed with noise at a target SNR.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"
#include "wearbf/rir.hpp"
#include "wearbf/wav.hpp"

namespace wearbf {

inline constexpr double kPartnerSectorDeg = 60.0;
inline constexpr int kSnrMinDb = -5;
inline constexpr int kSnrMaxDb = 30;
inline constexpr double kWallMargin = 0.5;

enum class Crosstalk { kNone, kNoOverlap, kHalfOverlap };

inline std::string crosstalk_name(Crosstalk c) {
  switch (c) {
    case Crosstalk::kNone: return "none";
    case Crosstalk::kNoOverlap: return "0";
    case Crosstalk::kHalfOverlap: return "50";
  }
  return "?";
}

inline double crosstalk_ratio(Crosstalk c) { return c == Crosstalk::kHalfOverlap ? 0.5 : 0.0; }

struct SceneSpec {
  RoomSpec room;
  Vec3 array_position{3.0, 2.5, 1.5};
  double yaw = 0.0;  // radians, device +x in room frame
  double partner_azimuth = 0.0;  // radians, relative to yaw
  double partner_distance = 1.5;
  double partner_height = 0.0;   // relative to the array
  double bystander_azimuth = kPi;
  double bystander_distance = 2.0;
  double bystander_height = 0.0;
  Crosstalk crosstalk = Crosstalk::kNone;
  bool bystander_first = false;
  int snr_db = 10;
  double self_other_overlap = 0.1;
  std::uint64_t seed = 0;

  Eigen::Matrix3d rotation() const {
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  }
  Vec3 to_room(const Vec3& device_point) const { return array_position + rotation() * device_point; }

  Vec3 partner_position() const {
    const double a = yaw + partner_azimuth;
    return array_position + Vec3(partner_distance * std::cos(a), partner_distance * std::sin(a), partner_height);
  }
  Vec3 bystander_position() const {
    const double a = yaw + bystander_azimuth;
    return array_position + Vec3(bystander_distance * std::cos(a), bystander_distance * std::sin(a), bystander_height);
  }

  bool partner_in_sector() const { return std::abs(wrap_angle(partner_azimuth)) <= deg2rad(kPartnerSectorDeg); }
  bool bystander_out_of_sector() const {
    return std::abs(wrap_angle(bystander_azimuth)) > deg2rad(kPartnerSectorDeg);
  }
};

struct SceneSampling {
  Vec3 room_min{5.0, 5.0, 2.0};
  Vec3 room_max{10.0, 10.0, 6.0};
  double absorption_min = 0.2;
  double absorption_max = 0.6;
  int max_order = 6;
  double partner_distance_min = 1.2;
  double partner_distance_max = 1.8;
  double bystander_distance_min = 1.0;
  double bystander_distance_max = 3.0;
  double self_other_overlap = 0.1;
};

inline RoomSpec sample_room(Rng& rng, const SceneSampling& s = {}) {
  RoomSpec r;
  for (int a = 0; a < 3; ++a) r.dimensions(a) = uniform(rng, s.room_min(a), s.room_max(a));
  for (auto& w : r.absorption) w = uniform(rng, s.absorption_min, s.absorption_max);
  r.max_order = s.max_order;
  return r;
}

/// Draws a scene; placements are resampled until every source keeps the
/// wall margin, so the SceneSpec invariants hold by construction.
inline SceneSpec sample_scene(Rng& rng, const SceneSampling& s = {}) {
  SceneSpec sc;
  sc.room = sample_room(rng, s);
  sc.self_other_overlap = s.self_other_overlap;
  const Vec3 dims = sc.room.dimensions;
  const auto crosstalk_draw = uniform_int(rng, 0, 2);
  sc.crosstalk = static_cast<Crosstalk>(crosstalk_draw);
  sc.bystander_first = uniform_int(rng, 0, 1) == 1;
  sc.snr_db = static_cast<int>(uniform_int(rng, kSnrMinDb, kSnrMaxDb));
  sc.seed = rng();
  const double sector = deg2rad(kPartnerSectorDeg);
  const double z_hi = dims.z() - kWallMargin;
  for (;;) {
    sc.array_position = Vec3(uniform(rng, kWallMargin + 0.15, dims.x() - kWallMargin - 0.15),
                             uniform(rng, kWallMargin + 0.15, dims.y() - kWallMargin - 0.15),
                             std::clamp(uniform(rng, 1.2, 1.7), kWallMargin + 0.1, z_hi - 0.05));
    sc.yaw = wrap_angle(uniform(rng, -kPi, kPi));
    bool placed = false;
    for (int tries = 0; tries < 64 && !placed; ++tries) {
      sc.partner_azimuth = uniform(rng, -sector, sector);
      sc.partner_distance = uniform(rng, s.partner_distance_min, s.partner_distance_max);
      sc.partner_height = uniform(rng, -0.1, 0.1);
      placed = sc.room.contains(sc.partner_position(), kWallMargin);
    }
    if (!placed) continue;
    placed = false;
    for (int tries = 0; tries < 64 && !placed; ++tries) {
      // Outside the frontal sector: (60, 300) degrees.
      sc.bystander_azimuth = wrap_angle(uniform(rng, sector, 2.0 * kPi - sector));
      sc.bystander_distance = uniform(rng, s.bystander_distance_min, s.bystander_distance_max);
      sc.bystander_height = uniform(rng, -0.1, 0.1);
      placed = sc.bystander_out_of_sector() && sc.room.contains(sc.bystander_position(), kWallMargin);
    }
    if (placed) return sc;
  }
}

// ---------------------------------------------------------------------------

struct Clip {
  Eigen::VectorXd samples;
  double fs = 16000.0;
  std::string transcript;
  std::string name;
};

struct Segment {
  std::string speaker;  // self | other | bystander
  Eigen::Index start = 0;
  Eigen::Index end = 0;  // exclusive, in samples
  std::string transcript;
};

struct SceneManifest {
  std::string audio_path;
  std::string geometry_id;
  double fs = 16000.0;
  Eigen::Index num_samples = 0;
  std::vector<Segment> segments;
  std::string reference;
  SceneSpec spec;
  double measured_overlap = 0.0;
  std::optional<double> measured_snr_db;
  std::optional<double> noise_scale;
};

struct SceneAudio {
  Audio mixture;    // all sources
  Audio reference;  // self + other only
  SceneManifest manifest;
  Eigen::Index main_begin = 0, main_end = 0;  // active main-speaker region
};

/// Serialized reference: transcripts of self/other in start order, each
/// preceded by its speaker tag.
inline std::string serialize_reference(std::vector<Segment> segments) {
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.start < b.start; });
  std::string out;
  for (const auto& s : segments) {
    if (s.speaker != "self" && s.speaker != "other") continue;
    if (!out.empty()) out += ' ';
    out += "<" + s.speaker + "> " + s.transcript;
  }
  return out;
}

/// Samples of [b0, b1) that fall inside [m0, m1).
inline Eigen::Index interval_overlap(Eigen::Index b0, Eigen::Index b1, Eigen::Index m0, Eigen::Index m1) {
  return std::max<Eigen::Index>(0, std::min(b1, m1) - std::max(b0, m0));
}

struct SceneOptions {
  double sound_speed = kDefaultSoundSpeed;
  Vec3 mouth = default_mouth_point();
  double crosstalk_gap_s = 0.2;
  int self_max_order = 1;
};

inline SceneAudio compose_scene(const SceneSpec& spec, const ArrayGeometry& geometry, const Clip& self,
                                const Clip& other, const Clip* bystander, double fs,
                                const SceneOptions& opt = {}) {
  const Clip* clips[3] = {&self, &other, bystander};
  for (const Clip* c : clips) {
    if (!c) continue;
    require(std::abs(c->fs - fs) < 0.5, ErrorKind::kData, "clip '" + c->name + "': sample-rate mismatch");
    require(static_cast<double>(c->samples.size()) >= fs, ErrorKind::kData,
            "clip '" + c->name + "' shorter than 1 s");
    require(!c->transcript.empty(), ErrorKind::kData, "clip '" + c->name + "' has an empty transcript");
  }
  const bool with_bystander = bystander != nullptr && spec.crosstalk != Crosstalk::kNone;

  // Timeline.
  const Eigen::Index n_self = self.samples.size(), n_other = other.samples.size();
  const auto so = static_cast<Eigen::Index>(std::llround(spec.self_other_overlap * static_cast<double>(std::min(n_self, n_other))));
  Eigen::Index main_shift = 0, by_start = 0;
  Eigen::VectorXd by_samples;
  const Eigen::Index main_len = std::max(n_self, n_self - so + n_other);
  if (with_bystander) {
    by_samples = bystander->samples;
    const auto gap = static_cast<Eigen::Index>(std::llround(opt.crosstalk_gap_s * fs));
    if (spec.crosstalk == Crosstalk::kHalfOverlap) {
      if (by_samples.size() > 2 * main_len) by_samples = by_samples.head(2 * main_len).eval();
      const auto ov = static_cast<Eigen::Index>(std::llround(0.5 * static_cast<double>(by_samples.size())));
      if (spec.bystander_first) {
        main_shift = by_samples.size() - ov;
      } else {
        by_start = main_len - ov;
      }
    } else {
      if (spec.bystander_first)
        main_shift = by_samples.size() + gap;
      else
        by_start = main_len + gap;
    }
  }
  std::vector<Segment> segments;
  segments.push_back({"self", main_shift, main_shift + n_self, self.transcript});
  segments.push_back({"other", main_shift + n_self - so, main_shift + n_self - so + n_other, other.transcript});
  if (with_bystander)
    segments.push_back({"bystander", by_start, by_start + by_samples.size(), bystander->transcript});

  // Room responses.
  std::vector<Vec3> mics;
  for (const auto& p : geometry.mics()) mics.push_back(spec.to_room(p));
  RirOptions ro;
  ro.fs = fs;
  ro.sound_speed = opt.sound_speed;
  RirOptions self_ro = ro;
  self_ro.max_order = std::min(opt.self_max_order, spec.room.max_order);
  const Rir self_rir = generate_rir_ism(spec.room, spec.to_room(opt.mouth), mics, self_ro, "self");
  const Rir other_rir = generate_rir_ism(spec.room, spec.partner_position(), mics, ro, "other");

  std::vector<std::pair<Eigen::Index, Eigen::MatrixXd>> wet;
  wet.emplace_back(segments[0].start, fft_convolve(self.samples, self_rir.taps));
  wet.emplace_back(segments[1].start, fft_convolve(other.samples, other_rir.taps));
  if (with_bystander) {
    const Rir by_rir = generate_rir_ism(spec.room, spec.bystander_position(), mics, ro, "bystander");
    wet.emplace_back(by_start, fft_convolve(by_samples, by_rir.taps));
  }
  Eigen::Index total = 0;
  for (const auto& [start, sig] : wet) total = std::max(total, start + sig.cols());

  SceneAudio out;
  const auto m = static_cast<Eigen::Index>(geometry.num_mics());
  out.mixture.fs = out.reference.fs = fs;
  out.mixture.samples = Eigen::MatrixXd::Zero(m, total);
  out.reference.samples = Eigen::MatrixXd::Zero(m, total);
  for (std::size_t i = 0; i < wet.size(); ++i) {
    const auto& [start, sig] = wet[i];
    out.mixture.samples.middleCols(start, sig.cols()) += sig;
    if (i < 2) out.reference.samples.middleCols(start, sig.cols()) += sig;
  }
  out.main_begin = std::min(segments[0].start, segments[1].start);
  out.main_end = std::max(segments[0].end, segments[1].end);

  auto& man = out.manifest;
  man.geometry_id = geometry.id();
  man.fs = fs;
  man.num_samples = total;
  man.spec = spec;
  if (!with_bystander) man.spec.crosstalk = Crosstalk::kNone;
  man.segments = segments;
  man.reference = serialize_reference(segments);
  if (with_bystander) {
    const auto& b = segments[2];
    man.measured_overlap = static_cast<double>(interval_overlap(b.start, b.end, out.main_begin, out.main_end)) /
                           static_cast<double>(b.end - b.start);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct NoiseMix {
  Audio mixture;
  double scale = 0.0;
  double measured_snr_db = 0.0;
};

/// Adds noise scaled so that 10 log10(P_ref / P_noise) = snr_db over the
/// active region [begin, end). Mono noise is replicated across channels with
/// random per-channel delays of at most 2 ms.
inline NoiseMix mix_noise(const Audio& scene, const Audio& noise, double snr_db, const Audio& reference,
                          Eigen::Index begin, Eigen::Index end, Rng& rng, bool loop = true) {
  const auto m = scene.channels();
  const auto n = scene.length();
  require(reference.channels() == m && reference.length() == n, ErrorKind::kData,
          "reference does not match scene dimensions");
  require(noise.channels() == 1 || noise.channels() == m, ErrorKind::kData,
          "noise must be mono or have one channel per microphone");
  require(begin >= 0 && end <= n && begin < end, ErrorKind::kData, "invalid active region");
  const double p_ref = reference.samples.middleCols(begin, end - begin).squaredNorm() /
                       static_cast<double>(m * (end - begin));
  require(p_ref > 0.0, ErrorKind::kData, "silent reference: cannot set SNR");

  const auto max_delay = static_cast<std::int64_t>(std::llround(0.002 * scene.fs));
  std::vector<Eigen::Index> delays(static_cast<std::size_t>(m), 0);
  if (noise.channels() == 1)
    for (auto& d : delays) d = static_cast<Eigen::Index>(uniform_int(rng, 0, max_delay));
  const Eigen::Index needed = n + *std::max_element(delays.begin(), delays.end());
  require(loop || noise.length() >= needed, ErrorKind::kData, "noise shorter than scene");
  require(noise.length() > 0, ErrorKind::kData, "empty noise");

  Eigen::MatrixXd nz(m, n);
  for (Eigen::Index c = 0; c < m; ++c) {
    const Eigen::Index src = noise.channels() == 1 ? 0 : c;
    const Eigen::Index d = delays[static_cast<std::size_t>(c)];
    for (Eigen::Index t = 0; t < n; ++t) nz(c, t) = noise.samples(src, (t + d) % noise.length());
  }
  const double p_noise = nz.middleCols(begin, end - begin).squaredNorm() / static_cast<double>(m * (end - begin));
  require(p_noise > 0.0, ErrorKind::kData, "silent noise over the active region");

  NoiseMix out;
  out.scale = std::sqrt(p_ref / (p_noise * std::pow(10.0, snr_db / 10.0)));
  out.mixture.fs = scene.fs;
  out.mixture.samples = scene.samples + out.scale * nz;
  const double p_scaled = (out.scale * nz.middleCols(begin, end - begin)).squaredNorm() /
                          static_cast<double>(m * (end - begin));
  out.measured_snr_db = 10.0 * std::log10(p_ref / p_scaled);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest rows (JSON lines).

inline constexpr const char* kSceneSchema = "wearbf-scene/1";

inline nlohmann::json scene_to_json(const SceneManifest& m) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : m.segments)
    segs.push_back({{"speaker", s.speaker},
                    {"start", static_cast<double>(s.start) / m.fs},
                    {"end", static_cast<double>(s.end) / m.fs},
                    {"start_sample", s.start},
                    {"end_sample", s.end},
                    {"transcript", s.transcript}});
  const auto& sp = m.spec;
  nlohmann::json j = {
      {"schema", kSceneSchema},
      {"audio", m.audio_path},
      {"geometry_id", m.geometry_id},
      {"fs", m.fs},
      {"num_samples", m.num_samples},
      {"segments", segs},
      {"reference", m.reference},
      {"room",
       {{"dimensions", {sp.room.dimensions.x(), sp.room.dimensions.y(), sp.room.dimensions.z()}},
        {"absorption", sp.room.absorption},
        {"max_order", sp.room.max_order}}},
      {"array_position", {sp.array_position.x(), sp.array_position.y(), sp.array_position.z()}},
      {"yaw_deg", rad2deg(sp.yaw)},
      {"partner_azimuth_deg", rad2deg(sp.partner_azimuth)},
      {"partner_distance", sp.partner_distance},
      {"crosstalk", crosstalk_name(sp.crosstalk)},
      {"self_other_overlap", sp.self_other_overlap},
      {"seed", sp.seed},
  };
  if (sp.crosstalk != Crosstalk::kNone) {
    j["bystander_azimuth_deg"] = rad2deg(sp.bystander_azimuth);
    j["bystander_distance"] = sp.bystander_distance;
    j["measured_overlap"] = m.measured_overlap;
  }
  if (m.measured_snr_db) {
    j["snr_db"] = sp.snr_db;
    j["measured_snr_db"] = *m.measured_snr_db;
    j["noise_scale"] = *m.noise_scale;
  }
  return j;
}

/// Checks a manifest row against the schema and, when `audio_dir` is given,
/// against the length of its audio file.
inline void validate_scene_row(const nlohmann::json& j, const std::string& audio_dir = "") {
  try {
    require(j.value("schema", "") == kSceneSchema, ErrorKind::kData, "scene row: wrong schema");
    for (const char* key : {"audio", "geometry_id", "fs", "num_samples", "segments", "reference"})
      require(j.contains(key), ErrorKind::kData, std::string("scene row: missing '") + key + "'");
    const auto n = j["num_samples"].get<long long>();
    for (const auto& s : j["segments"]) {
      const auto a = s.at("start_sample").get<long long>(), b = s.at("end_sample").get<long long>();
      require(a >= 0 && a < b && b <= n, ErrorKind::kData, "scene row: segment outside audio");
      const auto sp = s.at("speaker").get<std::string>();
      require(sp == "self" || sp == "other" || sp == "bystander", ErrorKind::kData, "scene row: bad speaker");
    }
    if (!audio_dir.empty()) {
      const auto path = (std::filesystem::path(audio_dir) / j["audio"].get<std::string>()).string();
      const Audio a = read_wav(path);
      require(a.length() == n, ErrorKind::kData, "scene row: audio length differs from manifest");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("scene row: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Clip and noise sources.

/// Directory of (name.wav, name.txt) pairs, sorted by name.
inline std::vector<Clip> load_clip_dir(const std::string& dir, double fs) {
  namespace fs_ = std::filesystem;
  require(fs_::is_directory(dir), ErrorKind::kData, "clip directory '" + dir + "' not found");
  std::vector<fs_::path> wavs;
  for (const auto& e : fs_::directory_iterator(dir))
    if (e.path().extension() == ".wav") wavs.push_back(e.path());
  std::sort(wavs.begin(), wavs.end());
  std::vector<Clip> clips;
  for (const auto& w : wavs) {
    auto txt = w;
    txt.replace_extension(".txt");
    require(fs_::exists(txt), ErrorKind::kData, "clip '" + w.string() + "' has no transcript file");
    std::ifstream in(txt);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    const Audio a = read_wav_at(w.string(), fs);
    Clip c;
    c.samples = a.samples.row(0).transpose();
    c.fs = a.fs;
    c.transcript = text;
    c.name = w.filename().string();
    clips.push_back(std::move(c));
  }
  require(!clips.empty(), ErrorKind::kData, "clip directory '" + dir + "' has no wav files");
  return clips;
}

inline std::vector<Audio> load_noise_dir(const std::string& dir, double fs) {
  namespace fs_ = std::filesystem;
  require(fs_::is_directory(dir), ErrorKind::kData, "noise directory '" + dir + "' not found");
  std::vector<fs_::path> wavs;
  for (const auto& e : fs_::directory_iterator(dir))
    if (e.path().extension() == ".wav") wavs.push_back(e.path());
  std::sort(wavs.begin(), wavs.end());
  std::vector<Audio> out;
  for (const auto& w : wavs) out.push_back(read_wav_at(w.string(), fs));
  require(!out.empty(), ErrorKind::kData, "noise directory '" + dir + "' has no wav files");
  return out;
}

}  // namespace wearbf

#endif  // WEARBF_SCENE_HPP
