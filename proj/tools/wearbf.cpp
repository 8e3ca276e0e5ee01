// wearbf: design, analyze and apply wearable-array beamformer banks, and
// simulate multi-geometry conversation data.
//
// Every subcommand prints one JSON summary line on stdout. Exit codes:
// 0 success, 1 usage/config, 2 data, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wearbf/wearbf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wearbf;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;  // key=json
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::string log_level;
};

int g_verbosity = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
  if (g_verbosity >= 1) std::cerr << "[wearbf] " << msg << '\n';
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

/// Flags win over WEARBF_* environment variables, which win over defaults.
void resolve_globals(Globals& g) {
  if (!g.seed) {
    if (auto v = env("WEARBF_SEED")) {
      try {
        g.seed = std::stoull(*v);
      } catch (const std::exception&) {
        fail(ErrorKind::kConfig, "WEARBF_SEED is not an unsigned integer");
      }
    }
  }
  if (!g.workers) {
    if (auto v = env("WEARBF_WORKERS")) {
      try {
        g.workers = static_cast<unsigned>(std::stoul(*v));
      } catch (const std::exception&) {
        fail(ErrorKind::kConfig, "WEARBF_WORKERS is not an unsigned integer");
      }
    }
  }
  if (g.log_level.empty()) g.log_level = env("WEARBF_LOG_LEVEL").value_or("info");
  if (g.log_level == "quiet")
    g_verbosity = 0;
  else if (g.log_level == "info")
    g_verbosity = 1;
  else if (g.log_level == "debug")
    g_verbosity = 2;
  else
    fail(ErrorKind::kConfig, "log level must be quiet, info or debug");
  if (g.workers && *g.workers == 0) fail(ErrorKind::kConfig, "--workers must be >= 1");
}

unsigned workers_of(const Globals& g) { return g.workers.value_or(default_workers()); }
std::uint64_t seed_of(const Globals& g) { return g.seed.value_or(0); }

/// Config file (if any) with --set key=value overrides applied. Values parse
/// as JSON, falling back to a plain string.
json load_config(const Globals& g) {
  json j = json::object();
  if (!g.config_path.empty()) {
    require(fs::exists(g.config_path), ErrorKind::kConfig, "config file '" + g.config_path + "' not found");
    try {
      j = read_json_file(g.config_path);
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
    require(j.is_object(), ErrorKind::kConfig, "config must be a JSON object");
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::kConfig, "--set expects key=value, got '" + kv + "'");
    const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      j[key] = json::parse(value);
    } catch (const json::parse_error&) {
      j[key] = value;
    }
  }
  return j;
}

void require_out(const Globals& g, const std::string& what) {
  require(!g.out.empty(), ErrorKind::kConfig, "--out is required (" + what + ")");
}

void emit(const json& summary) { std::cout << summary.dump() << std::endl; }

std::string label_file_stem(const std::string& label) {
  std::string s;
  for (char ch : label) s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
  return s;
}

// ---------------------------------------------------------------------------

void cmd_design(const Globals& g) {
  require_out(g, "bank file");
  DesignConfig cfg = design_config_from_json(load_config(g));
  log_info("designing " + method_name(cfg.method) + " bank: " + std::to_string(cfg.azimuths_deg.size() + 1) +
           " directions x " + std::to_string(cfg.n_fft / 2 + 1) + " bins");
  const auto bank = design_bank(cfg, workers_of(g));
  save_bank(bank, g.out);
  double max_eps = 0.0;
  std::size_t loaded = 0;
  for (const auto& e : bank.entries)
    for (double eps : e.loading) {
      max_eps = std::max(max_eps, eps);
      loaded += eps > 0.0;
    }
  emit({{"command", "design"}, {"status", "ok"}, {"bank", g.out}, {"geometry_id", bank.geometry.id()},
        {"method", method_name(cfg.method)}, {"directions", bank.num_directions()}, {"bins", bank.num_bins()},
        {"wng_active_bins", loaded}, {"max_loading", max_eps}});
}

void cmd_pattern(const Globals& g, const std::string& bank_path, double freq, double resolution,
                 const std::string& format, bool include_mouth) {
  require_out(g, "output directory");
  const auto bank = load_bank(bank_path);
  std::size_t k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bank.frequencies.size(); ++i)
    if (std::abs(bank.frequencies[i] - freq) < best) best = std::abs(bank.frequencies[i] - freq), k = i;
  const double bin_f = bank.frequencies[k];
  const double spacing = bank.config.fs / bank.config.n_fft;
  require(best <= spacing / 2 + 1e-9, ErrorKind::kConfig, "--freq outside the bank's frequency range");
  fs::create_directories(g.out);
  const SteeringSource source = make_steering_source(bank.config);
  json files = json::array();
  for (std::size_t d = 0; d < bank.entries.size(); ++d) {
    const auto& e = bank.entries[d];
    if (!e.look.is_far_field() && !include_mouth) continue;
    const auto look = source.steer(bank.geometry, e.look, bin_f);
    const auto p = beam_pattern(e.weights[k], bank.geometry, look, resolution, bank.config.sound_speed);
    const auto path = (fs::path(g.out) / ("pattern_" + label_file_stem(e.label) + "_" +
                                          std::to_string(static_cast<long>(std::lround(bin_f))) + "Hz." + format))
                          .string();
    export_pattern(p, path, format);
    files.push_back(path);
  }
  emit({{"command", "pattern"}, {"status", "ok"}, {"frequency", bin_f}, {"files", files}});
}

const std::set<std::string>& rir_config_keys() {
  static const std::set<std::string> keys = {"room", "source", "array_position", "yaw_deg", "geometry",
                                             "fs", "sound_speed", "interp_taps"};
  return keys;
}

Vec3 vec3_of(const json& j, const std::string& what) {
  require(j.is_array() && j.size() == 3, ErrorKind::kConfig, what + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void cmd_rir(const Globals& g) {
  require_out(g, "RIR wav");
  const json j = load_config(g);
  check_keys(j, rir_config_keys(), "rir config");
  Rng rng(seed_of(g));
  RoomSpec room;
  ArrayGeometry geometry = reference_glasses_5mic();
  Vec3 array_pos, source;
  double yaw = 0.0;
  RirOptions opt;
  try {
    if (j.contains("geometry")) geometry = geometry_from_config(j["geometry"]);
    if (j.contains("room")) {
      const auto& r = j["room"];
      check_keys(r, {"dimensions", "absorption", "max_order"}, "rir config.room");
      if (r.contains("dimensions")) room.dimensions = vec3_of(r["dimensions"], "room.dimensions");
      if (r.contains("absorption")) {
        if (r["absorption"].is_number())
          room.absorption.fill(r["absorption"].get<double>());
        else
          room.absorption = r["absorption"].get<std::array<double, 6>>();
      }
      room.max_order = r.value("max_order", room.max_order);
    } else {
      room = sample_room(rng);
    }
    room.validate();
    const Vec3 centre = room.dimensions / 2;
    array_pos = j.contains("array_position") ? vec3_of(j["array_position"], "array_position")
                                             : Vec3(centre.x(), centre.y(), std::min(1.5, room.dimensions.z() / 2));
    source = j.contains("source") ? vec3_of(j["source"], "source") : Vec3(array_pos + Vec3(1.5, 0.0, 0.0));
    yaw = deg2rad(j.value("yaw_deg", 0.0));
    opt.fs = j.value("fs", opt.fs);
    opt.sound_speed = j.value("sound_speed", opt.sound_speed);
    opt.interp_taps = j.value("interp_taps", opt.interp_taps);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("rir config: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  std::vector<Vec3> mics;
  for (const auto& p : geometry.mics()) mics.push_back(array_pos + rot * p);
  const Rir rir = generate_rir_ism(room, source, mics, opt, "source");
  write_wav(Audio{opt.fs, rir.taps}, g.out, SampleFormat::kFloat32);
  json arrivals = json::array(), expected = json::array();
  for (std::size_t m = 0; m < mics.size(); ++m) {
    arrivals.push_back(first_arrival(rir.taps.row(static_cast<Eigen::Index>(m)).transpose()));
    expected.push_back(std::lround((source - mics[m]).norm() * opt.fs / opt.sound_speed));
  }
  emit({{"command", "rir"}, {"status", "ok"}, {"out", g.out}, {"channels", rir.num_channels()},
        {"length", rir.length()},
        {"room", {room.dimensions.x(), room.dimensions.y(), room.dimensions.z()}},
        {"first_arrival", arrivals}, {"direct_path_sample", expected}});
}

void cmd_scene(const Globals& g, std::size_t index) {
  require_out(g, "output directory");
  json j = load_config(g);
  const DatasetConfig cfg = dataset_config_from_json(j);
  fs::create_directories(g.out);
  const auto src = load_scene_sources(cfg, seed_of(g));
  GeneratedScene s = generate_scene(cfg, src, seed_of(g), index);
  const auto name = scene_file_name(index);
  s.audio.manifest.audio_path = name;
  write_wav(s.audio.mixture, (fs::path(g.out) / name).string(), cfg.format);
  json row = scene_to_json(s.audio.manifest);
  row["index"] = index;
  const auto manifest = (fs::path(g.out) / "manifest.jsonl").string();
  std::ofstream(manifest) << row.dump() << '\n';
  emit({{"command", "scene"}, {"status", "ok"}, {"manifest", manifest}, {"audio", name},
        {"geometry_id", s.audio.manifest.geometry_id}, {"reference", s.audio.manifest.reference}});
}

void cmd_dataset(const Globals& g) {
  require_out(g, "output directory");
  const DatasetConfig cfg = dataset_config_from_json(load_config(g));
  log_info("generating " + std::to_string(cfg.count) + " scenes");
  const auto s = build_dataset(cfg, seed_of(g), g.out, workers_of(g));
  json counts = json::object();
  for (std::size_t i = 0; i < cfg.catalog.entries.size(); ++i)
    counts[cfg.catalog.entries[i].geometry.id()] = s.geometry_counts[i];
  emit({{"command", "dataset"}, {"status", "ok"}, {"manifest", s.manifest_path}, {"scenes", s.scenes},
        {"geometry_counts", counts}});
}

void cmd_apply(const Globals& g, const std::string& bank_path, const std::string& in_path) {
  require_out(g, "output wav");
  const auto bank = load_bank(bank_path);
  const Audio in = read_wav_at(in_path, bank.config.fs);
  require(static_cast<std::size_t>(in.channels()) == bank.num_mics(), ErrorKind::kData,
          in_path + ": " + std::to_string(in.channels()) + " channels, bank expects " +
              std::to_string(bank.num_mics()));
  const Audio out = beamform(in, bank);
  write_wav(out, g.out, SampleFormat::kFloat32);
  emit({{"command", "apply"}, {"status", "ok"}, {"out", g.out}, {"channels", out.channels()},
        {"labels", bank_labels(bank)}, {"samples", out.length()}});
}

bool is_manifest(const std::string& path) {
  return fs::path(path).extension() == ".jsonl";
}

/// Rows of a manifest whose geometry matches the bank, with resolved paths.
std::vector<std::pair<std::string, std::string>> manifest_inputs(const std::string& manifest,
                                                                 const BeamformerBank& bank,
                                                                 std::size_t& skipped) {
  std::vector<std::pair<std::string, std::string>> out;  // (stem, wav path)
  const auto dir = fs::path(manifest).parent_path();
  skipped = 0;
  for (const auto& row : read_manifest(manifest)) {
    validate_scene_row(row);
    if (row["geometry_id"].get<std::string>() != bank.geometry.id()) {
      ++skipped;
      continue;
    }
    const auto audio = row["audio"].get<std::string>();
    out.emplace_back(fs::path(audio).stem().string(), (dir / audio).string());
  }
  return out;
}

FeatureTensor features_of(const std::string& wav, const BeamformerBank& bank) {
  const Audio a = read_wav_at(wav, bank.config.fs);
  require(static_cast<std::size_t>(a.channels()) == bank.num_mics(), ErrorKind::kData,
          wav + ": channel count does not match the bank");
  return featurize(a, bank);
}

void cmd_featurize(const Globals& g, const std::string& bank_path, const std::string& in_path,
                   const std::string& stats_path) {
  require_out(g, "feature file or directory");
  const auto bank = load_bank(bank_path);
  std::optional<CorpusStats> stats;
  if (!stats_path.empty()) stats = load_stats(stats_path);
  auto finish = [&](FeatureTensor x) { return stats ? normalize(x, *stats) : x; };
  if (!is_manifest(in_path)) {
    const auto x = finish(features_of(in_path, bank));
    save_features(x, g.out);
    emit({{"command", "featurize"}, {"status", "ok"}, {"out", g.out}, {"frames", x.frames},
          {"directions", x.directions}, {"dims", x.dims}, {"normalized", stats.has_value()}});
    return;
  }
  std::size_t skipped = 0;
  const auto inputs = manifest_inputs(in_path, bank, skipped);
  fs::create_directories(g.out);
  std::vector<Eigen::Index> frames(inputs.size());
  parallel_for(inputs.size(), workers_of(g), [&](std::size_t i) {
    const auto x = finish(features_of(inputs[i].second, bank));
    save_features(x, (fs::path(g.out) / (inputs[i].first + ".feat")).string());
    frames[i] = x.frames;
  });
  Eigen::Index total = 0;
  for (auto f : frames) total += f;
  emit({{"command", "featurize"}, {"status", "ok"}, {"out", g.out}, {"files", inputs.size()},
        {"skipped_other_geometry", skipped}, {"frames", total}, {"directions", bank.num_directions()},
        {"normalized", stats.has_value()}});
}

void cmd_stats(const Globals& g, const std::string& bank_path, const std::string& manifest) {
  require_out(g, "stats file");
  const auto bank = load_bank(bank_path);
  std::size_t skipped = 0;
  const auto inputs = manifest_inputs(manifest, bank, skipped);
  require(!inputs.empty(), ErrorKind::kData, "no manifest rows match the bank geometry '" + bank.geometry.id() + "'");
  std::vector<CorpusStats> partial(inputs.size());
  parallel_for(inputs.size(), workers_of(g), [&](std::size_t i) {
    const auto x = features_of(inputs[i].second, bank);
    partial[i] = CorpusStats::empty(x.directions, x.dims);
    partial[i].add(x);
  });
  CorpusStats s = partial.front();
  for (std::size_t i = 1; i < partial.size(); ++i) s.merge(partial[i]);  // index order: deterministic
  save_stats(s, g.out);
  emit({{"command", "stats"}, {"status", "ok"}, {"out", g.out}, {"utterances", inputs.size()},
        {"frames", s.count}, {"skipped_other_geometry", skipped}});
}

int cmd_verify(const Globals& g, const std::string& bank_path) {
  const auto bank = load_bank(bank_path);
  const auto v = verify_bank(bank, workers_of(g));
  emit({{"command", "verify"}, {"status", v.ok() ? "ok" : "failed"}, {"designs", v.designs_checked},
        {"failures", v.failures}, {"first_failure", v.first_failure},
        {"max_distortionless_error", v.max_distortionless_error}, {"max_wng_value", v.max_wng_value},
        {"max_stationarity_ratio", v.max_stationarity_ratio}, {"max_slackness", v.max_slackness}});
  if (!v.ok()) {
    std::cerr << "verify: " << v.failures << " of " << v.designs_checked
              << " designs fail; first: " << v.first_failure << '\n';
    return static_cast<int>(ErrorKind::kNumerical);
  }
  return 0;
}

// ---------------------------------------------------------------------------

const char* kDesignKeys = R"(Config keys (JSON object; unknown keys are rejected):
  geometry        built-in "glasses7" | "glasses7_5mic" (default) or {"id", "mics": [[x,y,z],...]}
  geometry_file   path to a geometry JSON file (alternative to geometry)
  atf_source      "freefield" (default) | "file"
  atf_file        ATF file used when atf_source = "file"
  diffuse         "sinc" (default) | "atf" (isotropic average over the ATF directions)
  directions      {"azimuths": [deg,...] (default [0,90,180,270]), "mouth": [x,y,z] (default [0.08,0,-0.06])}
  method          "nlcmv" (default) | "mvdr" | "superdirective" | "delay_and_sum"
  nulls           [{"azimuth": deg (180), "elevation": deg (0), "alpha": weight (10), "psd": (1),
                    "relative": bool (true: azimuth is an offset from each beam's look)}]
  fs              sample rate in Hz (16000)
  n_fft           FFT size (512); one design per bin 0..n_fft/2
  sound_speed     m/s (343)
  wng_tolerance   bisection tolerance on the white-noise-gain constraint (1e-8)
  wng_margin      gain margin gamma in [1/M, 1] (1)
  frequencies     explicit design frequencies in Hz, overriding the bin grid (absent)
)";

const char* kDatasetKeys = R"(Config keys (JSON object; unknown keys are rejected):
  catalog                 {"geometries": [{"geometry": name|{id,mics}, "subset": [idx..]?, "id": str?,
                           "proportion": p}]}; proportions sum to 1
  catalog_file            path to a catalog JSON file
  geometry                single geometry (proportion 1); default "glasses7_5mic"
  clip_dir                directory of (name.wav, name.txt) mono clips; empty = synthetic clips
  noise_dir               directory of noise wavs; empty = synthetic noise
  count                   number of scenes (10; 'scene' ignores it)
  fs                      sample rate (16000); inputs must match
  sound_speed             m/s (343)
  self_other_overlap      fraction of the shorter main clip overlapped by self/other turns (0.1)
  synthetic_clips         number of synthetic clips (16)
  synthetic_clip_seconds  length of synthetic clips (2.0)
  noise                   add noise at the sampled SNR (true)
  max_order               ISM reflection order (6)
  sample_format           "float32" (default) | "pcm16"
)";

const char* kRirKeys = R"(Config keys (JSON object; unknown keys are rejected):
  room            {"dimensions": [x,y,z], "absorption": a | [x0,x1,y0,y1,z0,z1], "max_order": n};
                  absent: sampled from --seed within [5,5,2]..[10,10,6] m
  source          source position in room coordinates (default 1.5 m in front of the array)
  array_position  array reference point in room coordinates (default room centre, z = 1.5)
  yaw_deg         array yaw (0)
  geometry        as for design (default "glasses7_5mic")
  fs              sample rate (16000)
  sound_speed     m/s (343)
  interp_taps     fractional-delay filter length, odd (81)
)";

const char* kGlobalHelp = R"(Global options apply to every subcommand. Environment overrides (used when the
flag is absent): WEARBF_SEED, WEARBF_WORKERS, WEARBF_LOG_LEVEL. Flags win over
environment, --set overrides win over the config file.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wearbf: fixed beamformer banks and conversation-scene simulation for wearable arrays"};
  app.footer(kGlobalHelp);
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_flag = 0;
  unsigned workers_flag = 0;
  auto add_globals = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", g.config_path, "JSON config file");
      sub->add_option("--set", g.overrides, "override a config key: key=json (repeatable)");
    }
    sub->add_option("--seed", seed_flag, "random seed (default 0)");
    sub->add_option("--workers", workers_flag, "worker threads (default: logical cores)");
    sub->add_option("--out", g.out, "output path");
    sub->add_option("--log-level", g.log_level, "quiet | info | debug")->check(CLI::IsMember({"quiet", "info", "debug"}));
  };

  auto* design = app.add_subcommand("design", "design a K+1 beamformer bank");
  add_globals(design, true);
  design->footer(kDesignKeys);

  auto* pattern = app.add_subcommand("pattern", "horizontal beam patterns of a bank at one frequency");
  add_globals(pattern, false);
  std::string bank_path, in_path, stats_path, format = "csv";
  double freq = 1000.0, resolution = 1.0;
  bool include_mouth = false;
  pattern->add_option("--bank", bank_path, "bank file")->required();
  pattern->add_option("--freq", freq, "frequency in Hz, snapped to the nearest bin (1000)");
  pattern->add_option("--resolution", resolution, "azimuth step in degrees, dividing 360 (1)");
  pattern->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  pattern->add_flag("--include-mouth", include_mouth, "also export the mouth beam");

  auto* rir = app.add_subcommand("rir", "image-source room impulse responses to every mic");
  add_globals(rir, true);
  rir->footer(kRirKeys);

  auto* scene = app.add_subcommand("scene", "simulate one conversation scene");
  add_globals(scene, true);
  std::size_t index = 0;
  scene->add_option("--index", index, "scene index within the seeded run (0)");
  scene->footer(kDatasetKeys);

  auto* dataset = app.add_subcommand("dataset", "simulate a multi-geometry scene dataset");
  add_globals(dataset, true);
  dataset->footer(kDatasetKeys);

  auto* apply = app.add_subcommand("apply", "beamform M-channel audio into K+1 channels");
  add_globals(apply, false);
  apply->add_option("--bank", bank_path, "bank file")->required();
  apply->add_option("--in", in_path, "M-channel wav")->required();

  auto* featurize_cmd = app.add_subcommand("featurize", "direction-indexed log-Mel features");
  add_globals(featurize_cmd, false);
  featurize_cmd->add_option("--bank", bank_path, "bank file")->required();
  featurize_cmd->add_option("--in", in_path, "M-channel wav, or a manifest.jsonl")->required();
  featurize_cmd->add_option("--stats", stats_path, "corpus stats file; normalizes when given");

  auto* stats = app.add_subcommand("stats", "corpus mean/variance of log-Mel features");
  add_globals(stats, false);
  stats->add_option("--bank", bank_path, "bank file")->required();
  stats->add_option("--manifest", in_path, "manifest.jsonl")->required();

  auto* verify = app.add_subcommand("verify", "re-check every design of a bank (KKT certificate)");
  add_globals(verify, false);
  verify->add_option("--bank", bank_path, "bank file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }

  try {
    for (auto* sub : app.get_subcommands()) {
      if (sub->count("--seed")) g.seed = seed_flag;
      if (sub->count("--workers")) g.workers = workers_flag;
    }
    resolve_globals(g);
    if (*design) cmd_design(g);
    if (*pattern) cmd_pattern(g, bank_path, freq, resolution, format, include_mouth);
    if (*rir) cmd_rir(g);
    if (*scene) cmd_scene(g, index);
    if (*dataset) cmd_dataset(g);
    if (*apply) cmd_apply(g, bank_path, in_path);
    if (*featurize_cmd) cmd_featurize(g, bank_path, in_path, stats_path);
    if (*stats) cmd_stats(g, bank_path, in_path);
    if (*verify) return cmd_verify(g, bank_path);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    emit({{"status", "error"}, {"kind", static_cast<int>(e.kind())}, {"message", e.what()}});
    return static_cast<int>(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    emit({{"status", "error"}, {"kind", 1}, {"message", e.what()}});
    return static_cast<int>(ErrorKind::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    emit({{"status", "error"}, {"kind", 2}, {"message", e.what()}});
    return static_cast<int>(ErrorKind::kData);
  }
}
