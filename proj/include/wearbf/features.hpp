#ifndef WEARBF_FEATURES_HPP
#define WEARBF_FEATURES_HPP

// Direction-indexed log-Mel features over beamformer-bank outputs.
//
// Conventions: HTK mel scale, power spectrum, natural log floored at 1e-10.
// The analysis window and hop are the bank's STFT (sqrt-Hann, n_fft, hop).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wearbf/bank.hpp"
#include "wearbf/common.hpp"
#include "wearbf/stft.hpp"
#include "wearbf/wav.hpp"

namespace wearbf {

inline constexpr int kMelBands = 80;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kVarianceFloor = 1e-8;

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

struct MelFilterbank {
  double fs = 16000.0;
  int n_fft = 512;
  std::vector<double> centers;  // Hz, one per band
  Eigen::MatrixXd weights;      // bands x bins
};

/// Triangular filters with edges equally spaced in mel from 0 to fs/2.
inline MelFilterbank mel_filterbank(double fs, int n_fft, int bands = kMelBands) {
  require(fs > 0.0 && n_fft >= 2 && bands >= 1, ErrorKind::kConfig, "invalid mel filterbank parameters");
  MelFilterbank fb;
  fb.fs = fs;
  fb.n_fft = n_fft;
  const int bins = n_fft / 2 + 1;
  const double mel_hi = hz_to_mel(fs / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands + 2));
  for (int i = 0; i < bands + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_hi * i / (bands + 1));
  fb.weights = Eigen::MatrixXd::Zero(bands, bins);
  for (int b = 0; b < bands; ++b) {
    const double lo = edges[static_cast<std::size_t>(b)], c = edges[static_cast<std::size_t>(b) + 1],
                 hi = edges[static_cast<std::size_t>(b) + 2];
    fb.centers.push_back(c);
    for (int k = 0; k < bins; ++k) {
      const double f = k * fs / n_fft;
      if (f > lo && f < hi) fb.weights(b, k) = f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
    }
  }
  return fb;
}

/// frames x bins complex STFT -> frames x bands log-Mel energies.
inline Eigen::MatrixXd log_mel(const CMatrix& spec, const MelFilterbank& fb) {
  require(spec.cols() == fb.weights.cols(), ErrorKind::kData,
          "spectrogram has " + std::to_string(spec.cols()) + " bins, filterbank expects " +
              std::to_string(fb.weights.cols()));
  const Eigen::MatrixXd power = spec.cwiseAbs2();
  Eigen::MatrixXd e = power * fb.weights.transpose();
  return e.unaryExpr([](double v) { return std::log(std::max(v, kLogFloor)); });
}

inline Eigen::MatrixXd log_mel(const CMatrix& spec, double fs) {
  return log_mel(spec, mel_filterbank(fs, 2 * (static_cast<int>(spec.cols()) - 1)));
}

// ---------------------------------------------------------------------------

/// frames x directions x dims, row-major in that order.
struct FeatureTensor {
  Eigen::Index frames = 0;
  Eigen::Index directions = 0;
  Eigen::Index dims = kMelBands;
  double frame_rate = 0.0;
  std::vector<std::string> labels;
  std::vector<double> data;

  double& at(Eigen::Index t, Eigen::Index d, Eigen::Index k) {
    return data[static_cast<std::size_t>((t * directions + d) * dims + k)];
  }
  double at(Eigen::Index t, Eigen::Index d, Eigen::Index k) const {
    return data[static_cast<std::size_t>((t * directions + d) * dims + k)];
  }
  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline FeatureTensor featurize_spectrogram(const Spectrogram& beams, const std::vector<std::string>& labels) {
  require(beams.channels.size() == labels.size(), ErrorKind::kData, "one label per beam required");
  const auto fb = mel_filterbank(beams.params.fs, beams.params.n_fft);
  FeatureTensor ft;
  ft.frames = beams.frames();
  ft.directions = static_cast<Eigen::Index>(labels.size());
  ft.frame_rate = beams.params.fs / beams.params.hop;
  ft.labels = labels;
  ft.data.assign(static_cast<std::size_t>(ft.frames * ft.directions * ft.dims), 0.0);
  for (Eigen::Index d = 0; d < ft.directions; ++d) {
    const Eigen::MatrixXd lm = log_mel(beams.channels[static_cast<std::size_t>(d)], fb);
    for (Eigen::Index t = 0; t < ft.frames; ++t)
      for (Eigen::Index k = 0; k < ft.dims; ++k) ft.at(t, d, k) = lm(t, k);
  }
  return ft;
}

inline std::vector<std::string> bank_labels(const BeamformerBank& bank) {
  std::vector<std::string> labels;
  for (const auto& e : bank.entries) labels.push_back(e.label);
  return labels;
}

/// M-channel audio -> (K+1)-direction feature tensor.
inline FeatureTensor featurize(const Audio& audio, const BeamformerBank& bank, int hop = -1) {
  require(std::abs(audio.fs - bank.config.fs) < 0.5, ErrorKind::kData,
          "audio sample rate does not match bank fs (resampling unsupported)");
  StftParams p{bank.config.fs, bank.config.n_fft, hop > 0 ? hop : bank.config.n_fft / 2};
  return featurize_spectrogram(apply_bank(stft(audio, p), bank), bank_labels(bank));
}

// ---------------------------------------------------------------------------
// Corpus statistics. Population variance per (direction, coefficient).

struct CorpusStats {
  Eigen::Index directions = 0;
  Eigen::Index dims = kMelBands;
  std::int64_t count = 0;  // frames
  Eigen::ArrayXd mean;     // directions * dims
  Eigen::ArrayXd m2;       // sum of squared deviations

  static CorpusStats empty(Eigen::Index directions, Eigen::Index dims = kMelBands) {
    CorpusStats s;
    s.directions = directions;
    s.dims = dims;
    s.mean = Eigen::ArrayXd::Zero(directions * dims);
    s.m2 = Eigen::ArrayXd::Zero(directions * dims);
    return s;
  }

  Eigen::ArrayXd variance() const {
    require(count > 0, ErrorKind::kData, "statistics need at least one frame");
    return m2 / static_cast<double>(count);
  }

  /// Welford update with every frame of `x`.
  void add(const FeatureTensor& x) {
    require(x.directions == directions && x.dims == dims, ErrorKind::kData,
            "feature dimensions do not match the statistics");
    const Eigen::Index width = directions * dims;
    for (Eigen::Index t = 0; t < x.frames; ++t) {
      ++count;
      const double n = static_cast<double>(count);
      const Eigen::Map<const Eigen::ArrayXd> v(x.data.data() + t * width, width);
      const Eigen::ArrayXd delta = v - mean;
      mean += delta / n;
      m2 += delta * (v - mean);
    }
  }

  /// Chan et al. pairwise combination.
  void merge(const CorpusStats& o) {
    require(o.directions == directions && o.dims == dims, ErrorKind::kData,
            "cannot merge statistics of different dimensions");
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count), n = na + nb;
    const Eigen::ArrayXd delta = o.mean - mean;
    mean += delta * (nb / n);
    m2 += o.m2 + delta.square() * (na * nb / n);
    count += o.count;
  }
};

inline CorpusStats accumulate_stats(const std::vector<FeatureTensor>& tensors) {
  require(!tensors.empty(), ErrorKind::kData, "no feature tensors");
  auto s = CorpusStats::empty(tensors.front().directions, tensors.front().dims);
  for (const auto& t : tensors) s.add(t);
  require(s.count > 0, ErrorKind::kData, "statistics need at least one frame");
  return s;
}

/// Reference algorithm: exact mean first, then squared deviations.
inline CorpusStats accumulate_stats_two_pass(const std::vector<FeatureTensor>& tensors) {
  require(!tensors.empty(), ErrorKind::kData, "no feature tensors");
  auto s = CorpusStats::empty(tensors.front().directions, tensors.front().dims);
  const Eigen::Index width = s.directions * s.dims;
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(width);
  for (const auto& x : tensors) {
    require(x.directions == s.directions && x.dims == s.dims, ErrorKind::kData,
            "feature dimensions do not match the statistics");
    for (Eigen::Index t = 0; t < x.frames; ++t)
      sum += Eigen::Map<const Eigen::ArrayXd>(x.data.data() + t * width, width);
    s.count += x.frames;
  }
  require(s.count > 0, ErrorKind::kData, "statistics need at least one frame");
  s.mean = sum / static_cast<double>(s.count);
  for (const auto& x : tensors)
    for (Eigen::Index t = 0; t < x.frames; ++t)
      s.m2 += (Eigen::Map<const Eigen::ArrayXd>(x.data.data() + t * width, width) - s.mean).square();
  return s;
}

inline FeatureTensor normalize(const FeatureTensor& x, const CorpusStats& s) {
  require(x.directions == s.directions && x.dims == s.dims, ErrorKind::kData,
          "feature dimensions do not match the statistics");
  const Eigen::Index width = s.directions * s.dims;
  const Eigen::ArrayXd inv_sd = (s.variance() + kVarianceFloor).sqrt().inverse();
  FeatureTensor y = x;
  for (Eigen::Index t = 0; t < x.frames; ++t) {
    Eigen::Map<Eigen::ArrayXd> v(y.data.data() + t * width, width);
    v = (v - s.mean) * inv_sd;
  }
  return y;
}

inline FeatureTensor denormalize(const FeatureTensor& x, const CorpusStats& s) {
  require(x.directions == s.directions && x.dims == s.dims, ErrorKind::kData,
          "feature dimensions do not match the statistics");
  const Eigen::Index width = s.directions * s.dims;
  const Eigen::ArrayXd sd = (s.variance() + kVarianceFloor).sqrt();
  FeatureTensor y = x;
  for (Eigen::Index t = 0; t < x.frames; ++t) {
    Eigen::Map<Eigen::ArrayXd> v(y.data.data() + t * width, width);
    v = v * sd + s.mean;
  }
  return y;
}

/// Concatenates `factor` consecutive frames (all directions) per step; the
/// last step is zero-padded. Returns steps x (factor * directions * dims).
inline Eigen::MatrixXd stack_frames(const FeatureTensor& x, int factor = 6) {
  require(factor >= 1, ErrorKind::kConfig, "stacking factor must be >= 1");
  const Eigen::Index width = x.directions * x.dims;
  const Eigen::Index steps = (x.frames + factor - 1) / factor;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(steps, factor * width);
  for (Eigen::Index t = 0; t < x.frames; ++t)
    out.block(t / factor, (t % factor) * width, 1, width) =
        Eigen::Map<const Eigen::RowVectorXd>(x.data.data() + t * width, width);
  return out;
}

// ---------------------------------------------------------------------------
// Feature file: one JSON header line, then frames*directions*dims LE float32.

inline constexpr const char* kFeatureFormat = "wearbf-features";

inline void write_features(const FeatureTensor& x, std::ostream& out) {
  const nlohmann::json header = {
      {"format", kFeatureFormat},
      {"version", 1},
      {"frames", x.frames},
      {"directions", x.directions},
      {"dims", x.dims},
      {"frame_rate", x.frame_rate},
      {"labels", x.labels},
      {"layout", "frames,directions,dims"},
      {"dtype", "float32le"},
      {"feature", {{"type", "log-mel"}, {"mel", "htk"}, {"spectrum", "power"}, {"log", "natural"},
                   {"floor", kLogFloor}, {"window", "sqrt-hann"}}},
  };
  out << header.dump() << '\n';
  for (double v : x.data) write_le<float>(out, static_cast<float>(v));
}

inline FeatureTensor read_features(std::istream& in, const std::string& where = "<stream>") {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kData, where + ": missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, where + ": bad header: " + e.what());
  }
  require(h.value("format", "") == kFeatureFormat, ErrorKind::kData, where + ": not a feature file");
  FeatureTensor x;
  try {
    x.frames = h.at("frames").get<Eigen::Index>();
    x.directions = h.at("directions").get<Eigen::Index>();
    x.dims = h.at("dims").get<Eigen::Index>();
    x.frame_rate = h.at("frame_rate").get<double>();
    x.labels = h.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, where + ": bad header: " + e.what());
  }
  require(x.frames >= 0 && x.directions >= 1 && x.dims >= 1, ErrorKind::kData, where + ": bad dimensions");
  require(static_cast<Eigen::Index>(x.labels.size()) == x.directions, ErrorKind::kData,
          where + ": label count does not match direction count");
  const auto n = static_cast<std::size_t>(x.frames * x.directions * x.dims);
  x.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      x.data[i] = static_cast<double>(read_le<float>(in));
    } catch (const Error&) {
      fail(ErrorKind::kData, where + ": payload truncated at value " + std::to_string(i) + " of " + std::to_string(n));
    }
  }
  require(in.peek() == std::char_traits<char>::eof(), ErrorKind::kData, where + ": trailing bytes after payload");
  return x;
}

inline void save_features(const FeatureTensor& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  write_features(x, out);
  require(static_cast<bool>(out), ErrorKind::kData, "write failed for '" + path + "'");
}

inline FeatureTensor load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  return read_features(in, path);
}

// Stats file (JSON). Doubles round-trip exactly through nlohmann's printer.

inline nlohmann::json stats_to_json(const CorpusStats& s) {
  return {{"format", "wearbf-stats"}, {"version", 1},
          {"directions", s.directions}, {"dims", s.dims}, {"count", s.count},
          {"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"m2", std::vector<double>(s.m2.data(), s.m2.data() + s.m2.size())}};
}

inline CorpusStats stats_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.value("format", "") == "wearbf-stats", ErrorKind::kData, "not a statistics file");
  CorpusStats s;
  std::vector<double> mean, m2;
  try {
    s = CorpusStats::empty(j.at("directions").get<Eigen::Index>(), j.at("dims").get<Eigen::Index>());
    s.count = j.at("count").get<std::int64_t>();
    mean = j.at("mean").get<std::vector<double>>();
    m2 = j.at("m2").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("statistics file: ") + e.what());
  }
  require(static_cast<Eigen::Index>(mean.size()) == s.mean.size() &&
              static_cast<Eigen::Index>(m2.size()) == s.m2.size() && s.count > 0,
          ErrorKind::kData, "statistics file dimensions are inconsistent");
  s.mean = Eigen::Map<const Eigen::ArrayXd>(mean.data(), s.mean.size());
  s.m2 = Eigen::Map<const Eigen::ArrayXd>(m2.data(), s.m2.size());
  require((s.m2 >= 0.0).all(), ErrorKind::kData, "negative variance in statistics file");
  return s;
}

inline void save_stats(const CorpusStats& s, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  out << stats_to_json(s).dump(1) << '\n';
}

inline CorpusStats load_stats(const std::string& path) {
  return stats_from_json(read_json_file(path));
}

}  // namespace wearbf

#endif  // WEARBF_FEATURES_HPP
