#ifndef WEARBF_WAV_HPP
#define WEARBF_WAV_HPP

// Minimal RIFF/WAVE reader and writer: 16-bit PCM and 32-bit float, any
// channel count.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "wearbf/common.hpp"

namespace wearbf {

/// Multi-channel audio, channels x samples.
struct Audio {
  double fs = 16000.0;
  Eigen::MatrixXd samples;

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index length() const { return samples.cols(); }
};

enum class SampleFormat { kPcm16, kFloat32 };

inline void write_wav(const Audio& audio, std::ostream& out, SampleFormat format = SampleFormat::kFloat32) {
  const auto channels = static_cast<std::uint16_t>(audio.channels());
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(audio.fs));
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(audio.length()) * channels * (bits / 8);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, format == SampleFormat::kPcm16 ? 1 : 3);
  write_le<std::uint16_t>(out, channels);
  write_le<std::uint32_t>(out, rate);
  write_le<std::uint32_t>(out, rate * channels * (bits / 8));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  write_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (Eigen::Index t = 0; t < audio.length(); ++t)
    for (Eigen::Index c = 0; c < audio.channels(); ++c) {
      const double v = audio.samples(c, t);
      if (format == SampleFormat::kPcm16) {
        const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        write_le<std::int16_t>(out, static_cast<std::int16_t>(s));
      } else {
        write_le<float>(out, static_cast<float>(v));
      }
    }
}

inline void write_wav(const Audio& audio, const std::string& path,
                      SampleFormat format = SampleFormat::kFloat32) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot write '" + path + "'");
  write_wav(audio, out, format);
  require(static_cast<bool>(out), ErrorKind::kData, "write failed for '" + path + "'");
}

inline Audio read_wav(std::istream& in, const std::string& where = "<stream>") {
  char tag[4];
  auto read_tag = [&](const char* expect) {
    in.read(tag, 4);
    require(in && std::string(tag, 4) == expect, ErrorKind::kData,
            where + ": expected '" + expect + "' chunk");
  };
  read_tag("RIFF");
  read_le<std::uint32_t>(in);
  read_tag("WAVE");
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  for (;;) {
    in.read(tag, 4);
    require(static_cast<bool>(in), ErrorKind::kData, where + ": no data chunk");
    const std::string id(tag, 4);
    const auto size = read_le<std::uint32_t>(in);
    if (id == "fmt ") {
      format = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);
      read_le<std::uint16_t>(in);
      bits = read_le<std::uint16_t>(in);
      std::uint32_t consumed = 16;
      if (format == 0xFFFE && size >= 26) {  // WAVE_FORMAT_EXTENSIBLE
        read_le<std::uint16_t>(in);
        read_le<std::uint16_t>(in);
        read_le<std::uint32_t>(in);
        format = read_le<std::uint16_t>(in);
        consumed = 26;
      }
      in.ignore(size - consumed + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorKind::kData, where + ": data chunk before fmt chunk");
      require(channels > 0, ErrorKind::kData, where + ": zero channels");
      const bool pcm16 = format == 1 && bits == 16;
      const bool f32 = format == 3 && bits == 32;
      require(pcm16 || f32, ErrorKind::kData,
              where + ": only 16-bit PCM and 32-bit float WAV are supported");
      const std::uint32_t frame_bytes = channels * (bits / 8u);
      const Eigen::Index n = size / frame_bytes;
      Audio audio;
      audio.fs = rate;
      audio.samples.resize(channels, n);
      for (Eigen::Index t = 0; t < n; ++t)
        for (Eigen::Index c = 0; c < channels; ++c)
          audio.samples(c, t) = pcm16 ? read_le<std::int16_t>(in) / 32768.0
                                      : static_cast<double>(read_le<float>(in));
      return audio;
    } else {
      in.ignore(size + (size & 1));
    }
  }
}

inline Audio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open '" + path + "'");
  try {
    return read_wav(in, path);
  } catch (const Error& e) {
    fail(e.kind(), e.what());
  }
}

/// Reads a WAV and checks its rate against the configured one (no resampling).
inline Audio read_wav_at(const std::string& path, double fs) {
  Audio a = read_wav(path);
  require(std::abs(a.fs - fs) < 0.5, ErrorKind::kData,
          path + ": sample rate " + std::to_string(static_cast<long>(a.fs)) + " Hz != configured " +
              std::to_string(static_cast<long>(fs)) + " Hz (resampling unsupported)");
  return a;
}

}  // namespace wearbf

#endif  // WEARBF_WAV_HPP
