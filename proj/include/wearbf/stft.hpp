#ifndef WEARBF_STFT_HPP
#define WEARBF_STFT_HPP

// Square-root-Hann weighted overlap-add STFT, plus application of a
// beamformer bank in the STFT domain.

#include <cmath>
#include <deque>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wearbf/bank.hpp"
#include "wearbf/common.hpp"
#include "wearbf/wav.hpp"

namespace wearbf {

struct StftParams {
  double fs = 16000.0;
  int n_fft = 512;
  int hop = 256;

  int bins() const { return n_fft / 2 + 1; }

  void validate() const {
    require(n_fft >= 2 && n_fft % 2 == 0, ErrorKind::kConfig, "n_fft must be even");
    require(hop >= 1 && n_fft % hop == 0 && hop <= n_fft / 2, ErrorKind::kConfig,
            "hop must divide n_fft and be at most n_fft/2");
  }
};

/// channels x (frames x bins)
struct Spectrogram {
  StftParams params;
  Eigen::Index num_samples = 0;  // length of the analysed signal
  std::vector<CMatrix> channels;

  Eigen::Index frames() const { return channels.empty() ? 0 : channels.front().rows(); }
  Eigen::Index bins() const { return params.bins(); }
};

/// Periodic square-root Hann window.
inline Eigen::VectorXd sqrt_hann(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = std::sin(kPi * i / n);
  return w;
}

inline Eigen::Index stft_frame_count(Eigen::Index num_samples, const StftParams& p) {
  return (num_samples - 1 + p.n_fft / 2) / p.hop + 1;
}

inline Spectrogram stft(const Audio& audio, const StftParams& params) {
  params.validate();
  const int n = params.n_fft;
  require(audio.length() >= n, ErrorKind::kData,
          "input too short for STFT: " + std::to_string(audio.length()) + " < n_fft " + std::to_string(n));
  Spectrogram s;
  s.params = params;
  s.num_samples = audio.length();
  const Eigen::Index frames = stft_frame_count(audio.length(), params);
  const Eigen::VectorXd win = sqrt_hann(n);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::vector<Complex> spec;
  for (Eigen::Index c = 0; c < audio.channels(); ++c) {
    CMatrix m(frames, params.bins());
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index start = t * params.hop - n / 2;
      for (int i = 0; i < n; ++i) {
        const Eigen::Index idx = start + i;
        buf[static_cast<std::size_t>(i)] =
            (idx >= 0 && idx < audio.length()) ? audio.samples(c, idx) * win(i) : 0.0;
      }
      fft.fwd(spec, buf);
      for (int b = 0; b < params.bins(); ++b) m(t, b) = spec[static_cast<std::size_t>(b)];
    }
    s.channels.push_back(std::move(m));
  }
  return s;
}

inline Audio istft(const Spectrogram& spec) {
  const auto& p = spec.params;
  p.validate();
  const int n = p.n_fft;
  for (const auto& ch : spec.channels)
    require(ch.cols() == p.bins() && ch.rows() == spec.frames(), ErrorKind::kData,
            "inconsistent spectrogram dimensions");
  require(spec.frames() == stft_frame_count(spec.num_samples, p), ErrorKind::kData,
          "frame count does not match signal length");
  const Eigen::VectorXd win = sqrt_hann(n);
  const Eigen::Index padded = (spec.frames() - 1) * p.hop + n;
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(padded);
  for (Eigen::Index t = 0; t < spec.frames(); ++t) norm.segment(t * p.hop, n) += win.cwiseAbs2();

  Audio out;
  out.fs = p.fs;
  out.samples = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.channels.size()), spec.num_samples);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> half(static_cast<std::size_t>(p.bins()));
  std::vector<double> frame;
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(padded);
    for (Eigen::Index t = 0; t < spec.frames(); ++t) {
      for (int b = 0; b < p.bins(); ++b) half[static_cast<std::size_t>(b)] = spec.channels[c](t, b);
      fft.inv(frame, half, n);
      for (int i = 0; i < n; ++i) acc(t * p.hop + i) += frame[static_cast<std::size_t>(i)] * win(i);
    }
    for (Eigen::Index i = 0; i < spec.num_samples; ++i) {
      const Eigen::Index k = i + n / 2;
      out.samples(static_cast<Eigen::Index>(c), i) = norm(k) > 1e-10 ? acc(k) / norm(k) : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Bank weights as (bins x M) matrices, one per direction.
inline std::vector<CMatrix> bank_weight_matrices(const BeamformerBank& bank) {
  std::vector<CMatrix> out;
  for (const auto& e : bank.entries) {
    CMatrix w(static_cast<Eigen::Index>(bank.num_bins()), static_cast<Eigen::Index>(bank.num_mics()));
    for (std::size_t k = 0; k < bank.num_bins(); ++k) w.row(static_cast<Eigen::Index>(k)) = e.weights[k].transpose();
    out.push_back(std::move(w));
  }
  return out;
}

/// Output channel k, frame t, bin b = h_k(b)^H x(t, b).
inline Spectrogram apply_bank(const Spectrogram& spec, const BeamformerBank& bank) {
  require(spec.channels.size() == bank.num_mics(), ErrorKind::kData,
          "spectrogram has " + std::to_string(spec.channels.size()) + " channels, bank expects " +
              std::to_string(bank.num_mics()));
  bool grid_ok = static_cast<std::size_t>(spec.bins()) == bank.num_bins();
  for (std::size_t k = 0; grid_ok && k < bank.num_bins(); ++k)
    grid_ok = std::abs(bank.frequencies[k] - static_cast<double>(k) * spec.params.fs / spec.params.n_fft) < 1e-9;
  require(grid_ok, ErrorKind::kData, "STFT grid does not match the bank's frequency grid");
  Spectrogram out;
  out.params = spec.params;
  out.num_samples = spec.num_samples;
  const auto weights = bank_weight_matrices(bank);
  for (const auto& w : weights) {
    CMatrix y = CMatrix::Zero(spec.frames(), spec.bins());
    for (std::size_t m = 0; m < spec.channels.size(); ++m) {
      const auto wm = w.col(static_cast<Eigen::Index>(m)).conjugate().transpose();  // 1 x bins
      y.array() += spec.channels[m].array().rowwise() * wm.array();
    }
    out.channels.push_back(std::move(y));
  }
  return out;
}

/// Time-domain convenience: K+1 beamformed channels from M-channel audio.
inline Audio beamform(const Audio& audio, const BeamformerBank& bank, int hop = -1) {
  require(std::abs(audio.fs - bank.config.fs) < 0.5, ErrorKind::kData,
          "audio sample rate does not match bank fs (resampling unsupported)");
  StftParams p{bank.config.fs, bank.config.n_fft, hop > 0 ? hop : bank.config.n_fft / 2};
  return istft(apply_bank(stft(audio, p), bank));
}

// ---------------------------------------------------------------------------
// Streaming. Frames are produced one hop at a time with one window of
// lookahead, matching the batch STFT frame for frame.

class StreamingAnalyzer {
 public:
  StreamingAnalyzer(StftParams params, Eigen::Index channels)
      : p_(params), win_(sqrt_hann(params.n_fft)),
        buffer_(Eigen::MatrixXd::Zero(channels, params.n_fft)), fill_(params.n_fft / 2) {
    p_.validate();
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  /// Pushes `block` (channels x hop). Returns a frame (channels x bins) once
  /// a full window is buffered, otherwise an empty matrix.
  CMatrix push(const Eigen::MatrixXd& block) {
    require(block.rows() == buffer_.rows() && block.cols() == p_.hop, ErrorKind::kData,
            "streaming block must be channels x hop");
    const Eigen::Index n = p_.n_fft;
    if (fill_ + p_.hop <= n) {
      buffer_.middleCols(fill_, p_.hop) = block;
      fill_ += p_.hop;
    } else {
      buffer_.leftCols(n - p_.hop) = buffer_.rightCols(n - p_.hop).eval();
      buffer_.rightCols(p_.hop) = block;
    }
    if (fill_ < n) return {};
    CMatrix frame(buffer_.rows(), p_.bins());
    std::vector<double> buf(static_cast<std::size_t>(n));
    std::vector<Complex> spec;
    for (Eigen::Index c = 0; c < buffer_.rows(); ++c) {
      for (Eigen::Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = buffer_(c, i) * win_(i);
      fft_.fwd(spec, buf);
      for (int b = 0; b < p_.bins(); ++b) frame(c, b) = spec[static_cast<std::size_t>(b)];
    }
    return frame;
  }

 private:
  StftParams p_;
  Eigen::VectorXd win_;
  Eigen::MatrixXd buffer_;
  Eigen::Index fill_;
  Eigen::FFT<double> fft_;
};

/// Overlap-adds frames (channels x bins) and releases hop samples per frame.
/// Steady-state output equals the batch inverse, delayed by n_fft - hop.
class StreamingSynthesizer {
 public:
  StreamingSynthesizer(StftParams params, Eigen::Index channels)
      : p_(params), win_(sqrt_hann(params.n_fft)), acc_(Eigen::MatrixXd::Zero(channels, params.n_fft)),
        scale_(2.0 * params.hop / params.n_fft) {
    p_.validate();
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  Eigen::MatrixXd push(const CMatrix& frame) {
    require(frame.rows() == acc_.rows() && frame.cols() == p_.bins(), ErrorKind::kData,
            "streaming frame must be channels x bins");
    const int n = p_.n_fft;
    std::vector<Complex> half(static_cast<std::size_t>(p_.bins()));
    std::vector<double> td;
    for (Eigen::Index c = 0; c < acc_.rows(); ++c) {
      for (int b = 0; b < p_.bins(); ++b) half[static_cast<std::size_t>(b)] = frame(c, b);
      fft_.inv(td, half, n);
      for (int i = 0; i < n; ++i) acc_(c, i) += td[static_cast<std::size_t>(i)] * win_(i) * scale_;
    }
    Eigen::MatrixXd out = acc_.leftCols(p_.hop);
    acc_.leftCols(n - p_.hop) = acc_.rightCols(n - p_.hop).eval();
    acc_.rightCols(p_.hop).setZero();
    return out;
  }

 private:
  StftParams p_;
  Eigen::VectorXd win_;
  Eigen::MatrixXd acc_;
  double scale_;
  Eigen::FFT<double> fft_;
};

}  // namespace wearbf

#endif  // WEARBF_STFT_HPP
