#ifndef WEARBF_RIR_HPP
#define WEARBF_RIR_HPP

// Shoebox room impulse responses by the image-source method.

#include <array>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wearbf/common.hpp"

namespace wearbf {

struct RoomSpec {
  Vec3 dimensions{6.0, 5.0, 3.0};
  /// Energy absorption per wall: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
  std::array<double, 6> absorption{0.4, 0.4, 0.4, 0.4, 0.4, 0.4};
  int max_order = 6;

  void validate() const {
    require(dimensions.allFinite() && (dimensions.array() > 0.0).all(), ErrorKind::kData,
            "room dimensions must be positive");
    for (double a : absorption)
      require(a > 0.0 && a <= 1.0, ErrorKind::kData, "wall absorption must lie in (0, 1]");
    require(max_order >= 0, ErrorKind::kData, "max reflection order must be >= 0");
  }

  bool contains(const Vec3& p, double margin = 0.0) const {
    return (p.array() > margin).all() && (p.array() < dimensions.array() - margin).all();
  }

  /// Pressure reflection coefficient of wall w.
  double reflection(int w) const { return std::sqrt(1.0 - absorption[static_cast<std::size_t>(w)]); }
};

struct ImageSource {
  Vec3 position;
  int order = 0;
  double gain = 1.0;  // product of wall reflection coefficients
};

/// All images with total reflection count <= max_order. Gains that vanish
/// (fully absorptive walls) are dropped.
inline std::vector<ImageSource> image_sources(const RoomSpec& room, const Vec3& source, int max_order) {
  std::vector<ImageSource> out;
  const int n_max = max_order;
  for (int nx = -n_max; nx <= n_max; ++nx)
    for (int qx = 0; qx <= 1; ++qx) {
      const int ox = std::abs(nx - qx) + std::abs(nx);
      if (ox > max_order) continue;
      for (int ny = -n_max; ny <= n_max; ++ny)
        for (int qy = 0; qy <= 1; ++qy) {
          const int oy = std::abs(ny - qy) + std::abs(ny);
          if (ox + oy > max_order) continue;
          for (int nz = -n_max; nz <= n_max; ++nz)
            for (int qz = 0; qz <= 1; ++qz) {
              const int oz = std::abs(nz - qz) + std::abs(nz);
              if (ox + oy + oz > max_order) continue;
              const std::array<int, 3> n{nx, ny, nz}, q{qx, qy, qz};
              ImageSource img;
              img.order = ox + oy + oz;
              for (int a = 0; a < 3; ++a) {
                img.position(a) = (1 - 2 * q[a]) * source(a) + 2.0 * n[a] * room.dimensions(a);
                // |n - q| hits on the wall at 0, |n| on the wall at L.
                const int lo_hits = std::abs(n[a] - q[a]), hi_hits = std::abs(n[a]);
                if (lo_hits) img.gain *= std::pow(room.reflection(2 * a), lo_hits);
                if (hi_hits) img.gain *= std::pow(room.reflection(2 * a + 1), hi_hits);
              }
              if (img.gain != 0.0) out.push_back(img);
            }
        }
    }
  return out;
}

struct Rir {
  std::string source_id;
  double fs = 16000.0;
  Eigen::MatrixXd taps;  // M x length

  Eigen::Index num_channels() const { return taps.rows(); }
  Eigen::Index length() const { return taps.cols(); }
};

struct RirOptions {
  double fs = 16000.0;
  double sound_speed = kDefaultSoundSpeed;
  int interp_taps = 81;
  /// Overrides the room's max order when >= 0.
  int max_order = -1;
};

inline double windowed_sinc(double x, int taps) {
  const double half = 0.5 * taps;
  if (std::abs(x) >= half) return 0.0;
  const double w = 0.5 * (1.0 + std::cos(2.0 * kPi * x / taps));
  return x == 0.0 ? w : w * std::sin(kPi * x) / (kPi * x);
}

/// Sum of attenuated, fractionally delayed impulses of all image sources;
/// the direct path has amplitude 1 / (4 pi d).
inline Rir generate_rir_ism(const RoomSpec& room, const Vec3& source, const std::vector<Vec3>& mics,
                            const RirOptions& opt = {}, std::string source_id = "source") {
  room.validate();
  require(room.contains(source), ErrorKind::kData, "source outside room");
  for (std::size_t m = 0; m < mics.size(); ++m)
    require(room.contains(mics[m]), ErrorKind::kData, "mic " + std::to_string(m) + " outside room");
  require(opt.interp_taps >= 1 && opt.interp_taps % 2 == 1, ErrorKind::kConfig, "interp_taps must be odd");
  const int order = opt.max_order >= 0 ? opt.max_order : room.max_order;
  const auto images = image_sources(room, source, order);
  const int half = opt.interp_taps / 2;

  double max_dist = 0.0;
  for (const auto& img : images)
    for (const auto& mic : mics) max_dist = std::max(max_dist, (img.position - mic).norm());
  const auto length = static_cast<Eigen::Index>(std::ceil(max_dist * opt.fs / opt.sound_speed)) + half + 2;

  Rir rir;
  rir.source_id = std::move(source_id);
  rir.fs = opt.fs;
  rir.taps = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mics.size()), length);
  for (std::size_t m = 0; m < mics.size(); ++m)
    for (const auto& img : images) {
      const double d = (img.position - mics[m]).norm();
      const double delay = d * opt.fs / opt.sound_speed;
      const double amp = img.gain / (4.0 * kPi * d);
      const auto center = static_cast<long>(std::lround(delay));
      for (long t = center - half; t <= center + half; ++t) {
        if (t < 0 || t >= length) continue;
        rir.taps(static_cast<Eigen::Index>(m), t) += amp * windowed_sinc(static_cast<double>(t) - delay, opt.interp_taps);
      }
    }
  return rir;
}

/// Index of the first tap whose magnitude exceeds half the channel peak.
inline Eigen::Index first_arrival(const Eigen::VectorXd& taps) {
  const double peak = taps.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < taps.size(); ++i)
    if (std::abs(taps(i)) > 0.5 * peak) return i;
  return -1;
}

// ---------------------------------------------------------------------------

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Full linear convolution of a mono signal with every row of `filters`.
inline Eigen::MatrixXd fft_convolve(const Eigen::VectorXd& x, const Eigen::MatrixXd& filters) {
  const auto out_len = x.size() + filters.cols() - 1;
  const std::size_t n = next_pow2(static_cast<std::size_t>(out_len));
  Eigen::FFT<double> fft;
  std::vector<double> buf(n, 0.0);
  std::copy(x.data(), x.data() + x.size(), buf.begin());
  std::vector<Complex> xs, hs, ys;
  fft.fwd(xs, buf);
  Eigen::MatrixXd out(filters.rows(), out_len);
  std::vector<double> y;
  for (Eigen::Index m = 0; m < filters.rows(); ++m) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Eigen::Index i = 0; i < filters.cols(); ++i) buf[static_cast<std::size_t>(i)] = filters(m, i);
    fft.fwd(hs, buf);
    ys.resize(n);
    for (std::size_t k = 0; k < n; ++k) ys[k] = xs[k] * hs[k];
    fft.inv(y, ys);
    for (Eigen::Index i = 0; i < out_len; ++i) out(m, i) = y[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace wearbf

#endif  // WEARBF_RIR_HPP
