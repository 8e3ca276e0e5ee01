#ifndef WEARBF_NOISE_MODEL_HPP
#define WEARBF_NOISE_MODEL_HPP

// Per-frequency noise covariance: a diffuse field plus weighted point-noise
// outer products that softly steer nulls.

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"

namespace wearbf {

struct NoiseCovariance {
  double frequency = 0.0;
  CMatrix matrix;
  /// Set once diagonal loading has been applied; regularize() is then a no-op.
  bool regularized = false;

  Eigen::Index size() const { return matrix.rows(); }
};

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// Spherically isotropic field: entry (i, j) = sinc(omega * d_ij / c).
inline NoiseCovariance diffuse_covariance_sinc(const ArrayGeometry& geometry, double frequency,
                                               double sound_speed = kDefaultSoundSpeed) {
  require(frequency >= 0.0, ErrorKind::kData, "frequency must be non-negative");
  const auto m = static_cast<Eigen::Index>(geometry.num_mics());
  const double k = 2.0 * kPi * frequency / sound_speed;
  NoiseCovariance cov{frequency, CMatrix::Identity(m, m)};
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = sinc(k * (geometry.mic(i) - geometry.mic(j)).norm());
      cov.matrix(i, j) = v;
      cov.matrix(j, i) = v;
    }
  return cov;
}

/// Empirical isotropic average over the sampled directions of an ATF set,
/// scaled to trace M.
inline NoiseCovariance diffuse_covariance_from_atfs(const AtfSet& atfs, double frequency) {
  require(atfs.directions().size() >= 8, ErrorKind::kData,
          "diffuse covariance from ATFs needs at least 8 directions");
  const auto fi = atfs.find_frequency(frequency);
  require(fi.has_value(), ErrorKind::kData,
          "frequency " + std::to_string(frequency) + " Hz not on ATF grid (interpolation unsupported)");
  const auto m = static_cast<Eigen::Index>(atfs.num_mics());
  CMatrix acc = CMatrix::Zero(m, m);
  for (std::size_t d = 0; d < atfs.directions().size(); ++d) {
    const CVector& g = atfs.at(d, *fi);
    acc.noalias() += g * g.adjoint();
  }
  acc /= static_cast<double>(atfs.directions().size());
  const double tr = acc.trace().real();
  require(tr > 0.0, ErrorKind::kNumerical, "ATF set has zero energy at " + std::to_string(frequency) + " Hz");
  acc *= static_cast<double>(m) / tr;
  return {frequency, acc};
}

/// A point interferer whose direction gets a soft null.
struct PointNoiseSpec {
  DirectionSpec direction;
  double weight = 10.0;
  /// Constant PSD, used when `psd_table` is empty.
  double psd = 1.0;
  /// Optional (frequency, psd) samples, linearly interpolated.
  std::vector<std::pair<double, double>> psd_table;
  /// Optional per-frequency weight overrides (exact frequency match).
  std::map<double, double> weight_overrides;

  double weight_at(double frequency) const {
    const auto it = weight_overrides.find(frequency);
    return it != weight_overrides.end() ? it->second : weight;
  }

  double psd_at(double frequency) const {
    if (psd_table.empty()) return psd;
    if (frequency <= psd_table.front().first) return psd_table.front().second;
    if (frequency >= psd_table.back().first) return psd_table.back().second;
    for (std::size_t i = 1; i < psd_table.size(); ++i) {
      const auto& [f1, p1] = psd_table[i];
      if (frequency <= f1) {
        const auto& [f0, p0] = psd_table[i - 1];
        return p0 + (p1 - p0) * (frequency - f0) / (f1 - f0);
      }
    }
    return psd_table.back().second;
  }

  void validate() const {
    direction.validate();
    require(weight >= 0.0, ErrorKind::kData, "point-noise weight must be >= 0");
    require(psd > 0.0, ErrorKind::kData, "point-noise psd must be > 0");
    for (std::size_t i = 0; i < psd_table.size(); ++i) {
      require(psd_table[i].second > 0.0, ErrorKind::kData, "point-noise psd must be > 0");
      if (i > 0)
        require(psd_table[i].first > psd_table[i - 1].first, ErrorKind::kData,
                "psd table frequencies must increase");
    }
    for (const auto& [f, w] : weight_overrides)
      require(w >= 0.0, ErrorKind::kData, "point-noise weight override must be >= 0");
  }
};

/// diffuse + sum_n psd_n(f) * alpha_n * g_n g_n^H
inline NoiseCovariance composite_covariance(const NoiseCovariance& diffuse,
                                            const std::vector<PointNoiseSpec>& points,
                                            const ArrayGeometry& geometry, double frequency,
                                            const SteeringSource& source = SteeringSource()) {
  NoiseCovariance out = diffuse;
  out.frequency = frequency;
  out.regularized = false;
  for (const auto& p : points) {
    p.validate();
    const double scale = p.psd_at(frequency) * p.weight_at(frequency);
    if (scale == 0.0) continue;
    const CVector g = source.steer(geometry, p.direction, frequency).entries;
    require(g.size() == out.size(), ErrorKind::kData, "point-noise steering vector has wrong length");
    out.matrix.noalias() += scale * (g * g.adjoint());
  }
  return out;
}

/// Loading added before any inversion: delta = 1e-6 * trace / M.
inline double regularization_level(const CMatrix& phi) {
  const double tr = phi.trace().real();
  const double delta = 1e-6 * tr / static_cast<double>(phi.rows());
  return delta > 0.0 ? delta : 1e-12;
}

inline NoiseCovariance regularize(NoiseCovariance cov) {
  if (cov.regularized) return cov;
  const double delta = regularization_level(cov.matrix);
  cov.matrix.diagonal().array() += delta;
  cov.regularized = true;
  return cov;
}

inline bool is_hermitian(const CMatrix& a, double tol = 1e-12) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

inline double min_eigenvalue(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Hermitian and min eigenvalue >= -1e-9 * trace.
inline bool is_psd(const CMatrix& a) {
  return is_hermitian(a) && min_eigenvalue(a) >= -1e-9 * std::abs(a.trace().real());
}

}  // namespace wearbf

#endif  // WEARBF_NOISE_MODEL_HPP
