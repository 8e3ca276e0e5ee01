#ifndef WEARBF_TEST_ORACLES_HPP
#define WEARBF_TEST_ORACLES_HPP

// Independent reference computations. None of these call the solver code
// they are used to check.

#include <Eigen/Dense>

#include "test_util.hpp"
#include "wearbf/common.hpp"

namespace wearbf::oracle {

struct BruteForceResult {
  double best_objective = 0.0;
  CVector best_h;
};

/// Minimizes h^H phi h over {h : h^H g = 1, ||h||^2 <= M / ||g||^2} by random
/// search plus projected-gradient polish.
///
/// Every distortionless h is h0 + B z with h0 = g / ||g||^2 and B an
/// orthonormal basis of g's orthogonal complement; since h0 is orthogonal to
/// B z, ||h||^2 = 1/||g||^2 + ||z||^2 and the white-noise-gain bound becomes
/// the ball ||z||^2 <= (M - 1) / ||g||^2.
inline BruteForceResult brute_force_nlcmv(const CMatrix& phi, const CVector& g, std::size_t samples,
                                          std::uint64_t seed, int polish_iterations = 20000) {
  const Eigen::Index m = g.size();
  const double gg = g.squaredNorm();
  const CVector h0 = g / gg;
  BruteForceResult out;
  if (m == 1) {
    out.best_h = h0;
    out.best_objective = (h0.adjoint() * phi * h0)(0, 0).real();
    return out;
  }
  // Orthonormal complement from a full QR of g.
  Eigen::HouseholderQR<CMatrix> qr(g);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(m, m);
  const CMatrix b = q.rightCols(m - 1);
  const double radius = std::sqrt(static_cast<double>(m - 1) / gg);

  // f(z) = c0 + 2 Re(v^H z) + z^H A z
  const CMatrix a = b.adjoint() * phi * b;
  const CVector v = b.adjoint() * phi * h0;
  const double c0 = (h0.adjoint() * phi * h0)(0, 0).real();
  auto f = [&](const CVector& z) {
    return c0 + 2.0 * v.dot(z).real() + (z.adjoint() * a * z)(0, 0).real();
  };

  Rng rng(seed);
  const Eigen::Index dim = 2 * (m - 1);  // real dimension of the ball
  CVector z(m - 1), best_z = CVector::Zero(m - 1);
  double best = f(best_z);
  for (std::size_t s = 0; s < samples; ++s) {
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < m - 1; ++i) {
      z(i) = Complex(normal(rng), normal(rng));
      norm2 += std::norm(z(i));
    }
    // Uniform in the ball: direction uniform, radius ~ U^(1/dim).
    const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(dim));
    z *= r / std::sqrt(norm2);
    const double val = f(z);
    if (val < best) {
      best = val;
      best_z = z;
    }
  }

  // Projected gradient descent from the best sample; f is convex in z.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  const double lipschitz = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
  const double step = 1.0 / lipschitz;
  CVector zk = best_z;
  for (int it = 0; it < polish_iterations; ++it) {
    CVector next = zk - step * 2.0 * (a * zk + v);
    const double n = next.norm();
    if (n > radius) next *= radius / n;
    if ((next - zk).norm() <= 1e-15 * std::max(1.0, radius)) {
      zk = next;
      break;
    }
    zk = next;
  }
  if (f(zk) < best) best_z = zk;
  out.best_h = h0 + b * best_z;
  out.best_objective = f(best_z);
  return out;
}

/// Minimum of h^H phi h over distortionless h for a 2-mic array by dense
/// grid search over the single complex degree of freedom z in h = h0 + b z.
inline double grid_min_two_mic(const CMatrix& phi, const CVector& g, double half_width, int steps,
                               CVector* argmin = nullptr) {
  const CVector h0 = g / g.squaredNorm();
  CVector b(2);
  b << -std::conj(g(1)), std::conj(g(0));
  b /= b.norm();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      const Complex z(-half_width + 2.0 * half_width * i / steps, -half_width + 2.0 * half_width * j / steps);
      const CVector h = h0 + z * b;
      const double val = (h.adjoint() * phi * h)(0, 0).real();
      if (val < best) {
        best = val;
        if (argmin) *argmin = h;
      }
    }
  return best;
}

/// One random NLCMV test problem. Instances cycle through M in {2, 3},
/// well- and ill-conditioned Phi, unit-modulus and generic steering vectors,
/// and zero to two soft nulls added as alpha * g_n g_n^H.
struct Instance {
  CMatrix phi;
  CVector g;
  int nulls = 0;
};

inline Instance random_instance(Rng& rng, std::size_t index) {
  Instance in;
  const Eigen::Index m = 2 + static_cast<Eigen::Index>(index % 2);
  const double shift = (index / 2) % 2 ? 1e-3 : 0.1;
  in.phi = test::random_spd(rng, m, shift);
  in.g = (index / 4) % 2 ? test::random_cvector(rng, m) : test::random_unit_modulus(rng, m);
  in.nulls = static_cast<int>((index / 8) % 3);
  for (int n = 0; n < in.nulls; ++n) {
    const CVector gn = test::random_unit_modulus(rng, m);
    const double alpha = std::pow(10.0, uniform(rng, 0.0, 2.0));
    in.phi += alpha * (gn * gn.adjoint());
  }
  in.phi = 0.5 * (in.phi + in.phi.adjoint());
  return in;
}

}  // namespace wearbf::oracle

#endif  // WEARBF_TEST_ORACLES_HPP
