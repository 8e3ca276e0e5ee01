#ifndef WEARBF_BEAMFORMER_HPP
#define WEARBF_BEAMFORMER_HPP

// Fixed beamformer designs for a single frequency bin.
//
// All designs are distortionless (h^H g = 1). The NLCMV design minimizes
// h^H Phi h over the composite noise covariance Phi subject to the
// white-noise-gain inequality
//
//     c = h^H Psi h <= 0,   Psi = I - gamma * M * g g^H / ||g||^2,
//
// where gamma = 1 gives the plain bound ||h||^2 <= M / ||g||^2. The KKT
// conditions of this problem are those of an MVDR beamformer on the loaded
// covariance Phi + eps*I, with eps >= 0 the multiplier of the inequality, so
// the solver searches eps by bisection on log(eps).

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "wearbf/common.hpp"
#include "wearbf/geometry.hpp"
#include "wearbf/noise_model.hpp"

namespace wearbf {

enum class Method { kDelayAndSum, kSuperdirective, kMvdr, kNlcmv };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kDelayAndSum: return "delay_and_sum";
    case Method::kSuperdirective: return "superdirective";
    case Method::kMvdr: return "mvdr";
    case Method::kNlcmv: return "nlcmv";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "delay_and_sum") return Method::kDelayAndSum;
  if (s == "superdirective") return Method::kSuperdirective;
  if (s == "mvdr") return Method::kMvdr;
  if (s == "nlcmv") return Method::kNlcmv;
  fail(ErrorKind::kConfig, "unknown method '" + s + "'");
}

struct DesignDiagnostics {
  double objective = 0.0;  // h^H Phi h on the supplied covariance
  double loading = 0.0;    // eps, on top of the regularized covariance
  double wng_value = 0.0;  // c
  int iterations = 0;
};

struct BeamformerWeights {
  double frequency = 0.0;
  CVector weights;
  DesignDiagnostics diagnostics;
};

/// Per-design parameters shared by the bank builder.
struct DesignSpec {
  Method method = Method::kNlcmv;
  DirectionSpec look;
  std::vector<PointNoiseSpec> nulls;
  std::vector<double> frequencies;
  double sound_speed = kDefaultSoundSpeed;
  double wng_tolerance = 1e-8;
  /// Multiplier gamma on the white-noise-gain bound; 1 is the plain
  /// constraint, values in [1/M, 1) tighten it.
  double wng_margin = 1.0;
  int max_iterations = 200;
};

// ---------------------------------------------------------------------------

inline double objective(const CVector& h, const CMatrix& phi) {
  return (h.adjoint() * phi * h)(0, 0).real();
}

inline Complex response(const CVector& h, const CVector& g) { return h.dot(g); }  // h^H g

/// c = h^H Psi h, evaluated with Psi formed explicitly.
inline double wng_constraint_value(const CVector& h, const SteeringVector& g, double margin = 1.0) {
  require(h.size() == g.entries.size(), ErrorKind::kData, "weight / steering length mismatch");
  const auto m = g.entries.size();
  const double energy = g.entries.squaredNorm();
  if (m == 1) return 0.0;
  CMatrix psi = CMatrix::Identity(m, m);
  psi -= (margin * static_cast<double>(m) / energy) * (g.entries * g.entries.adjoint());
  return (h.adjoint() * psi * h)(0, 0).real();
}

/// Same quantity without forming Psi: ||h||^2 - gamma*M*|h^H g|^2/||g||^2.
inline double wng_constraint_value_fast(const CVector& h, const CVector& g, double margin = 1.0) {
  if (g.size() == 1) return 0.0;
  return h.squaredNorm() -
         margin * static_cast<double>(g.size()) * std::norm(h.dot(g)) / g.squaredNorm();
}

inline BeamformerWeights design_delay_and_sum(const SteeringVector& g) {
  const double energy = g.entries.squaredNorm();
  require(energy > 0.0, ErrorKind::kData, "degenerate steering vector (zero norm)");
  BeamformerWeights out;
  out.frequency = g.frequency;
  if (g.entries.size() == 1) {
    // h^H g = conj(h) G = 1.
    out.weights = CVector::Constant(1, 1.0 / std::conj(g.entries(0)));
  } else {
    out.weights = g.entries / energy;
  }
  out.diagnostics.wng_value = wng_constraint_value_fast(out.weights, g.entries);
  return out;
}

/// MVDR on Phi + eps*I. `phi` must already be regularized.
inline CVector loaded_mvdr(const CMatrix& phi, const CVector& g, double eps) {
  CMatrix a = phi;
  a.diagonal().array() += eps;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
    const auto ev = es.eigenvalues();
    fail(ErrorKind::kNumerical, "ill-conditioned covariance (condition estimate " +
                                    std::to_string(std::abs(ev.maxCoeff() / ev.minCoeff())) + ")");
  }
  const CVector x = llt.solve(g);
  const Complex denom = g.dot(x);  // g^H A^-1 g, real > 0
  require(std::isfinite(denom.real()) && denom.real() > 0.0, ErrorKind::kNumerical,
          "ill-conditioned covariance: g^H Phi^-1 g = " + std::to_string(denom.real()));
  return x / denom.real();
}

inline BeamformerWeights design_mvdr(const NoiseCovariance& phi, const SteeringVector& g) {
  require(phi.size() == g.entries.size(), ErrorKind::kData, "covariance / steering size mismatch");
  if (g.entries.size() == 1) {
    auto out = design_delay_and_sum(g);
    out.diagnostics.objective = objective(out.weights, phi.matrix);
    return out;
  }
  require(g.entries.squaredNorm() > 0.0, ErrorKind::kData, "degenerate steering vector (zero norm)");
  const NoiseCovariance reg = regularize(phi);
  BeamformerWeights out;
  out.frequency = g.frequency;
  out.weights = loaded_mvdr(reg.matrix, g.entries, 0.0);
  out.diagnostics.objective = objective(out.weights, phi.matrix);
  out.diagnostics.wng_value = wng_constraint_value_fast(out.weights, g.entries);
  return out;
}

/// MVDR against the diffuse-field covariance.
inline BeamformerWeights design_superdirective(const NoiseCovariance& diffuse,
                                               const SteeringVector& g) {
  return design_mvdr(diffuse, g);
}

inline BeamformerWeights design_nlcmv(const DesignSpec& spec, const NoiseCovariance& phi_total,
                                      const SteeringVector& g) {
  const auto& gv = g.entries;
  require(phi_total.size() == gv.size(), ErrorKind::kData, "covariance / steering size mismatch");
  require(gv.squaredNorm() > 0.0, ErrorKind::kData, "degenerate steering vector (zero norm)");
  const auto m = static_cast<double>(gv.size());
  require(spec.wng_margin * m >= 1.0 - 1e-12 && spec.wng_margin <= 1.0, ErrorKind::kConfig,
          "wng_margin must lie in [1/M, 1]");

  BeamformerWeights out;
  out.frequency = g.frequency;
  if (gv.size() == 1) {
    out = design_delay_and_sum(g);
    out.diagnostics.objective = objective(out.weights, phi_total.matrix);
    return out;
  }

  if (spec.wng_margin * m <= 1.0 + 1e-12) {
    // gamma = 1/M admits only the delay-and-sum filter.
    out = design_delay_and_sum(g);
    out.diagnostics.objective = objective(out.weights, phi_total.matrix);
    return out;
  }

  const NoiseCovariance reg = regularize(phi_total);
  auto wng = [&](const CVector& h) { return wng_constraint_value_fast(h, gv, spec.wng_margin); };
  auto finish = [&](CVector h, double eps, int iters) {
    out.weights = std::move(h);
    out.diagnostics.loading = eps;
    out.diagnostics.wng_value = wng(out.weights);
    out.diagnostics.objective = objective(out.weights, phi_total.matrix);
    out.diagnostics.iterations = iters;
    return out;
  };

  CVector h = loaded_mvdr(reg.matrix, gv, 0.0);
  if (wng(h) <= 0.0) return finish(std::move(h), 0.0, 0);

  // ||h(eps)||^2 decreases monotonically towards the delay-and-sum norm, so
  // c(eps) has a single sign change on (0, cap].
  const double scale = reg.matrix.trace().real() / m;
  double hi = 1e6 * scale;
  CVector h_hi = loaded_mvdr(reg.matrix, gv, hi);
  double c_hi = wng(h_hi);
  // A margin close to 1/M leaves little room around delay-and-sum; widen.
  for (int widen = 0; c_hi > 0.0 && widen < 5; ++widen) {
    hi *= 1e3;
    h_hi = loaded_mvdr(reg.matrix, gv, hi);
    c_hi = wng(h_hi);
  }
  if (c_hi > 0.0) {
    fail(ErrorKind::kNumerical,
         "internal solver failure: white-noise-gain constraint not bracketed at eps = " +
             std::to_string(hi) + " (c = " + std::to_string(c_hi) + ")");
  }
  double lo = 1e-16 * scale;
  int iters = 0;
  for (; iters < spec.max_iterations; ++iters) {
    const double tol = spec.wng_tolerance * std::min(1.0, 0.01 / hi);
    if (c_hi >= -tol) break;
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    CVector h_mid = loaded_mvdr(reg.matrix, gv, mid);
    const double c_mid = wng(h_mid);
    if (c_mid <= 0.0) {
      hi = mid;
      h_hi = std::move(h_mid);
      c_hi = c_mid;
    } else {
      lo = mid;
    }
  }
  return finish(std::move(h_hi), hi, iters);
}

inline BeamformerWeights design(const DesignSpec& spec, const NoiseCovariance& diffuse,
                                const NoiseCovariance& phi_total, const SteeringVector& g) {
  switch (spec.method) {
    case Method::kDelayAndSum: {
      auto out = design_delay_and_sum(g);
      out.diagnostics.objective = objective(out.weights, phi_total.matrix);
      return out;
    }
    case Method::kSuperdirective: return design_superdirective(diffuse, g);
    case Method::kMvdr: return design_mvdr(phi_total, g);
    case Method::kNlcmv: return design_nlcmv(spec, phi_total, g);
  }
  fail(ErrorKind::kConfig, "unknown method");
}

// ---------------------------------------------------------------------------

struct KktReport {
  double distortionless_error = 0.0;  // |h^H g - 1|
  double wng_value = 0.0;             // c
  double loading = 0.0;               // eps
  double multiplier = 0.0;            // lambda
  double stationarity = 0.0;          // ||(Phi + eps I) h - lambda g||
  double stationarity_bound = 0.0;    // 1e-6 * ||h|| * ||Phi||
  double slackness = 0.0;             // |eps * c|

  bool distortionless_ok = false;
  bool primal_ok = false;
  bool dual_ok = false;
  bool stationarity_ok = false;
  bool slackness_ok = false;

  bool ok() const { return distortionless_ok && primal_ok && dual_ok && stationarity_ok && slackness_ok; }

  /// Name of the first failing condition, empty when all pass.
  std::string first_failure() const {
    if (!distortionless_ok) return "distortionless";
    if (!primal_ok) return "wng_feasibility";
    if (!dual_ok) return "dual_feasibility";
    if (!stationarity_ok) return "stationarity";
    if (!slackness_ok) return "complementary_slackness";
    return {};
  }
};

/// Certifies an NLCMV result against the first-order optimality conditions of
/// the regularized problem.
inline KktReport verify_kkt(const BeamformerWeights& result, const NoiseCovariance& phi_total,
                            const SteeringVector& g, double margin = 1.0) {
  const CVector& h = result.weights;
  const CVector& gv = g.entries;
  require(h.size() == gv.size() && phi_total.size() == gv.size(), ErrorKind::kData,
          "verify_kkt: dimension mismatch");
  KktReport r;
  r.loading = result.diagnostics.loading;
  r.distortionless_error = std::abs(response(h, gv) - 1.0);
  r.wng_value = wng_constraint_value_fast(h, gv, margin);
  r.slackness = std::abs(r.loading * r.wng_value);

  CMatrix a = regularize(phi_total).matrix;
  a.diagonal().array() += r.loading;
  const CVector ah = a * h;
  r.multiplier = (gv.dot(ah) / gv.squaredNorm()).real();
  r.stationarity = gv.size() == 1 ? 0.0 : (ah - r.multiplier * gv).norm();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(phi_total.matrix, Eigen::EigenvaluesOnly);
  const double phi_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  r.stationarity_bound = 1e-6 * h.norm() * phi_norm;

  r.distortionless_ok = r.distortionless_error <= 1e-6;
  r.primal_ok = r.wng_value <= 1e-6;
  r.dual_ok = r.loading >= 0.0;
  r.stationarity_ok = r.stationarity <= r.stationarity_bound;
  r.slackness_ok = r.slackness <= 1e-8;
  return r;
}

}  // namespace wearbf

#endif  // WEARBF_BEAMFORMER_HPP
