#pragma once

// Stability of the Wulff shape: kernel of the stability operator (the
// translation modes phi_c = <c, nu_W>), the kernel component v_u of a radius,
// the centering fixed point Sigma_c := Sigma - c, and deficit-versus-distance
// measurements with log-log scaling fits.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/curvature.hpp"
#include "wulffstab/errors.hpp"
#include "wulffstab/integrand.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/operators.hpp"
#include "wulffstab/parallel.hpp"
#include "wulffstab/surface.hpp"

namespace wulffstab {

// phi_c(nu) = <c, nu> as a degree-one expansion.
inline SphericalExpansion kernel_expansion(const Vec3& c) {
  const double k = std::sqrt(4.0 * std::numbers::pi / 3.0);
  SphericalExpansion s{1, Eigen::VectorXd::Zero(harmonic_count(1))};
  s.coeffs[harmonic_index(1, 1)] = k * c[0];
  s.coeffs[harmonic_index(1, -1)] = k * c[1];
  s.coeffs[harmonic_index(1, 0)] = k * c[2];
  return s;
}

inline SphericalExpansion combine(const SphericalExpansion& a, double ca, const SphericalExpansion& b, double cb) {
  const int band = std::max(a.band, b.band);
  SphericalExpansion out{band, Eigen::VectorXd::Zero(harmonic_count(band))};
  out.coeffs.head(a.coeffs.size()) += ca * a.coeffs;
  out.coeffs.head(b.coeffs.size()) += cb * b.coeffs;
  return out;
}

// L^2(W)-orthonormal basis phi_i = <w_i, nu_W> of the translation modes.
class KernelFrame {
 public:
  explicit KernelFrame(const WulffMesh& w) : w_(&w) {
    const std::size_t n = w.size();
    Mat3 gram = Mat3::Zero();
    for (std::size_t i = 0; i < n; ++i) gram += w.weight[i] * w.normal(i) * w.normal(i).transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> es(gram);
    conditioning_ = es.eigenvalues()[0] / es.eigenvalues()[2];
    if (!(conditioning_ > 1e-6)) throw CertificateError("kernel Gram matrix is degenerate");
    // Gram-Schmidt of e_1, e_2, e_3 in the Gram inner product: w = L^{-T}
    const Eigen::LLT<Mat3> llt(gram);
    const Mat3 linv = Mat3(llt.matrixL()).inverse();
    vectors_ = linv.transpose();  // column i is w_i
    gram_inverse_ = gram.inverse();
    phi_.assign(3, std::vector<double>(n));
    for (int k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < n; ++i) phi_[static_cast<std::size_t>(k)][i] = vectors_.col(k).dot(w.normal(i));
    gram_residual_ = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double ip = inner(w, phi_[static_cast<std::size_t>(a)], phi_[static_cast<std::size_t>(b)]);
        gram_residual_ = std::max(gram_residual_, std::abs(ip - (a == b ? 1.0 : 0.0)));
      }
  }

  const Mat3& vectors() const { return vectors_; }
  const std::vector<double>& phi(int i) const { return phi_[static_cast<std::size_t>(i)]; }
  double gram_residual() const { return gram_residual_; }
  double conditioning() const { return conditioning_; }

  // v_u = sum_i <u, phi_i> w_i
  Vec3 component(std::span<const double> u) const {
    if (u.size() != w_->size()) throw DomainError("kernel_component: size mismatch");
    Vec3 v = Vec3::Zero();
    for (int k = 0; k < 3; ++k) v += inner(*w_, u, phi_[static_cast<std::size_t>(k)]) * vectors_.col(k);
    return v;
  }

 private:
  const WulffMesh* w_;
  Mat3 vectors_;
  Mat3 gram_inverse_;
  std::vector<std::vector<double>> phi_;
  double gram_residual_ = 0.0;
  double conditioning_ = 0.0;
};

inline Vec3 kernel_component(const KernelFrame& frame, std::span<const double> u) { return frame.component(u); }

// ---- reprojection and centering ---------------------------------------------

// Radius of s * Sigma - c over the base, recomputed at every base node by
// intersecting the base normal line with the translated surface.
struct Reprojection {
  std::vector<double> radius;
  double eta = std::numeric_limits<double>::infinity();
  std::size_t worst_node = 0;
  bool converged = true;
};

inline Reprojection reproject(const WulffMesh& base, const GraphSurface& surf, double s, const Vec3& c) {
  const std::size_t n = base.size();
  const bool exp_param = surf.param == Parametrization::exponential;
  if (exp_param && base.integrand.family() != IntegrandFamily::constant)
    throw DomainError("exponential graphs live over the round sphere");
  Reprojection r;
  r.radius.resize(n);
  std::vector<double> margin(n, 0.0);
  std::vector<int> ok(n, 1);
  parallel_for(n, [&](std::size_t i) {
    const Vec3& nz = base.normal(i);
    const Vec3 xz = exp_param ? Vec3::Zero() : base.position[i];
    Vec3 nu = nz;
    GraphPoint gp = graph_point(base.integrand, surf, nu);
    double t = (s * gp.position - c - xz).dot(nz);
    bool done = false;
    for (int it = 0; it < 60 && !done; ++it) {
      gp = graph_point(base.integrand, surf, nu);
      const Vec3 res = s * gp.position - c - xz - t * nz;
      const Mat32 e = tangent_frame(nu);
      Mat3 jac;
      jac.col(0) = s * gp.jacobian * e.col(0);
      jac.col(1) = s * gp.jacobian * e.col(1);
      jac.col(2) = -nz;
      const Vec3 step = jac.partialPivLu().solve(-res);
      Vec2 dy(step[0], step[1]);
      if (dy.norm() > 0.2) dy *= 0.2 / dy.norm();
      nu = (nu + e * dy).normalized();
      t += step[2];
      done = res.norm() < 1e-15 * (1.0 + t) || step.norm() < 1e-16;
    }
    gp = graph_point(base.integrand, surf, nu);
    const Vec3 res = s * gp.position - c - xz - t * nz;
    if (!(res.norm() < 1e-11) || (exp_param && !(t > 0.0))) ok[i] = 0;
    const Mat32 e = tangent_frame(nu);
    const Vec3 normal = (gp.jacobian * e.col(0)).cross(gp.jacobian * e.col(1)).normalized();
    margin[i] = normal.dot(nz);
    r.radius[i] = exp_param ? std::log(std::max(t, std::numeric_limits<double>::min())) : t;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) r.converged = false;
    if (margin[i] < r.eta) {
      r.eta = margin[i];
      r.worst_node = i;
    }
  }
  return r;
}

struct CenteringOptions {
  double tolerance = 1e-8;
  int max_iterations = 25;
  double threshold = 0.1;  // graph certificate margin
};

struct CenteringResult {
  Vec3 c = Vec3::Zero();
  int iterations = 0;
  double final_residual = 0.0;          // |v_{u_c}|
  std::vector<double> trace;            // |v| per iteration
  std::vector<double> radius;           // u_c at the base nodes
  double eta = 0.0;
  bool converged = false;
};

// Fixed point c <- c + v(u_c) where u_c is the radius of s * Sigma - c.
inline CenteringResult center(const WulffMesh& base, const KernelFrame& frame, const GraphSurface& surf,
                              double scale = 1.0, const CenteringOptions& opt = {}) {
  CenteringResult out;
  Vec3 c = Vec3::Zero();
  Reprojection rp = reproject(base, surf, scale, c);
  if (!rp.converged || !(rp.eta > opt.threshold))
    throw CertificateError("surface is not a graph over the base before centering (eta = " + std::to_string(rp.eta) +
                           ")");
  Vec3 v = frame.component(rp.radius);
  out.trace.push_back(v.norm());
  out.iterations = 1;
  while (v.norm() > opt.tolerance && out.iterations < opt.max_iterations) {
    const Vec3 next = c + v;
    Reprojection trial = reproject(base, surf, scale, next);
    if (!trial.converged || !(trial.eta > opt.threshold)) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "graph property lost during centering; last valid c = (%.12g, %.12g, %.12g)", c[0],
                    c[1], c[2]);
      throw CertificateError(buf);
    }
    const Vec3 vn = frame.component(trial.radius);
    ++out.iterations;
    out.trace.push_back(vn.norm());
    if (vn.norm() >= v.norm()) {
      char buf[240];
      std::snprintf(buf, sizeof buf,
                    "centering residual did not decrease (%.3e -> %.3e): check the translation sign convention "
                    "Sigma_c = Sigma - c; last valid c = (%.12g, %.12g, %.12g)",
                    v.norm(), vn.norm(), c[0], c[1], c[2]);
      throw CertificateError(buf);
    }
    c = next;
    rp = std::move(trial);
    v = vn;
  }
  out.c = c;
  out.final_residual = v.norm();
  out.converged = v.norm() <= opt.tolerance;
  out.radius = std::move(rp.radius);
  out.eta = rp.eta;
  return out;
}

// ---- deficit versus distance ---------------------------------------------------

struct StabilityOptions {
  double p = 4.0;
  int band = 12;                 // spectral band for non-band-limited radii
  bool normalize_area = false;   // rescale Sigma to the area of W first
  CenteringOptions centering;
};

struct StabilityMeasurement {
  double deficit = 0.0;                  // ||S_F - H_F/2 Id||_{L^p(Sigma)}
  double distance = 0.0;                 // ||u - phi_{v_u}||_{W^{2,p}(W)}
  std::optional<double> ratio;           // distance / deficit
  double centered_distance = 0.0;        // ||u_c - phi_{v_{u_c}}||_{W^{2,p}(W)} after centering
  double raw_norm = 0.0;                 // ||u||_{W^{2,p}(W)}
  double scale = 1.0;
  Vec3 kernel = Vec3::Zero();            // v_u
  CenteringResult centering;
  DeficitReport oscillation;
};

// Everything that depends only on the base: mesh, spectral basis, kernel frame.
class StabilitySetup {
 public:
  StabilitySetup(const Integrand& f, int level, int band = 12)
      : base_(build_wulff(f, level)),
        basis_(base_.sphere, std::min(band, static_cast<int>(std::sqrt(static_cast<double>(base_.size())) / 2.0))),
        frame_(base_) {}

  const WulffMesh& base() const { return base_; }
  const SpectralBasis& basis() const { return basis_; }
  const KernelFrame& frame() const { return frame_; }
  const Integrand& integrand() const { return base_.integrand; }

  double w2p(const SphericalExpansion& s, double p) const {
    return w2p_norm(base_, basis_.field(s), p, DerivativeMode::spectral, nullptr, &basis_).value;
  }

  // ||u - phi_{v_u}|| for nodal values, through the spectral projection.
  double kernel_free_norm(std::span<const double> u, double p, Vec3* v_out = nullptr) const {
    const Vec3 v = frame_.component(u);
    if (v_out) *v_out = v;
    const SphericalExpansion e = combine(basis_.analyze(u), 1.0, kernel_expansion(v), -1.0);
    return w2p(e, p);
  }

  SurfaceGeometry geometry(const GraphSurface& surf) const {
    const ScalarField u = basis_.field(surf.radius);
    if (surf.param == Parametrization::exponential) {
      if (base_.integrand.family() != IntegrandFamily::constant)
        throw DomainError("exponential graphs live over the round sphere");
      return exp_graph(base_.sphere, u, DerivativeMode::spectral, nullptr, &basis_);
    }
    return radial_graph(base_, u, DerivativeMode::spectral, nullptr, &basis_);
  }

 private:
  WulffMesh base_;
  SpectralBasis basis_;
  KernelFrame frame_;
};

// Radial graph over W of the translate W + t: on each base normal line
// x(nu) + s nu, Newton on F*(x + s nu - t) = 1.
inline GraphSurface translated_wulff(const StabilitySetup& setup, const Vec3& t) {
  const WulffMesh& w = setup.base();
  std::vector<double> u(w.size());
  std::vector<int> bad(w.size(), 0);
  parallel_for(w.size(), [&](std::size_t i) {
    const Vec3& nu = w.normal(i);
    double s = t.dot(nu);
    for (int it = 0; it < 40; ++it) {
      const GaugeValue g = gauge(w.integrand, w.position[i] + s * nu - t);
      const double slope = g.gradient.dot(nu);
      if (!(slope > 0.0)) {
        bad[i] = 1;
        return;
      }
      const double step = (g.value - 1.0) / slope;
      s -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(s))) break;
    }
    u[i] = s;
  });
  for (int b : bad)
    if (b) throw CertificateError("translate is not a graph over the base along its normal lines");
  GraphSurface g;
  g.param = Parametrization::radial;
  g.radius = setup.basis().analyze(u);
  return g;
}

inline StabilityMeasurement stability_ratio(const StabilitySetup& setup, const GraphSurface& surf,
                                            const StabilityOptions& opt = {}) {
  check_exponent(opt.p);
  if (surf.radius.band > setup.basis().band()) throw DomainError("radius band exceeds the spectral basis band");
  StabilityMeasurement m;
  SurfaceGeometry geom = setup.geometry(surf);
  if (opt.normalize_area) m.scale = std::sqrt(setup.base().area() / geom.area());
  if (m.scale != 1.0) geom = scaled(std::move(geom), m.scale);

  const auto curv = anisotropic_shape_operator(geom, setup.integrand());
  m.oscillation = oscillation_deficit(curv.shape, geom.weight, opt.p);
  m.deficit = m.oscillation.deficit;

  // radius of the (rescaled) surface in its given position
  std::vector<double> u;
  if (m.scale == 1.0) {
    u = setup.basis().synthesize(surf.radius);
  } else {
    const Reprojection rp = reproject(setup.base(), surf, m.scale, Vec3::Zero());
    if (!rp.converged) throw CertificateError("rescaled surface is not a graph over the base");
    u = rp.radius;
  }
  m.raw_norm = m.scale == 1.0 ? setup.w2p(surf.radius, opt.p)
                              : w2p_norm(setup.base(), setup.basis().project(u), opt.p, DerivativeMode::spectral,
                                         nullptr, &setup.basis())
                                    .value;
  if (m.scale == 1.0) {
    m.kernel = setup.frame().component(u);
    m.distance = setup.w2p(combine(surf.radius, 1.0, kernel_expansion(m.kernel), -1.0), opt.p);
  } else {
    m.distance = setup.kernel_free_norm(u, opt.p, &m.kernel);
  }

  m.centering = center(setup.base(), setup.frame(), surf, m.scale, opt.centering);
  m.centered_distance = setup.kernel_free_norm(m.centering.radius, opt.p);
  if (m.deficit >= 1e-14) m.ratio = m.distance / m.deficit;
  return m;
}

// ---- sweeps -------------------------------------------------------------------

struct PerturbationFamily {
  enum class Kind { harmonic, kernel, custom };
  Kind kind = Kind::harmonic;
  int l = 2;
  int m = 0;
  Vec3 direction = Vec3::UnitZ();
  SphericalExpansion custom;
  Parametrization param = Parametrization::exponential;

  std::string name() const {
    char buf[96];
    switch (kind) {
      case Kind::harmonic:
        std::snprintf(buf, sizeof buf, "Y%d%d", l, m);
        return buf;
      case Kind::kernel:
        std::snprintf(buf, sizeof buf, "phi(%.6g;%.6g;%.6g)", direction[0], direction[1], direction[2]);
        return buf;
      case Kind::custom:
        return "custom";
    }
    return "?";
  }

  GraphSurface surface(double eps) const {
    GraphSurface s;
    s.param = param;
    switch (kind) {
      case Kind::harmonic: s.radius = single_harmonic(l, m, eps); break;
      case Kind::kernel: s.radius = kernel_expansion(eps * direction); break;
      case Kind::custom: s.radius = combine(custom, eps, custom, 0.0); break;
    }
    return s;
  }
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> amplitudes;
};

inline void check_amplitudes(std::span<const double> eps) {
  if (eps.size() < 5) throw DomainError("a scaling fit needs at least 5 amplitudes");
  const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
  if (!(*lo > 0.0)) throw DomainError("amplitudes must be positive");
  if (*hi / *lo < 10.0 * (1.0 - 1e-12)) throw DomainError("amplitudes must span at least one decade");
}

// Least-squares line through (log eps, log y).
inline ScalingFit fit_scaling(std::span<const double> eps, std::span<const double> y) {
  check_amplitudes(eps);
  if (y.size() != eps.size()) throw DomainError("fit_scaling: size mismatch");
  const std::size_t n = eps.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) throw DomainError("fit_scaling: values must be positive");
    const double x = std::log(eps[i]), v = std::log(y[i]);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double dn = static_cast<double>(n);
  ScalingFit f;
  f.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / dn;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / dn;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::log(y[i]);
    const double pred = f.intercept + f.slope * std::log(eps[i]);
    ss_res += (v - pred) * (v - pred);
    ss_tot += (v - mean) * (v - mean);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  f.amplitudes.assign(eps.begin(), eps.end());
  return f;
}

struct SweepRow {
  double epsilon = 0.0;
  StabilityMeasurement measurement;
};

struct SweepResult {
  std::string family;
  double p = 0.0;
  std::vector<SweepRow> rows;
  std::optional<ScalingFit> deficit_fit;
  std::optional<ScalingFit> distance_fit;
  double ratio_drift = std::numeric_limits<double>::quiet_NaN();  // max ratio / min ratio
  double c_osc_drift = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
  std::string warning;
};

inline double drift(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

// Runs stability_ratio for every amplitude (in increasing order).  A
// certificate failure truncates the sweep at that amplitude.
inline SweepResult scaling_sweep(const StabilitySetup& setup, const PerturbationFamily& family,
                                 std::vector<double> amplitudes, const StabilityOptions& opt = {}) {
  check_amplitudes(amplitudes);
  std::sort(amplitudes.begin(), amplitudes.end());
  SweepResult out;
  out.family = family.name();
  out.p = opt.p;
  for (double eps : amplitudes) {
    try {
      out.rows.push_back({eps, stability_ratio(setup, family.surface(eps), opt)});
    } catch (const CertificateError& e) {
      out.truncated = true;
      char buf[64];
      std::snprintf(buf, sizeof buf, "sweep truncated at epsilon = %.6g: ", eps);
      out.warning = buf + std::string(e.what());
      break;
    } catch (const TubularError& e) {
      out.truncated = true;
      char buf[64];
      std::snprintf(buf, sizeof buf, "sweep truncated at epsilon = %.6g: ", eps);
      out.warning = buf + std::string(e.what());
      break;
    }
  }
  std::vector<double> eps, def, dist, ratio, cosc;
  for (const auto& r : out.rows) {
    eps.push_back(r.epsilon);
    def.push_back(r.measurement.deficit);
    dist.push_back(r.measurement.distance);
    if (r.measurement.ratio) ratio.push_back(*r.measurement.ratio);
    if (std::isfinite(r.measurement.oscillation.c_osc)) cosc.push_back(r.measurement.oscillation.c_osc);
  }
  auto try_fit = [&](const std::vector<double>& y) -> std::optional<ScalingFit> {
    try {
      return fit_scaling(eps, y);
    } catch (const DomainError&) {
      return std::nullopt;
    }
  };
  out.deficit_fit = try_fit(def);
  out.distance_fit = try_fit(dist);
  out.ratio_drift = drift(ratio);
  out.c_osc_drift = drift(cosc);
  return out;
}

}  // namespace wulffstab
