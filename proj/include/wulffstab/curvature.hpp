#pragma once

// Anisotropic shape operator S_F = A_F(nu_Sigma) d nu_Sigma, its trace-free
// part, the L^p oscillation of S_F around multiples of the identity, and
// the pointwise Gauss-equation algebra for hypersurfaces of any dimension.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/integrand.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/optimize.hpp"
#include "wulffstab/parallel.hpp"
#include "wulffstab/surface.hpp"

namespace wulffstab {

struct AnisotropicCurvature {
  TensorField shape{{}, TensorKind::mixed};  // S_F in the surface frame
  std::vector<double> mean_curvature;         // H_F = tr S_F
};

inline AnisotropicCurvature anisotropic_shape_operator(const SurfaceGeometry& geom, const Integrand& f) {
  const std::size_t n = geom.size();
  AnisotropicCurvature out;
  out.shape.values.resize(n);
  out.mean_curvature.resize(n);
  std::vector<int> bad(n, 0);
  std::vector<double> bad_eig(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const Mat32& q = geom.frame[i];
    Mat2 a = q.transpose() * f.anisotropy_ambient(geom.normal[i]) * q;
    a = 0.5 * (a + a.transpose()).eval();
    const double lo = Eigen::SelfAdjointEigenSolver<Mat2>(a, Eigen::EigenvaluesOnly).eigenvalues()[0];
    if (!(lo > 0.0)) {
      bad[i] = 1;
      bad_eig[i] = lo;
    }
    out.shape.values[i] = a * geom.shape.values[i];
    out.mean_curvature[i] = out.shape.values[i].trace();
  });
  for (std::size_t i = 0; i < n; ++i)
    if (bad[i]) throw EllipticityError(geom.normal[i], bad_eig[i]);
  return out;
}

struct TraceFree {
  TensorField part{{}, TensorKind::mixed};
  std::vector<double> trace;
};

inline TraceFree trace_free(const TensorField& s) {
  TraceFree out;
  out.part.kind = s.kind;
  out.part.values.resize(s.size());
  out.trace.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.values[i].trace();
    Mat2 m = s.values[i];
    m(0, 0) -= 0.5 * t;
    m(1, 1) = -m(0, 0);
    out.part.values[i] = m;
    out.trace[i] = t;
  }
  return out;
}

struct DeficitReport {
  double p = 2.0;
  double deficit = 0.0;          // ||S - tr S / n Id||_{L^p}
  double lambda_star = 0.0;      // argmin_lambda ||S - lambda Id||_{L^p}
  double min_oscillation = 0.0;  // value at lambda_star
  double mean_over_n = 0.0;      // average of tr S over the surface, divided by n
  double mean_oscillation = 0.0; // ||S - mean_over_n Id||_{L^p}
  double c_osc = std::numeric_limits<double>::quiet_NaN();  // min_oscillation / deficit
};

inline double offset_norm(const TensorField& s, std::span<const double> weights, double p, double lambda) {
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = (s.values[i] - lambda * Mat2::Identity()).norm();
  return lp_norm(v, weights, p);
}

// Brent search for lambda on the eigenvalue bracket of S.
inline DeficitReport oscillation_deficit(const TensorField& s, std::span<const double> weights, double p) {
  check_exponent(p);
  if (s.size() != weights.size() || s.size() == 0) throw DomainError("oscillation_deficit: size mismatch");
  DeficitReport r;
  r.p = p;
  r.deficit = lp_norm(trace_free(s).part, weights, p);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, tr = 0.0, area = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Mat2& m = s.values[i];
    const double t = m.trace(), d = m.determinant();
    const double disc = std::sqrt(std::max(0.0, 0.25 * t * t - d));
    lo = std::min(lo, 0.5 * t - disc);
    hi = std::max(hi, 0.5 * t + disc);
    tr += weights[i] * t;
    area += weights[i];
  }
  r.mean_over_n = tr / area / 2.0;
  lo = std::min(lo, r.mean_over_n);
  hi = std::max(hi, r.mean_over_n);

  const ScalarMinimum g = brent_minimize([&](double lam) { return offset_norm(s, weights, p, lam); }, lo, hi);
  r.lambda_star = g.x;
  r.min_oscillation = g.value;
  r.mean_oscillation = offset_norm(s, weights, p, r.mean_over_n);
  if (r.min_oscillation > r.mean_oscillation) {
    r.lambda_star = r.mean_over_n;
    r.min_oscillation = r.mean_oscillation;
  }
  if (r.deficit > 0.0) r.c_osc = r.min_oscillation / r.deficit;
  return r;
}

// ---- Gauss equation algebra --------------------------------------------------

struct GaussCurvature {
  Eigen::MatrixXd ricci;
  double scalar = 0.0;
};

// Ric = H h - h^2, R = H^2 - |h|^2 in an orthonormal frame.
inline GaussCurvature gauss_ricci(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols() || h.rows() < 2) throw DomainError("gauss_ricci: h must be square with n >= 2");
  const double H = h.trace();
  GaussCurvature out;
  out.ricci = H * h - h * h;
  out.scalar = H * H - h.squaredNorm();
  return out;
}

// Riem_{ijkl} = h_ik h_jl - h_il h_jk stored flat, index ((i n + j) n + k) n + l.
class RiemannTensor {
 public:
  explicit RiemannTensor(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  static RiemannTensor from_second_form(const Eigen::MatrixXd& h) {
    const int n = static_cast<int>(h.rows());
    RiemannTensor r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) r(i, j, k, l) = h(i, k) * h(j, l) - h(i, l) * h(j, k);
    return r;
  }

  // kappa/2 (g wedge g) for g = Id: kappa (delta_ik delta_jl - delta_il delta_jk)
  static RiemannTensor constant_curvature(int n, double kappa) {
    RiemannTensor r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        r(i, j, i, j) = kappa;
        r(i, j, j, i) = -kappa;
      }
    return r;
  }

  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

  Eigen::MatrixXd ricci() const {
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int p = 0; p < n_; ++p) ric(i, j) += (*this)(i, p, j, p);
    return ric;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  RiemannTensor operator-(const RiemannTensor& o) const {
    RiemannTensor r(n_);
    for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = data_[k] - o.data_[k];
    return r;
  }

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * n_ + j) * n_ + k) * n_ + l);
  }

  int n_;
  std::vector<double> data_;
};

}  // namespace wulffstab
