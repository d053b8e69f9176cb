#pragma once

// Anisotropic integrands F on the unit sphere, the anisotropy matrix
// A_F = D^2 F + F Id, the gauge F* and the Wulff shape {F* = 1}.
//
// Every family is written as its 1-homogeneous extension Fbar(x) = |x| F(x/|x|)
// and templated over the scalar type, so derivatives of any order come
// from Taylor jets.  For a 1-homogeneous extension the Cahn-Hoffman map is
// grad Fbar and A_F is the tangential block of Hess Fbar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/errors.hpp"
#include "wulffstab/harmonics.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/taylor.hpp"

namespace wulffstab {

enum class IntegrandFamily { constant, quadratic_form, fourier_perturbed };

inline const char* family_name(IntegrandFamily f) {
  switch (f) {
    case IntegrandFamily::constant: return "constant";
    case IntegrandFamily::quadratic_form: return "quadratic";
    case IntegrandFamily::fourier_perturbed: return "fourier";
  }
  return "?";
}

struct FourierMode {
  int l = 0;
  int m = 0;
  double amplitude = 0.0;
};

struct IntegrandValue {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();  // DF, tangent to nu
  Mat3 hessian = Mat3::Zero();   // D^2 F, tangent block
};

struct AnisotropyMatrix {
  Vec3 base;                   // nu
  Mat32 frame;                 // tangent frame the matrix is written in
  Mat2 matrix = Mat2::Zero();  // A_F in that frame
  double min_eigenvalue = 0.0;
};

class Integrand {
 public:
  static Integrand constant(double value = 1.0) {
    if (!(value > 0.0)) throw DomainError("constant integrand must be positive");
    Integrand f;
    f.family_ = IntegrandFamily::constant;
    f.scale_ = value;
    f.metric_ = value * value * Mat3::Identity();
    f.finish();
    return f;
  }

  // F(nu) = sqrt(nu . M nu)
  static Integrand quadratic_form(const Mat3& m) {
    if ((m - m.transpose()).norm() > 1e-14 * m.norm()) throw DomainError("quadratic integrand matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("quadratic integrand matrix must be positive definite");
    Integrand f;
    f.family_ = IntegrandFamily::quadratic_form;
    f.metric_ = m;
    f.finish();
    return f;
  }

  // F(nu) = base(nu) + sum_j a_j Y_{l_j m_j}(nu)
  static Integrand fourier_perturbed(const Integrand& base, std::vector<FourierMode> modes) {
    if (base.family_ == IntegrandFamily::fourier_perturbed)
      throw DomainError("fourier perturbation must start from a constant or quadratic base");
    for (const auto& md : modes)
      if (md.l < 0 || md.m < -md.l || md.m > md.l) throw DomainError("invalid harmonic mode in fourier integrand");
    Integrand f = base;
    f.family_ = IntegrandFamily::fourier_perturbed;
    f.modes_ = std::move(modes);
    f.finish();
    return f;
  }

  IntegrandFamily family() const { return family_; }
  const Mat3& metric() const { return metric_; }
  const std::vector<FourierMode>& modes() const { return modes_; }

  // 1-homogeneous extension to R^3 \ {0}.
  template <class T>
  T extended(const std::array<T, 3>& x) const {
    using std::pow;
    using std::sqrt;
    T q(0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (metric_(i, j) != 0.0) q += metric_(i, j) * (x[i] * x[j]);
    T out = sqrt(q);
    if (!modes_.empty()) {
      int band = 0;
      for (const auto& md : modes_) band = std::max(band, md.l);
      std::vector<T> y;
      solid_harmonics(x, band, y);
      const T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      for (const auto& md : modes_) {
        const T radial = md.l == 1 ? T(1.0) : pow(r2, 0.5 * (1.0 - md.l));
        out += md.amplitude * (y[static_cast<std::size_t>(harmonic_index(md.l, md.m))] * radial);
      }
    }
    return out;
  }

  double value(const Vec3& nu) const {
    check_unit(nu);
    return extended(seed_point<double>(nu));
  }

  // (F, DF, D^2 F) at a unit vector; derivatives are intrinsic to the sphere.
  IntegrandValue evaluate(const Vec3& nu) const {
    check_unit(nu);
    IntegrandValue out;
    if (family_ == IntegrandFamily::constant) {
      out.value = scale_;
      return out;
    }
    const Jet2 g = extended(seed_point<Jet2>(nu));
    const Mat3 proj = tangent_projector(nu);
    const Vec3 grad = g.gradient();
    out.value = g.value();
    out.gradient = proj * grad;
    out.hessian = proj * g.hessian() * proj - grad.dot(nu) * proj;
    return out;
  }

  // A_F = D^2 F + F Id on T_nu S^2, in the given tangent frame.
  AnisotropyMatrix anisotropy(const Vec3& nu, const Mat32& frame) const {
    const IntegrandValue v = evaluate(nu);
    AnisotropyMatrix a;
    a.base = nu;
    a.frame = frame;
    a.matrix = frame.transpose() * v.hessian * frame + v.value * Mat2::Identity();
    a.matrix = 0.5 * (a.matrix + a.matrix.transpose()).eval();
    a.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Mat2>(a.matrix, Eigen::EigenvaluesOnly).eigenvalues()[0];
    if (!(a.min_eigenvalue > 0.0)) throw EllipticityError(nu, a.min_eigenvalue);
    return a;
  }

  AnisotropyMatrix anisotropy(const Vec3& nu) const { return anisotropy(nu, tangent_frame(nu)); }

  // Ambient 3x3 form of A_F (tangent block of Hess Fbar), no ellipticity check.
  Mat3 anisotropy_ambient(const Vec3& nu) const {
    if (family_ == IntegrandFamily::constant) return scale_ * tangent_projector(nu);
    const Jet2 g = extended(seed_point<Jet2>(nu));
    const Mat3 proj = tangent_projector(nu);
    return proj * g.hessian() * proj;
  }

  // Smallest eigenvalue of A_F over an icosphere sample of normals.
  double ellipticity_margin(int level = 4) const {
    const SphereMeshPtr mesh = SphereMesh::icosphere(level);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh->size(); ++i) {
      const Mat2 a = mesh->frame(i).transpose() * anisotropy_ambient(mesh->vertex(i)) * mesh->frame(i);
      margin = std::min(margin, Eigen::SelfAdjointEigenSolver<Mat2>(a, Eigen::EigenvaluesOnly).eigenvalues()[0]);
    }
    return margin;
  }

  // Canonical text description; stable across runs.
  std::string describe() const {
    std::ostringstream os;
    os << family_name(family_);
    char buf[64];
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        std::snprintf(buf, sizeof buf, " %.17g", metric_(i, j));
        os << buf;
      }
    for (const auto& md : modes_) {
      std::snprintf(buf, sizeof buf, " Y%d,%d*%.17g", md.l, md.m, md.amplitude);
      os << buf;
    }
    return os.str();
  }

  // FNV-1a of describe().
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : describe()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  // Coarse normal-direction sample for the gauge maximization.
  const std::vector<std::pair<Vec3, double>>& coarse_sample() const { return *coarse_; }

 private:
  Integrand() = default;

  static void check_unit(const Vec3& nu) {
    if (!(std::abs(nu.norm() - 1.0) <= 1e-12)) throw DomainError("integrand evaluated at a non-unit vector");
  }

  void finish() {
    auto table = std::make_shared<std::vector<std::pair<Vec3, double>>>();
    static const SphereMeshPtr mesh = SphereMesh::icosphere(4);
    table->reserve(mesh->size());
    for (const auto& v : mesh->vertices()) {
      const double f = extended(seed_point<double>(v));
      if (!(f > 0.0)) throw DomainError("integrand is not positive on the sphere");
      table->emplace_back(v, f);
    }
    coarse_ = std::move(table);
  }

  IntegrandFamily family_ = IntegrandFamily::constant;
  double scale_ = 1.0;
  Mat3 metric_ = Mat3::Identity();
  std::vector<FourierMode> modes_;
  std::shared_ptr<const std::vector<std::pair<Vec3, double>>> coarse_;
};

struct GaugeValue {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();  // envelope rule: nu* / F(nu*)
  Vec3 maximizer = Vec3::Zero();
};

// F*(x) = sup_nu <x, nu> / F(nu): coarse sample, then 10 Newton steps on the sphere.
inline GaugeValue gauge(const Integrand& f, const Vec3& x) {
  if (x.norm() == 0.0 || !x.allFinite()) throw DomainError("gauge evaluated at the origin");
  Vec3 best = Vec3::UnitZ();
  double best_val = -std::numeric_limits<double>::infinity();
  for (const auto& [nu, fv] : f.coarse_sample()) {
    const double g = x.dot(nu) / fv;
    if (g > best_val) {
      best_val = g;
      best = nu;
    }
  }
  Vec3 nu = best;
  for (int step = 0; step < 10; ++step) {
    const Mat32 e = tangent_frame(nu);
    const IntegrandValue v = f.evaluate(nu);
    const double a = x.dot(nu);
    const Vec2 da = e.transpose() * x;
    const Vec2 df = e.transpose() * v.gradient;
    const Mat2 hf = e.transpose() * v.hessian * e;
    const double fv = v.value;
    const Vec2 dg = da / fv - a * df / (fv * fv);
    if (dg.norm() < 1e-16 * x.norm()) break;
    const Mat2 d2g = -a / fv * Mat2::Identity() - (da * df.transpose() + df * da.transpose()) / (fv * fv) -
                     a * hf / (fv * fv) + 2.0 * a * df * df.transpose() / (fv * fv * fv);
    Vec2 s;
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (d2g + d2g.transpose()));
    if (es.eigenvalues().maxCoeff() < 0.0) {
      s = -d2g.ldlt().solve(dg);
    } else {
      s = dg * (0.1 / std::max(dg.norm(), 1e-300)) * std::min(1.0, dg.norm());
    }
    nu = (nu + e * s).normalized();
  }
  const double fv = f.value(nu);
  return {x.dot(nu) / fv, nu / fv, nu};
}

// Discretized Wulff shape, indexed by the icosphere of normals.  Stores the
// Cahn-Hoffman map x(nu) = DF(nu) + F(nu) nu and its chart derivatives.
struct WulffMesh {
  SphereMeshPtr sphere;
  Integrand integrand = Integrand::constant();
  std::vector<Vec3> position;
  std::vector<Mat2> differential;            // A_F(nu) in the sphere frame; dx = E A
  std::vector<std::array<Vec3, 3>> second;   // d^2 x / dy_i dy_j (11, 12, 22)
  std::vector<double> weight;                // area weights on W
  std::vector<double> mean_curvature;        // H_W = tr A^{-1}

  std::size_t size() const { return position.size(); }
  int level() const { return sphere->level(); }
  const Vec3& normal(std::size_t i) const { return sphere->vertex(i); }
  const Mat32& frame(std::size_t i) const { return sphere->frame(i); }
  Mat32 tangent(std::size_t i) const { return sphere->frame(i) * differential[i]; }
  Mat2 metric(std::size_t i) const { return differential[i] * differential[i]; }
  double edge_length() const { return sphere->edge_length(); }

  PointJet jet(std::size_t i) const {
    PointJet j;
    j.pos = position[i];
    j.d1 = tangent(i);
    j.d2 = second[i];
    return j;
  }

  double area() const {
    double a = 0.0;
    for (double w : weight) a += w;
    return a;
  }

  // 0.9 / (max principal curvature of W).
  double reach() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : differential)
      m = std::min(m, Eigen::SelfAdjointEigenSolver<Mat2>(a, Eigen::EigenvaluesOnly).eigenvalues()[0]);
    return 0.9 * m;
  }
};

inline WulffMesh build_wulff(const Integrand& f, SphereMeshPtr sphere) {
  WulffMesh w;
  w.sphere = std::move(sphere);
  w.integrand = f;
  const std::size_t n = w.sphere->size();
  w.position.resize(n);
  w.differential.resize(n);
  w.second.resize(n);
  w.weight.resize(n);
  w.mean_curvature.resize(n);
  std::vector<int> bad(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const Vec3& nu = w.sphere->vertex(i);
    const Mat32& e = w.sphere->frame(i);
    if (f.family() == IntegrandFamily::constant) {
      const double c = f.evaluate(nu).value;
      w.position[i] = c * nu;
      w.differential[i] = c * Mat2::Identity();
      for (int k = 0; k < 3; ++k) w.second[i][static_cast<std::size_t>(k)] = (k == 1 ? 0.0 : -c) * nu;
    } else {
      const Jet3 g = f.extended(seed_point<Jet3>(nu));
      const Mat3 h = g.hessian();
      w.position[i] = g.gradient();
      Mat2 a = e.transpose() * h * e;
      w.differential[i] = 0.5 * (a + a.transpose());
      w.second[i][0] = g.third(e.col(0), e.col(0));
      w.second[i][1] = g.third(e.col(0), e.col(1));
      w.second[i][2] = g.third(e.col(1), e.col(1));
    }
    const Mat2& a = w.differential[i];
    if (Eigen::SelfAdjointEigenSolver<Mat2>(a, Eigen::EigenvaluesOnly).eigenvalues()[0] <= 0.0) bad[i] = 1;
    w.weight[i] = a.determinant() * w.sphere->weights()[i];
    w.mean_curvature[i] = a.inverse().trace();
  });
  for (std::size_t i = 0; i < n; ++i)
    if (bad[i]) {
      const Mat2& a = w.differential[i];
      throw EllipticityError(w.sphere->vertex(i),
                             Eigen::SelfAdjointEigenSolver<Mat2>(a, Eigen::EigenvaluesOnly).eigenvalues()[0]);
    }
  return w;
}

inline WulffMesh build_wulff(const Integrand& f, int level) {
  if (level < 2) throw DomainError("build_wulff: level must be at least 2");
  return build_wulff(f, build_sphere_mesh(level));
}

// The round sphere seen as the Wulff shape of F = 1.
inline WulffMesh round_sphere(SphereMeshPtr sphere) { return build_wulff(Integrand::constant(1.0), std::move(sphere)); }

// ---- plain-text mesh format ------------------------------------------------
//
//   # wulffstab-mesh 1
//   # level <L>
//   # integrand <hash> <description>
//   v x y z nx ny nz        (one per vertex, 17 significant digits)
//   f i j k                 (0-based vertex indices, outward orientation)

struct MeshFile {
  int level = -1;
  std::string integrand_hash;
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<std::array<int, 3>> faces;
};

inline void write_mesh(std::ostream& os, const std::vector<Vec3>& positions, const std::vector<Vec3>& normals,
                       const std::vector<std::array<int, 3>>& faces, int level, const std::string& hash,
                       const std::string& description) {
  os << "# wulffstab-mesh 1\n# level " << level << "\n# integrand " << hash << ' ' << description << '\n';
  char buf[256];
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3& p = positions[i];
    const Vec3& n = normals[i];
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", p[0], p[1], p[2], n[0], n[1], n[2]);
    os << buf;
  }
  for (const auto& f : faces) os << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void write_mesh(std::ostream& os, const WulffMesh& w) {
  write_mesh(os, w.position, w.sphere->vertices(), w.sphere->faces(), w.level(), w.integrand.hash(),
             w.integrand.describe());
}

inline MeshFile read_mesh(std::istream& is) {
  MeshFile m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "#") {
      std::string key;
      ls >> key;
      if (key == "level") ls >> m.level;
      if (key == "integrand") ls >> m.integrand_hash;
    } else if (tag == "v") {
      Vec3 p, n;
      ls >> p[0] >> p[1] >> p[2] >> n[0] >> n[1] >> n[2];
      if (!ls) throw std::runtime_error("mesh line " + std::to_string(lineno) + ": malformed vertex");
      m.positions.push_back(p);
      m.normals.push_back(n);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      ls >> f[0] >> f[1] >> f[2];
      if (!ls) throw std::runtime_error("mesh line " + std::to_string(lineno) + ": malformed face");
      m.faces.push_back(f);
    } else {
      throw std::runtime_error("mesh line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  for (const auto& f : m.faces)
    for (int k : f)
      if (k < 0 || static_cast<std::size_t>(k) >= m.positions.size())
        throw std::runtime_error("mesh face references a missing vertex");
  return m;
}

}  // namespace wulffstab
