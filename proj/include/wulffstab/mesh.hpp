#pragma once

// Discretization of the unit sphere: icosphere meshes, area quadrature,
// local least-squares derivative stencils and the real spherical-harmonic
// transform.  Every field in the library lives on the vertices of one of
// these meshes (for Wulff shapes the mesh is the sphere of normals).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/errors.hpp"
#include "wulffstab/harmonics.hpp"
#include "wulffstab/parallel.hpp"
#include "wulffstab/taylor.hpp"

namespace wulffstab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

// Orthonormal (e1, e2) with e1 x e2 = nu.
inline Mat32 tangent_frame(const Vec3& nu) {
  int axis = 0;
  if (std::abs(nu[1]) < std::abs(nu[axis])) axis = 1;
  if (std::abs(nu[2]) < std::abs(nu[axis])) axis = 2;
  Vec3 a = Vec3::Zero();
  a[axis] = 1.0;
  Vec3 e1 = (a - a.dot(nu) * nu).normalized();
  Vec3 e2 = nu.cross(e1);
  Mat32 f;
  f.col(0) = e1;
  f.col(1) = e2;
  return f;
}

inline Mat3 tangent_projector(const Vec3& nu) { return Mat3::Identity() - nu * nu.transpose(); }

// Solid angle of the spherical triangle (a, b, c), unit vectors.
inline double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

enum class StencilKind {
  one_ring_quadratic,  // first and second derivatives from the one-ring
  two_ring_cubic,      // cubic model on the two-ring, second derivatives O(h^2)
};

// Per-node derivatives of a scalar in the node's gnomonic chart
// y -> (nu0 + E y) / |nu0 + E y|.  In this chart the second derivatives at
// y = 0 are the covariant Hessian of the sphere.
struct ChartJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

// Same for an R^3-valued map: position, dpos/dy_i, d^2pos/dy_i dy_j.
struct PointJet {
  Vec3 pos = Vec3::Zero();
  Mat32 d1 = Mat32::Zero();
  std::array<Vec3, 3> d2{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};  // 11, 12, 22

  const Vec3& second(int i, int j) const { return d2[static_cast<std::size_t>(i + j)]; }
};

class SphereMesh {
 public:
  // Icosphere with 10 * 4^level + 2 vertices.
  static std::shared_ptr<const SphereMesh> icosphere(int level) {
    if (level < 0 || level > 8) throw DomainError("sphere mesh level must lie in [0, 8]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
      std::map<std::pair<int, int>, int> mid;
      auto midpoint = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
        const int idx = static_cast<int>(v.size()) - 1;
        mid.emplace(key, idx);
        return idx;
      };
      std::vector<std::array<int, 3>> next;
      next.reserve(f.size() * 4);
      for (const auto& tri : f) {
        const int a = midpoint(tri[0], tri[1]);
        const int b = midpoint(tri[1], tri[2]);
        const int c = midpoint(tri[2], tri[0]);
        next.push_back({tri[0], a, c});
        next.push_back({tri[1], b, a});
        next.push_back({tri[2], c, b});
        next.push_back({a, b, c});
      }
      f = std::move(next);
    }
    auto mesh = std::make_shared<SphereMesh>(std::move(v), std::move(f));
    mesh->level_ = level;
    return mesh;
  }

  // Arbitrary triangulation of (approximately) the sphere; vertices are
  // normalized.  Used for tests of degenerate neighbourhoods.
  SphereMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (auto& p : vertices_) {
      if (p.norm() == 0.0) throw DomainError("sphere mesh vertex at the origin");
      p.normalize();
    }
    for (auto& tri : faces_) {
      const Vec3& a = vertices_[static_cast<std::size_t>(tri[0])];
      const Vec3& b = vertices_[static_cast<std::size_t>(tri[1])];
      const Vec3& c = vertices_[static_cast<std::size_t>(tri[2])];
      if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(tri[1], tri[2]);
    }
    const std::size_t n = vertices_.size();
    std::vector<std::set<int>> ring(n);
    weights_.assign(n, 0.0);
    for (const auto& tri : faces_) {
      const double area = spherical_triangle_area(vertices_[static_cast<std::size_t>(tri[0])],
                                                  vertices_[static_cast<std::size_t>(tri[1])],
                                                  vertices_[static_cast<std::size_t>(tri[2])]);
      for (int k = 0; k < 3; ++k) {
        weights_[static_cast<std::size_t>(tri[k])] += area / 3.0;
        ring[static_cast<std::size_t>(tri[k])].insert(tri[(k + 1) % 3]);
        ring[static_cast<std::size_t>(tri[k])].insert(tri[(k + 2) % 3]);
      }
    }
    neighbors_.resize(n);
    frames_.resize(n);
    double edge_sum = 0.0;
    std::size_t edge_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      neighbors_[i].assign(ring[i].begin(), ring[i].end());
      frames_[i] = tangent_frame(vertices_[i]);
      for (int j : neighbors_[i]) {
        edge_sum += std::acos(std::clamp(vertices_[i].dot(vertices_[static_cast<std::size_t>(j)]), -1.0, 1.0));
        ++edge_count;
      }
    }
    mean_edge_ = edge_count ? edge_sum / static_cast<double>(edge_count) : 0.0;
  }

  std::size_t size() const { return vertices_.size(); }
  int level() const { return level_; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  const Vec3& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<int>& neighbors(std::size_t i) const { return neighbors_[i]; }
  const Mat32& frame(std::size_t i) const { return frames_[i]; }
  // Mean geodesic edge length.
  double edge_length() const { return mean_edge_; }

  std::vector<int> two_ring(std::size_t i) const {
    std::set<int> s;
    for (int j : neighbors_[i]) {
      s.insert(j);
      for (int k : neighbors_[static_cast<std::size_t>(j)]) s.insert(k);
    }
    s.erase(static_cast<int>(i));
    return {s.begin(), s.end()};
  }

  // Gnomonic coordinates of q in the chart at vertex i.
  Vec2 chart_coords(std::size_t i, const Vec3& q) const {
    const double d = vertices_[i].dot(q);
    if (d <= 0.0) throw StencilError("neighbour lies outside the gnomonic chart");
    return frames_[i].transpose() * q / d;
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<Mat32> frames_;
  double mean_edge_ = 0.0;
  int level_ = -1;
};

using SphereMeshPtr = std::shared_ptr<const SphereMesh>;

// Sphere mesh for the supported experiment range.
inline SphereMeshPtr build_sphere_mesh(int level) {
  if (level < 2 || level > 8) throw DomainError("build_sphere_mesh: level must lie in [2, 8]");
  return SphereMesh::icosphere(level);
}

// Local polynomial least-squares fits, one small operator per vertex.
class Stencil {
 public:
  Stencil(SphereMeshPtr mesh, StencilKind kind) : mesh_(std::move(mesh)), kind_(kind) {
    const std::size_t n = mesh_->size();
    nodes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) build(i);
  }

  const SphereMesh& mesh() const { return *mesh_; }
  const SphereMeshPtr& mesh_ptr() const { return mesh_; }
  StencilKind kind() const { return kind_; }
  bool has_hessian(std::size_t i) const { return nodes_[i].op.rows() >= 5; }

  ChartJet fit(std::size_t i, std::span<const double> values) const {
    const Node& nd = nodes_[i];
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(nd.nbr.size()));
    for (std::size_t k = 0; k < nd.nbr.size(); ++k)
      rhs[static_cast<Eigen::Index>(k)] = values[static_cast<std::size_t>(nd.nbr[k])] - values[i];
    const Eigen::VectorXd c = nd.op * rhs;
    ChartJet j;
    j.value = values[i];
    j.grad = {c[0], c[1]};
    if (c.size() >= 5) j.hess << c[2], c[3], c[3], c[4];
    return j;
  }

  PointJet fit(std::size_t i, std::span<const Vec3> values) const {
    const Node& nd = nodes_[i];
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(nd.nbr.size()), 3);
    for (std::size_t k = 0; k < nd.nbr.size(); ++k)
      rhs.row(static_cast<Eigen::Index>(k)) = (values[static_cast<std::size_t>(nd.nbr[k])] - values[i]).transpose();
    const Eigen::MatrixXd c = nd.op * rhs;
    PointJet j;
    j.pos = values[i];
    j.d1.col(0) = c.row(0).transpose();
    j.d1.col(1) = c.row(1).transpose();
    if (c.rows() >= 5) {
      j.d2[0] = c.row(2).transpose();
      j.d2[1] = c.row(3).transpose();
      j.d2[2] = c.row(4).transpose();
    }
    return j;
  }

  std::vector<ChartJet> fit_all(std::span<const double> values) const {
    std::vector<ChartJet> out(mesh_->size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = fit(i, values); });
    return out;
  }

  std::vector<PointJet> fit_all(std::span<const Vec3> values) const {
    std::vector<PointJet> out(mesh_->size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = fit(i, values); });
    return out;
  }

 private:
  struct Node {
    std::vector<int> nbr;
    Eigen::MatrixXd op;  // coefficients x neighbours
  };

  void build(std::size_t i) {
    Node& nd = nodes_[i];
    nd.nbr = kind_ == StencilKind::two_ring_cubic ? mesh_->two_ring(i) : mesh_->neighbors(i);
    const std::size_t k = nd.nbr.size();
    if (k < 3) throw StencilError("degenerate one-ring: valence " + std::to_string(k) + " at vertex " + std::to_string(i));
    int ncoef = 2;
    if (kind_ == StencilKind::two_ring_cubic && k >= 12) {
      ncoef = 9;
    } else if (k >= 5) {
      ncoef = 5;
    }
    std::vector<Vec2> ys(k);
    double scale = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      ys[a] = mesh_->chart_coords(i, mesh_->vertex(static_cast<std::size_t>(nd.nbr[a])));
      scale = std::max(scale, ys[a].norm());
    }
    if (scale == 0.0) throw StencilError("coincident neighbours at vertex " + std::to_string(i));
    Eigen::MatrixXd d(static_cast<Eigen::Index>(k), ncoef);
    for (std::size_t a = 0; a < k; ++a) {
      const double u = ys[a][0] / scale;
      const double v = ys[a][1] / scale;
      const auto r = static_cast<Eigen::Index>(a);
      d(r, 0) = u;
      d(r, 1) = v;
      if (ncoef >= 5) {
        d(r, 2) = 0.5 * u * u;
        d(r, 3) = u * v;
        d(r, 4) = 0.5 * v * v;
      }
      if (ncoef >= 9) {
        d(r, 5) = u * u * u / 6.0;
        d(r, 6) = 0.5 * u * u * v;
        d(r, 7) = 0.5 * u * v * v;
        d(r, 8) = v * v * v / 6.0;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s[s.size() - 1] < 1e-8 * s[0])
      throw StencilError("collinear neighbourhood at vertex " + std::to_string(i));
    Eigen::MatrixXd pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    // undo the coordinate scaling: first derivatives /scale, second /scale^2
    for (int r = 0; r < ncoef; ++r) {
      const int deg = r < 2 ? 1 : (r < 5 ? 2 : 3);
      pinv.row(r) /= std::pow(scale, deg);
    }
    nd.op = pinv.topRows(ncoef >= 5 ? 5 : 2);
  }

  SphereMeshPtr mesh_;
  StencilKind kind_;
  std::vector<Node> nodes_;
};

// Chart derivatives of an ambient function G restricted to the sphere at
// vertex frame (nu, E), from an order-2 jet of G.
inline ChartJet chart_jet_from_ambient(const Jet2& g, const Vec3& nu, const Mat32& e) {
  ChartJet j;
  j.value = g.value();
  const Vec3 grad = g.gradient();
  j.grad = e.transpose() * grad;
  j.hess = e.transpose() * g.hessian() * e - grad.dot(nu) * Mat2::Identity();
  return j;
}

struct SphericalExpansion {
  int band = 0;
  Eigen::VectorXd coeffs;  // harmonic_index(l, m)
};

struct ScalarField {
  std::vector<double> values;
  std::optional<SphericalExpansion> spectrum;

  std::size_t size() const { return values.size(); }
};

enum class TensorKind { bilinear, mixed };

// Per-vertex 2x2 tensor in an orthonormal tangent frame.
struct TensorField {
  std::vector<Mat2> values;
  TensorKind kind = TensorKind::mixed;

  std::size_t size() const { return values.size(); }
};

// Least-squares real spherical-harmonic transform on a sphere mesh.
class SpectralBasis {
 public:
  SpectralBasis(SphereMeshPtr mesh, int band) : mesh_(std::move(mesh)), band_(band) {
    if (band < 0) throw DomainError("spherical harmonic band must be non-negative");
    const double limit = std::sqrt(static_cast<double>(mesh_->size())) / 2.0;
    if (band > limit)
      throw DomainError("band " + std::to_string(band) + " exceeds the mesh limit " + std::to_string(limit));
    const auto n = static_cast<Eigen::Index>(mesh_->size());
    const int k = harmonic_count(band);
    basis_.resize(n, k);
    std::vector<double> row;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3& x = mesh_->vertex(static_cast<std::size_t>(i));
      solid_harmonics(seed_point<double>(x), band, row);
      for (int c = 0; c < k; ++c) basis_(i, c) = row[static_cast<std::size_t>(c)];
    }
    sqrtw_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) sqrtw_[i] = std::sqrt(mesh_->weights()[static_cast<std::size_t>(i)]);
    qr_.compute(sqrtw_.asDiagonal() * basis_);
  }

  int band() const { return band_; }
  const SphereMesh& mesh() const { return *mesh_; }
  const SphereMeshPtr& mesh_ptr() const { return mesh_; }

  SphericalExpansion analyze(std::span<const double> values) const {
    if (values.size() != mesh_->size()) throw DomainError("field size does not match the mesh");
    Eigen::VectorXd f(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) f[static_cast<Eigen::Index>(i)] = values[i];
    return {band_, qr_.solve(sqrtw_.cwiseProduct(f))};
  }

  std::vector<double> synthesize(const SphericalExpansion& s) const {
    const Eigen::VectorXd c = pad(s);
    const Eigen::VectorXd f = basis_ * c;
    return {f.data(), f.data() + f.size()};
  }

  ScalarField project(std::span<const double> values) const {
    ScalarField out;
    out.spectrum = analyze(values);
    out.values = synthesize(*out.spectrum);
    return out;
  }

  ScalarField field(const SphericalExpansion& s) const { return {synthesize(s), s}; }

  // Chart derivatives at every vertex (exact for the expansion).
  std::vector<ChartJet> jets(const SphericalExpansion& s) const {
    std::vector<ChartJet> out(mesh_->size());
    parallel_for(out.size(), [&](std::size_t i) {
      const Vec3& x = mesh_->vertex(i);
      out[i] = chart_jet_from_ambient(evaluate<Jet2>(s, x), x, mesh_->frame(i));
    });
    return out;
  }

  template <class T>
  static T evaluate(const SphericalExpansion& s, const Vec3& x) {
    std::vector<T> y;
    solid_harmonics(seed_point<T>(x), s.band, y);
    T acc(0.0);
    for (Eigen::Index c = 0; c < s.coeffs.size(); ++c)
      if (s.coeffs[c] != 0.0) acc += y[static_cast<std::size_t>(c)] * s.coeffs[c];
    return acc;
  }

 private:
  Eigen::VectorXd pad(const SphericalExpansion& s) const {
    if (s.band > band_) throw DomainError("expansion band exceeds the basis band");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(harmonic_count(band_));
    c.head(s.coeffs.size()) = s.coeffs;
    return c;
  }

  SphereMeshPtr mesh_;
  int band_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd sqrtw_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

// Expansion with a single harmonic.
inline SphericalExpansion single_harmonic(int l, int m, double amplitude = 1.0) {
  SphericalExpansion s{l, Eigen::VectorXd::Zero(harmonic_count(l))};
  s.coeffs[harmonic_index(l, m)] = amplitude;
  return s;
}

inline void check_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("L^p exponent must satisfy 1 < p < infinity");
}

// (sum_i w_i |f_i|^p)^(1/p), summed in vertex order.
inline double lp_norm(std::span<const double> values, std::span<const double> weights, double p) {
  check_exponent(p);
  if (values.size() != weights.size()) throw DomainError("lp_norm: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += weights[i] * std::pow(std::abs(values[i]), p);
  return std::pow(acc, 1.0 / p);
}

inline std::vector<double> pointwise_norms(const TensorField& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t.values[i].norm();
  return out;
}

inline double lp_norm(const TensorField& t, std::span<const double> weights, double p) {
  const auto n = pointwise_norms(t);
  return lp_norm(n, weights, p);
}

inline double sup_norm(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace wulffstab
