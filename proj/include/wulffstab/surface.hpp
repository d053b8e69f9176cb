#pragma once

// Hypersurfaces given as graphs over a base: psi(x) = x + u(x) nu_W(x) over a
// Wulff mesh, or psi(x) = e^{f(x)} x over the sphere.  Nodes are indexed by
// the normal of the base, so geometry is computed in the gnomonic chart of
// the sphere of normals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "wulffstab/errors.hpp"
#include "wulffstab/integrand.hpp"
#include "wulffstab/mesh.hpp"
#include "wulffstab/operators.hpp"
#include "wulffstab/optimize.hpp"
#include "wulffstab/parallel.hpp"

namespace wulffstab {

struct SurfaceGeometry {
  SphereMeshPtr sphere;
  std::vector<Vec3> position;
  std::vector<Vec3> normal;
  std::vector<Mat2> metric;          // chart metric g
  std::vector<Mat2> second_form;     // chart second fundamental form h
  std::vector<Mat32> frame;          // orthonormal frame of the tangent plane
  TensorField shape{{}, TensorKind::mixed};  // d nu in `frame`
  std::vector<double> mean_curvature;
  std::vector<double> area_element;  // sqrt det g
  std::vector<double> weight;        // quadrature weight on the surface

  std::size_t size() const { return position.size(); }

  double area() const {
    double a = 0.0;
    for (double w : weight) a += w;
    return a;
  }

  // Shape operator in chart coordinates, g^{-1} h.
  Mat2 shape_chart(std::size_t i) const { return metric[i].inverse() * second_form[i]; }
};

// Geometry from per-node chart jets of the parametrization.
inline SurfaceGeometry geometry_from_jets(SphereMeshPtr sphere, std::span<const PointJet> jets) {
  const std::size_t n = jets.size();
  if (n != sphere->size()) throw DomainError("jet count does not match the sphere mesh");
  SurfaceGeometry g;
  g.sphere = std::move(sphere);
  g.position.resize(n);
  g.normal.resize(n);
  g.metric.resize(n);
  g.second_form.resize(n);
  g.frame.resize(n);
  g.shape.values.resize(n);
  g.mean_curvature.resize(n);
  g.area_element.resize(n);
  g.weight.resize(n);
  std::vector<int> degenerate(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const PointJet& j = jets[i];
    const Mat2 met = j.d1.transpose() * j.d1;
    const Vec3 cross = j.d1.col(0).cross(j.d1.col(1));
    const double len = cross.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      degenerate[i] = 1;
      return;
    }
    const Vec3 nu = cross / len;
    Mat2 h;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) h(a, b) = -j.second(a, b).dot(nu);
    h = 0.5 * (h + h.transpose()).eval();
    // g = R^T R, orthonormal frame Q = J R^{-1}
    const Eigen::LLT<Mat2> llt(met);
    const Mat2 r = llt.matrixU();
    const Mat2 rinv = r.inverse();
    g.position[i] = j.pos;
    g.normal[i] = nu;
    g.metric[i] = met;
    g.second_form[i] = h;
    g.frame[i] = j.d1 * rinv;
    g.shape.values[i] = rinv.transpose() * h * rinv;
    g.mean_curvature[i] = met.inverse().cwiseProduct(h).sum();
    g.area_element[i] = std::sqrt(met.determinant());
    g.weight[i] = g.area_element[i] * g.sphere->weights()[i];
  });
  for (std::size_t i = 0; i < n; ++i)
    if (degenerate[i]) throw CertificateError("degenerate tangent plane at node " + std::to_string(i));
  return g;
}

// Geometry of the dilated surface s * Sigma.
inline SurfaceGeometry scaled(SurfaceGeometry g, double s) {
  if (!(s > 0.0)) throw DomainError("scale factor must be positive");
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.position[i] *= s;
    g.metric[i] *= s * s;
    g.second_form[i] *= s;
    g.shape.values[i] /= s;
    g.mean_curvature[i] /= s;
    g.area_element[i] *= s * s;
    g.weight[i] *= s * s;
  }
  return g;
}

inline SurfaceGeometry translated(SurfaceGeometry g, const Vec3& t) {
  for (auto& p : g.position) p += t;
  return g;
}

namespace detail {

inline SurfaceGeometry fitted_geometry(const Stencil& stencil, SphereMeshPtr sphere, std::vector<Vec3> positions) {
  auto jets = stencil.fit_all(positions);
  for (std::size_t i = 0; i < positions.size(); ++i) jets[i].pos = positions[i];
  return geometry_from_jets(std::move(sphere), jets);
}

}  // namespace detail

// Geometry of a surface given only by node positions; derivatives from fits.
inline SurfaceGeometry surface_from_positions(const Stencil& stencil, std::span<const Vec3> positions) {
  return detail::fitted_geometry(stencil, stencil.mesh_ptr(), {positions.begin(), positions.end()});
}

// psi = x + u nu_W over a Wulff mesh.
inline SurfaceGeometry radial_graph(const WulffMesh& w, const ScalarField& u, DerivativeMode mode,
                                    const Stencil* stencil, const SpectralBasis* basis) {
  detail::check_size(w, u.size());
  const double reach = w.reach();
  double max_abs = 0.0;
  double min_u = std::numeric_limits<double>::infinity();
  for (double v : u.values) {
    max_abs = std::max(max_abs, std::abs(v));
    min_u = std::min(min_u, v);
  }
  if (!(1.0 + min_u / reach > 0.0)) throw TubularError(max_abs, reach);

  const std::size_t n = w.size();
  if (mode == DerivativeMode::one_ring) {
    if (!stencil) throw DomainError("one-ring derivatives need a stencil");
    std::vector<Vec3> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = w.position[i] + u.values[i] * w.normal(i);
    return detail::fitted_geometry(*stencil, w.sphere, std::move(pos));
  }
  const auto a = chart_jets(u, mode, stencil, basis);
  std::vector<PointJet> jets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& nu = w.normal(i);
    const Mat32& e = w.frame(i);
    const Mat32 z = w.tangent(i);
    PointJet& j = jets[i];
    j.pos = w.position[i] + a[i].value * nu;
    for (int k = 0; k < 2; ++k) j.d1.col(k) = z.col(k) + a[i].grad[k] * nu + a[i].value * e.col(k);
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q)
        j.d2[static_cast<std::size_t>(p + q)] = w.second[i][static_cast<std::size_t>(p + q)] + a[i].hess(p, q) * nu +
                                               a[i].grad[p] * e.col(q) + a[i].grad[q] * e.col(p) -
                                               (p == q ? a[i].value : 0.0) * nu;
  }
  return geometry_from_jets(w.sphere, jets);
}

// psi = e^f x over the unit sphere.
inline SurfaceGeometry exp_graph(SphereMeshPtr sphere, const ScalarField& f, DerivativeMode mode,
                                 const Stencil* stencil, const SpectralBasis* basis) {
  const std::size_t n = sphere->size();
  if (f.size() != n) throw DomainError("field size does not match the sphere mesh");
  for (double v : f.values)
    if (!std::isfinite(v)) throw DomainError("exp_graph: non-finite radius");
  if (mode == DerivativeMode::one_ring) {
    if (!stencil) throw DomainError("one-ring derivatives need a stencil");
    std::vector<Vec3> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = std::exp(f.values[i]) * sphere->vertex(i);
    return detail::fitted_geometry(*stencil, sphere, std::move(pos));
  }
  const auto a = chart_jets(f, mode, stencil, basis);
  std::vector<PointJet> jets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& nu = sphere->vertex(i);
    const Mat32& e = sphere->frame(i);
    const double ef = std::exp(a[i].value);
    PointJet& j = jets[i];
    j.pos = ef * nu;
    for (int k = 0; k < 2; ++k) j.d1.col(k) = ef * (a[i].grad[k] * nu + e.col(k));
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q)
        j.d2[static_cast<std::size_t>(p + q)] =
            ef * ((a[i].hess(p, q) + a[i].grad[p] * a[i].grad[q] - (p == q ? 1.0 : 0.0)) * nu +
                  a[i].grad[p] * e.col(q) + a[i].grad[q] * e.col(p));
  }
  return geometry_from_jets(sphere, jets);
}

// ---- graphs evaluated off the mesh -----------------------------------------

enum class Parametrization { radial, exponential };

// A graph over the base with a band-limited radius, evaluable at any normal.
struct GraphSurface {
  Parametrization param = Parametrization::radial;
  SphericalExpansion radius;
};

struct GraphPoint {
  Vec3 position;
  Mat3 jacobian;  // d psi / d nu on tangent vectors
};

// psi(nu) and its differential.  Radial: grad Fbar(nu) + u nu; exponential: e^f nu.
inline GraphPoint graph_point(const Integrand& f, const GraphSurface& s, const Vec3& nu) {
  const Jet1 uj = SpectralBasis::evaluate<Jet1>(s.radius, nu);
  const Mat3 proj = tangent_projector(nu);
  const Vec3 du = proj * uj.gradient();
  const double u = uj.value();
  GraphPoint g;
  if (s.param == Parametrization::exponential) {
    const double e = std::exp(u);
    g.position = e * nu;
    g.jacobian = e * (nu * du.transpose() + proj);
    return g;
  }
  if (f.family() == IntegrandFamily::constant) {
    const double c = f.value(nu);
    g.position = (c + u) * nu;
    g.jacobian = nu * du.transpose() + (c + u) * proj;
    return g;
  }
  const Jet2 fj = f.extended(seed_point<Jet2>(nu));
  g.position = fj.gradient() + u * nu;
  g.jacobian = fj.hessian() + nu * du.transpose() + u * proj;
  return g;
}

// ---- projection certificate -------------------------------------------------

struct GraphCertificate {
  double eta = 0.0;                 // min <nu_Sigma(q), nu_W(p(q))>
  bool pass = false;
  double threshold = 0.1;
  std::vector<double> radius;       // recovered t with q = p(q) + t nu_W(p(q))
  std::vector<Vec3> base_normal;    // nu_W(p(q))
  std::vector<double> margin;       // per-node <nu_Sigma, nu_W(p(q))>
  std::size_t worst_node = 0;
  std::size_t ambiguous = 0;
  std::size_t unconverged = 0;
  std::string diagnostics;
};

namespace detail {

struct LineHit {
  Vec3 nu;
  double t = 0.0;
  bool converged = false;
};

// Solve q = x(nu) + t nu on the Wulff shape of f by Newton in the chart.
inline LineHit intersect_normal_line(const Integrand& f, const Vec3& q, Vec3 nu) {
  LineHit hit;
  if (f.family() == IntegrandFamily::constant) {
    const double r = q.norm();
    hit.nu = q / r;
    hit.t = r - f.value(hit.nu);
    hit.converged = r > 0.0;
    return hit;
  }
  Jet2 fj = f.extended(seed_point<Jet2>(nu));
  double t = (q - fj.gradient()).dot(nu);
  for (int it = 0; it < 40; ++it) {
    fj = f.extended(seed_point<Jet2>(nu));
    const Vec3 r = fj.gradient() + t * nu - q;
    const Mat32 e = tangent_frame(nu);
    Mat3 jac;
    jac.col(0) = fj.hessian() * e.col(0) + t * e.col(0);
    jac.col(1) = fj.hessian() * e.col(1) + t * e.col(1);
    jac.col(2) = nu;
    const Vec3 step = jac.partialPivLu().solve(-r);
    Vec2 dy(step[0], step[1]);
    const double dn = dy.norm();
    if (dn > 0.2) dy *= 0.2 / dn;
    nu = (nu + e * dy).normalized();
    t += step[2];
    if (r.norm() < 1e-14 * (1.0 + q.norm()) || step.norm() < 1e-15) {
      hit.converged = true;
      break;
    }
  }
  fj = f.extended(seed_point<Jet2>(nu));
  hit.nu = nu;
  hit.t = (q - fj.gradient()).dot(nu);
  if (!hit.converged) hit.converged = (fj.gradient() + hit.t * nu - q).norm() < 1e-10 * (1.0 + q.norm());
  return hit;
}

}  // namespace detail

// Projects every surface node onto the base along the base normal lines and
// checks transversality.  Nodes are assumed indexed over the base normals,
// so node i seeds the search at base normal i; a second search from the
// nearest stored normal line detects ambiguous projections.
inline GraphCertificate projection_certificate(const SurfaceGeometry& geom, const WulffMesh& base,
                                               double threshold = 0.1) {
  const std::size_t n = geom.size();
  if (n != base.size()) throw DomainError("surface and base have different node counts");
  GraphCertificate c;
  c.threshold = threshold;
  c.radius.resize(n);
  c.base_normal.resize(n);
  c.margin.resize(n);
  std::vector<int> amb(n, 0), bad(n, 0);
  const Integrand& f = base.integrand;
  const SphereMesh& sphere = *base.sphere;
  parallel_for(n, [&](std::size_t i) {
    const Vec3& q = geom.position[i];
    detail::LineHit hit = detail::intersect_normal_line(f, q, base.normal(i));
    // hill-climb the distance to stored normal lines for an independent start
    std::size_t j = i;
    auto line_dist = [&](std::size_t k) {
      const Vec3 d = q - base.position[k];
      return (d - d.dot(base.normal(k)) * base.normal(k)).norm();
    };
    double best = line_dist(j);
    for (bool moved = true; moved;) {
      moved = false;
      for (int k : sphere.neighbors(j)) {
        const double d = line_dist(static_cast<std::size_t>(k));
        if (d < best) {
          best = d;
          j = static_cast<std::size_t>(k);
          moved = true;
        }
      }
    }
    if (j != i) {
      const detail::LineHit other = detail::intersect_normal_line(f, q, base.normal(j));
      if (other.converged && (!hit.converged || (other.nu - hit.nu).norm() > 1e-6)) {
        if (hit.converged) amb[i] = 1;
        if (!hit.converged || other.t < hit.t) hit = other;
      }
    }
    if (!hit.converged) bad[i] = 1;
    c.radius[i] = hit.t;
    c.base_normal[i] = hit.nu;
    c.margin[i] = geom.normal[i].dot(hit.nu);
  });
  c.eta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (c.margin[i] < c.eta) {
      c.eta = c.margin[i];
      c.worst_node = i;
    }
    c.ambiguous += static_cast<std::size_t>(amb[i]);
    c.unconverged += static_cast<std::size_t>(bad[i]);
  }
  c.pass = c.eta > threshold && c.ambiguous == 0 && c.unconverged == 0;
  if (!c.pass) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "eta = %.6g at node %zu (threshold %.3g), %zu ambiguous, %zu unconverged", c.eta,
                  c.worst_node, threshold, c.ambiguous, c.unconverged);
    c.diagnostics = buf;
  }
  return c;
}

// Certificate over the round unit sphere (radial projection).
inline GraphCertificate projection_certificate(const SurfaceGeometry& geom, double threshold = 0.1) {
  return projection_certificate(geom, round_sphere(geom.sphere), threshold);
}

// ---- Hausdorff distance -----------------------------------------------------

// Uniform bucket grid for nearest-neighbour queries.
class PointGrid {
 public:
  PointGrid(std::span<const Vec3> pts, double cell) : pts_(pts.begin(), pts.end()), cell_(cell) {
    if (!(cell > 0.0)) throw DomainError("PointGrid: cell size must be positive");
    for (std::size_t i = 0; i < pts_.size(); ++i) cells_[key(index(pts_[i]))].push_back(static_cast<int>(i));
  }

  double nearest(const Vec3& q) const {
    const auto c = index(q);
    double best = std::numeric_limits<double>::infinity();
    for (int ring = 0;; ++ring) {
      for (int dx = -ring; dx <= ring; ++dx)
        for (int dy = -ring; dy <= ring; ++dy)
          for (int dz = -ring; dz <= ring; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
            const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
            if (it == cells_.end()) continue;
            for (int k : it->second) best = std::min(best, (pts_[static_cast<std::size_t>(k)] - q).norm());
          }
      // every unvisited cell is at least ring * cell away
      if (best <= ring * cell_ || ring > 4096) return best;
    }
  }

 private:
  std::array<long, 3> index(const Vec3& p) const {
    return {static_cast<long>(std::floor(p[0] / cell_)), static_cast<long>(std::floor(p[1] / cell_)),
            static_cast<long>(std::floor(p[2] / cell_))};
  }
  static std::uint64_t key(const std::array<long, 3>& c) {
    auto u = [](long v) { return static_cast<std::uint64_t>(v + (1L << 20)) & 0x1FFFFF; };
    return (u(c[0]) << 42) | (u(c[1]) << 21) | u(c[2]);
  }

  std::vector<Vec3> pts_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

struct HausdorffResult {
  double distance = 0.0;
  Vec3 translation = Vec3::Zero();  // applied to the surface
};

inline double symmetric_hausdorff(std::span<const Vec3> a, const PointGrid& grid_a, std::span<const Vec3> b,
                                  const PointGrid& grid_b, const Vec3& t) {
  double d = 0.0;
  for (const auto& p : a) d = std::max(d, grid_b.nearest(p + t));
  for (const auto& p : b) d = std::max(d, grid_a.nearest(p - t));
  return d;
}

// min over translations t of d_H(Sigma + t, base), node-sampled.  Nelder-Mead
// from the centroid offset.
inline HausdorffResult hausdorff_distance(std::span<const Vec3> surface, std::span<const Vec3> base,
                                          double step = 0.0) {
  if (surface.empty() || base.empty()) throw DomainError("hausdorff_distance: empty point set");
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (const auto& p : surface) ca += p;
  for (const auto& p : base) cb += p;
  ca /= static_cast<double>(surface.size());
  cb /= static_cast<double>(base.size());
  double extent = 0.0;
  for (const auto& p : base) extent = std::max(extent, (p - cb).norm());
  const double cell = std::max(extent, 1e-12) * 2.0 / std::cbrt(static_cast<double>(base.size()));
  const PointGrid ga(surface, cell), gb(base, cell);
  auto cost = [&](const Vec3& t) { return symmetric_hausdorff(surface, ga, base, gb, t); };

  SimplexOptions opt;
  opt.step = step > 0.0 ? step : 0.05 * cell;
  opt.x_tol = 1e-12;
  opt.f_tol = 1e-15;
  opt.max_iter = 400;
  const Vec3 start = cb - ca;
  const SimplexResult r = nelder_mead([&](const Eigen::VectorXd& t) { return cost(Vec3(t)); },
                                      Eigen::VectorXd(start), opt);
  return {r.value, Vec3(r.x)};
}

inline HausdorffResult hausdorff_distance(const SurfaceGeometry& geom, const WulffMesh& base) {
  return hausdorff_distance(geom.position, base.position);
}

}  // namespace wulffstab
