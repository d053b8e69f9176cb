#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wulffstab {

// Input outside an operation's domain (non-unit normal, x = 0, p <= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class EllipticityError : public std::runtime_error {
 public:
  EllipticityError(const Eigen::Vector3d& where, double min_eigenvalue)
      : std::runtime_error("integrand is not elliptic at nu = (" + std::to_string(where[0]) + ", " +
                           std::to_string(where[1]) + ", " + std::to_string(where[2]) +
                           "), smallest eigenvalue of A_F = " + std::to_string(min_eigenvalue)),
        where_(where),
        min_eigenvalue_(min_eigenvalue) {}

  const Eigen::Vector3d& where() const { return where_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  Eigen::Vector3d where_;
  double min_eigenvalue_;
};

// Radius pushes a node outside the tubular neighbourhood of the base.
class TubularError : public std::runtime_error {
 public:
  TubularError(double max_abs_radius, double reach)
      : std::runtime_error("radius leaves the tubular neighbourhood: max |u| = " +
                           std::to_string(max_abs_radius) + ", reach = " + std::to_string(reach)),
        max_abs_radius_(max_abs_radius) {}
  double max_abs_radius() const { return max_abs_radius_; }

 private:
  double max_abs_radius_;
};

// Degenerate local fit (valence too small, collinear neighbours).
class StencilError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The surface stopped being a graph over its base, or the fixed point diverged.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wulffstab
