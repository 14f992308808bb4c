#pragma once

/// Riemannian primitives on the unit hypersphere S^p embedded in R^{p+1}.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace sphlap {

inline constexpr double kPi = std::numbers::pi;

/// Below this norm a tangent vector is treated as zero by exp_map.
inline constexpr double kZeroTangent = 1e-14;
/// Below this distance two points are treated as coincident by log_map.
inline constexpr double kCoincident = 1e-14;
/// log_map refuses targets closer than this to the antipode.
inline constexpr double kAntipodalGap = 1e-12;

/// A point on S^p. Coordinates are re-normalized on construction unless their
/// norm is already 1 to within a few ulps, which makes normalization
/// idempotent (a written-then-read point keeps its exact coordinates).
class UnitVector {
 public:
  explicit UnitVector(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) {
      throw std::invalid_argument("UnitVector needs at least 2 coordinates");
    }
    const double norm = coords_.norm();
    if (!std::isfinite(norm) || norm <= 0.0) {
      throw std::invalid_argument("UnitVector: zero or non-finite coordinates");
    }
    if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) coords_ /= norm;
  }

  UnitVector(std::initializer_list<double> values)
      : UnitVector(from_list(values)) {}

  [[nodiscard]] const Eigen::VectorXd& coords() const noexcept { return coords_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return coords_.size(); }
  /// Intrinsic dimension p of the sphere S^p this point lives on.
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  [[nodiscard]] double operator[](Eigen::Index i) const { return coords_[i]; }

  /// The first basis vector e_0 of R^{p+1}, a convenient north pole.
  static UnitVector north_pole(int p) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p + 1);
    v[0] = 1.0;
    return UnitVector(std::move(v));
  }

 private:
  static Eigen::VectorXd from_list(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
  }

  Eigen::VectorXd coords_;
};

/// A vector in the tangent space T_base S^p.
class TangentVector {
 public:
  TangentVector(UnitVector base, Eigen::VectorXd vec)
      : base_(std::move(base)), vec_(std::move(vec)) {
    if (vec_.size() != base_.size()) {
      throw std::invalid_argument("TangentVector: dimension mismatch");
    }
    const double tol = 1e-10 * std::max(1.0, vec_.norm());
    if (std::abs(base_.coords().dot(vec_)) > tol) {
      throw std::invalid_argument("TangentVector: vector not orthogonal to base");
    }
  }

  [[nodiscard]] const UnitVector& base() const noexcept { return base_; }
  [[nodiscard]] const Eigen::VectorXd& vec() const noexcept { return vec_; }
  [[nodiscard]] double norm() const { return vec_.norm(); }

 private:
  UnitVector base_;
  Eigen::VectorXd vec_;
};

inline void require_same_dim(const UnitVector& x, const UnitVector& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  }
}

/// Great-circle distance in [0, pi].
///
/// Evaluated as 2 atan2(|x - y|, |x + y|), which equals arccos<x, y> but keeps
/// full relative precision near 0 and pi where arccos loses half the digits.
[[nodiscard]] inline double geodesic_distance(const UnitVector& x, const UnitVector& y) {
  require_same_dim(x, y);
  const double chord = (x.coords() - y.coords()).norm();
  const double sum = (x.coords() + y.coords()).norm();
  return 2.0 * std::atan2(chord, sum);
}

/// Proj_x(z) = z - <x, z> x.
[[nodiscard]] inline TangentVector project_to_tangent(const UnitVector& x,
                                                      const Eigen::VectorXd& z) {
  if (z.size() != x.size()) {
    throw std::invalid_argument("project_to_tangent: dimension mismatch");
  }
  Eigen::VectorXd v = z - x.coords().dot(z) * x.coords();
  // One correction pass removes the residual component left by round-off.
  v -= x.coords().dot(v) * x.coords();
  return TangentVector(x, std::move(v));
}

/// Exp_x(u) = cos|u| x + sin|u| u / |u|.
[[nodiscard]] inline UnitVector exp_map(const UnitVector& x, const TangentVector& u) {
  require_same_dim(x, u.base());
  if ((x.coords() - u.base().coords()).norm() > 1e-12) {
    throw std::invalid_argument("exp_map: tangent vector is based at a different point");
  }
  const double t = u.norm();
  if (t < kZeroTangent) return x;
  return UnitVector(std::cos(t) * x.coords() + (std::sin(t) / t) * u.vec());
}

/// Log_x(y) = d(x, y) Proj_x(y - x) / |Proj_x(y - x)|.
///
/// Throws std::domain_error when y is (numerically) antipodal to x.
[[nodiscard]] inline TangentVector log_map(const UnitVector& x, const UnitVector& y) {
  const double d = geodesic_distance(x, y);
  if (d < kCoincident) {
    return TangentVector(x, Eigen::VectorXd::Zero(x.size()));
  }
  if (kPi - d < kAntipodalGap) {
    throw std::domain_error("log_map undefined for antipodal points");
  }
  // Proj_x(y - x) = y - <x, y> x
  Eigen::VectorXd v = y.coords() - x.coords().dot(y.coords()) * x.coords();
  v -= x.coords().dot(v) * x.coords();
  const double n = v.norm();
  return TangentVector(x, (d / n) * v);
}

}  // namespace sphlap
