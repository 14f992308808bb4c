#pragma once

/// Spherical Laplace density f(x | mu, sigma) = exp(-d(x, mu) / sigma) / C_p(sigma)
/// and the radial integrals behind its normalizing constant.

#include "sphlap/quadrature.hpp"
#include "sphlap/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sphlap {

/// Location and scale of a spherical Laplace law.
struct SLParams {
  UnitVector mu;
  double sigma;

  SLParams(UnitVector location, double scale) : mu(std::move(location)), sigma(scale) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("SLParams: sigma must be positive and finite");
    }
  }

  [[nodiscard]] int dim() const noexcept { return mu.dim(); }
};

inline void require_positive_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::domain_error("sigma must be positive and finite, got " + std::to_string(sigma));
  }
}

inline void require_sphere_dim(int p) {
  if (p < 1) throw std::invalid_argument("sphere dimension p must be >= 1");
}

/// log of the surface area of S^q, A_q = 2 pi^{(q+1)/2} / Gamma((q+1)/2).
[[nodiscard]] inline double log_surface_area(int q) {
  if (q < 0) throw std::invalid_argument("surface_area: q must be >= 0");
  const double h = 0.5 * (q + 1);
  return std::log(2.0) + h * std::log(kPi) - std::lgamma(h);
}

[[nodiscard]] inline double surface_area(int q) { return std::exp(log_surface_area(q)); }

namespace detail {

inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Radial quadrature nodes for the integrand exp(-r / sigma) sin^{p-1}(r).
///
/// For small sigma the integrand is a boundary layer of width ~sigma at r = 0,
/// so [0, pi] is truncated where the Gamma-like tail is below double precision
/// (r = sigma (40 + 3 (p - 1))) and split into panels of width <= 40 sigma,
/// each carrying the 128-node rule. For sigma >~ 0.08 this is the single
/// 128-node rule on [0, pi].
struct RadialGrid {
  std::vector<double> r;
  std::vector<double> log_terms;  // log(weight) - r / sigma + (p - 1) log sin r
};

inline RadialGrid radial_grid(int p, double sigma) {
  const double reach = sigma * (40.0 + 3.0 * (p - 1));
  const double upper = std::min(kPi, reach);
  const double panel_width = 40.0 * sigma;
  const int panels = std::clamp(static_cast<int>(std::ceil(upper / panel_width)), 1, 32);
  const QuadratureRule& base = radial_rule();
  RadialGrid grid;
  grid.r.reserve(base.nodes.size() * static_cast<std::size_t>(panels));
  grid.log_terms.reserve(grid.r.capacity());
  const double width = upper / panels;
  for (int k = 0; k < panels; ++k) {
    const QuadratureRule rule = base.mapped(0.0, kPi, k * width, (k + 1) * width);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double r = rule.nodes[i];
      double lt = std::log(rule.weights[i]) - r / sigma;
      if (p > 1) lt += (p - 1) * std::log(std::sin(r));
      grid.r.push_back(r);
      grid.log_terms.push_back(lt);
    }
  }
  return grid;
}

}  // namespace detail

/// Radial law with density proportional to exp(-r / sigma) sin^{p-1}(r) on [0, pi],
/// summarized by log I_0 and the first two central moments of r.
struct RadialMoments {
  double log_i0 = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

[[nodiscard]] inline RadialMoments radial_moments(int p, double sigma) {
  require_sphere_dim(p);
  require_positive_sigma(sigma);
  const detail::RadialGrid grid = detail::radial_grid(p, sigma);
  RadialMoments out;
  out.log_i0 = detail::logsumexp(grid.log_terms);
  double mean = 0.0;
  std::vector<double> w(grid.r.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(grid.log_terms[i] - out.log_i0);
    mean += w[i] * grid.r[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double dr = grid.r[i] - mean;
    var += w[i] * dr * dr;
  }
  out.mean = mean;
  out.variance = var;
  return out;
}

/// Mean geodesic distance E[d(x, mu)] under SL(mu, sigma) on S^p.
[[nodiscard]] inline double expected_distance(int p, double sigma) {
  return radial_moments(p, sigma).mean;
}

/// The radial integrals I_0, I_1 = dI_0/dsigma and I_2 = d^2 I_0/dsigma^2.
///
/// All three come from the same quadrature nodes:
///   I_1 / I_0 = E[r] / sigma^2,   I_2 / I_0 = E[r^2] / sigma^4 - 2 E[r] / sigma^3.
[[nodiscard]] inline double radial_integral(int p, double sigma, int order) {
  if (order < 0 || order > 2) {
    throw std::invalid_argument("radial_integral: order must be 0, 1 or 2");
  }
  const RadialMoments m = radial_moments(p, sigma);
  const double i0 = std::exp(m.log_i0);
  if (order == 0) return i0;
  const double s2 = sigma * sigma;
  if (order == 1) return i0 * m.mean / s2;
  const double second = m.variance + m.mean * m.mean;
  return i0 * (second / (s2 * s2) - 2.0 * m.mean / (s2 * sigma));
}

/// log C_p(sigma) = log A_{p-1} + log I_0(sigma), evaluated in log space.
[[nodiscard]] inline double log_normalizing_constant(int p, double sigma) {
  return log_surface_area(p - 1) + radial_moments(p, sigma).log_i0;
}

[[nodiscard]] inline double normalizing_constant(int p, double sigma) {
  return std::exp(log_normalizing_constant(p, sigma));
}

/// log f(x | mu, sigma) = -d(x, mu) / sigma - log C_p(sigma).
[[nodiscard]] inline double log_density(const UnitVector& x, const SLParams& params) {
  return -geodesic_distance(x, params.mu) / params.sigma -
         log_normalizing_constant(params.dim(), params.sigma);
}

[[nodiscard]] inline double density(const UnitVector& x, const SLParams& params) {
  return std::exp(log_density(x, params));
}

}  // namespace sphlap
