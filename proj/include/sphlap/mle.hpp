#pragma once

/// Maximum-likelihood estimation for the spherical Laplace law.
///
/// The log-likelihood L(mu, sigma) = -sum d(x_n, mu) / sigma - N log C_p(sigma)
/// separates: mu_hat is the Frechet median of the sample, and sigma_hat
/// minimizes g(sigma) = S / sigma + log C_p(sigma) with S the mean distance
/// to mu_hat.

#include "sphlap/density.hpp"
#include "sphlap/sphere.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sphlap {

inline constexpr double kDefaultEps = 1e-8;
inline constexpr int kDefaultMaxIter = 500;

/// Points on S^p with non-negative weights, normalized to sum to one.
class WeightedSample {
 public:
  /// Uniform weights.
  explicit WeightedSample(std::vector<UnitVector> points)
      : WeightedSample(std::move(points), std::vector<double>{}) {}

  WeightedSample(std::vector<UnitVector> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw std::invalid_argument("WeightedSample: no points");
    if (weights_.empty()) weights_.assign(points_.size(), 1.0);
    if (weights_.size() != points_.size()) {
      throw std::invalid_argument("WeightedSample: weights/points length mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      require_same_dim(points_[i], points_.front());
      if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
        throw std::invalid_argument("WeightedSample: weights must be finite and >= 0");
      }
      total += weights_[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("WeightedSample: weights sum to zero");
    for (double& w : weights_) w /= total;
  }

  [[nodiscard]] const std::vector<UnitVector>& points() const noexcept { return points_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] int dim() const noexcept { return points_.front().dim(); }

 private:
  std::vector<UnitVector> points_;
  std::vector<double> weights_;
};

struct MedianResult {
  UnitVector mu_hat;
  double objective = 0.0;  // sum_n w_n d(x_n, mu_hat)
  int iterations = 0;
  bool converged = false;
  bool hit_data_point = false;
};

/// F(mu) = sum_n w_n d(x_n, mu).
[[nodiscard]] inline double median_objective(const WeightedSample& sample, const UnitVector& mu) {
  double f = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.weights()[i] > 0.0) f += sample.weights()[i] * geodesic_distance(sample.points()[i], mu);
  }
  return f;
}

/// Weighted Frechet median by the geometric Weiszfeld iteration
///
///   mu <- Exp_mu( sum_n w_n^(t) Log_mu(x_n) / sum_n w_n^(t) ),  w_n^(t) = w_n / d(mu, x_n),
///
/// started from the normalized weighted extrinsic mean. Iteration stops when
/// the geodesic or chordal step is below eps, when the iterate lands on a data
/// point (the scaled weights are then undefined), or after max_iter steps.
/// Zero-weight points take no part in the iteration.
///
/// Throws std::domain_error if the extrinsic mean vanishes.
[[nodiscard]] inline MedianResult frechet_median(const WeightedSample& sample,
                                                 double eps = kDefaultEps,
                                                 int max_iter = kDefaultMaxIter) {
  if (!(eps > 0.0)) throw std::invalid_argument("frechet_median: eps must be positive");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.weights()[i] > 0.0) active.push_back(i);
  }
  const auto& pts = sample.points();
  const auto& w = sample.weights();

  const UnitVector& first = pts[active.front()];
  const bool all_identical = std::all_of(active.begin(), active.end(), [&](std::size_t i) {
    return geodesic_distance(pts[i], first) < kCoincident;
  });
  if (all_identical) {
    return MedianResult{first, 0.0, 0, true, false};
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(first.size());
  for (std::size_t i : active) mean += w[i] * pts[i].coords();
  if (mean.norm() < 1e-12) {
    throw std::domain_error("frechet_median: degenerate initialization (extrinsic mean is zero)");
  }

  MedianResult res{UnitVector(mean), 0.0, 0, false, false};
  std::vector<double> dist(pts.size(), 0.0);
  while (res.iterations < max_iter) {
    bool on_point = false;
    for (std::size_t i : active) {
      dist[i] = geodesic_distance(res.mu_hat, pts[i]);
      if (dist[i] < kCoincident) on_point = true;
    }
    if (on_point) {
      res.hit_data_point = true;
      break;
    }
    Eigen::VectorXd step = Eigen::VectorXd::Zero(first.size());
    double scale = 0.0;
    for (std::size_t i : active) {
      // The log map is undefined at the antipode; such a point exerts no pull.
      if (kPi - dist[i] < kAntipodalGap) continue;
      const double wi = w[i] / dist[i];
      step += wi * log_map(res.mu_hat, pts[i]).vec();
      scale += wi;
    }
    if (!(scale > 0.0)) break;
    UnitVector next = exp_map(res.mu_hat, project_to_tangent(res.mu_hat, step / scale));
    const double moved = geodesic_distance(res.mu_hat, next);
    const double chord = (res.mu_hat.coords() - next.coords()).norm();
    res.mu_hat = std::move(next);
    ++res.iterations;
    if (moved < eps || chord < eps) {
      res.converged = true;
      break;
    }
  }
  if (!res.hit_data_point) {
    for (std::size_t i : active) {
      if (geodesic_distance(res.mu_hat, pts[i]) < kCoincident) res.hit_data_point = true;
    }
  }
  res.objective = median_objective(sample, res.mu_hat);
  return res;
}

// ---------------------------------------------------------------------------
// Scale estimation

struct ScaleResult {
  double sigma_hat = 0.0;
  int iterations = 0;
  bool converged = false;
};

enum class ScaleSolver { NewtonExact, NewtonApprox };

/// Bracket searched by the safeguarded Newton solvers.
inline constexpr double kSigmaMin = 1e-6;
inline constexpr double kSigmaMax = 1e3;
/// Default relative finite-difference step for the approximate Newton update.
inline constexpr double kDefaultRelativeStep = 1e-5;

/// g(sigma) = S / sigma + log C_p(sigma).
[[nodiscard]] inline double scale_objective(double S, int p, double sigma) {
  require_positive_sigma(sigma);
  return S / sigma + log_normalizing_constant(p, sigma);
}

/// g'(sigma) = -S / sigma^2 + I_1 / I_0 = (E_sigma[r] - S) / sigma^2.
[[nodiscard]] inline double scale_objective_derivative(double S, int p, double sigma) {
  const RadialMoments m = radial_moments(p, sigma);
  return (m.mean - S) / (sigma * sigma);
}

/// G(S) = -S C_p(sigma) + sigma^2 C_p'(sigma); its root in S is E_sigma[r].
[[nodiscard]] inline double first_order_function(double S, int p, double sigma) {
  const double cp = normalizing_constant(p, sigma);
  const double dcp = std::exp(log_surface_area(p - 1)) * radial_integral(p, sigma, 1);
  return -S * cp + sigma * sigma * dcp;
}

inline void require_dispersion_in_range(double S) {
  if (!(S > 0.0) || !(S < kPi)) {
    throw std::domain_error("dispersion outside bijection range (0, pi)");
  }
}

namespace detail {

/// Newton step g'/g'' at sigma, plus the sign of g'.
struct NewtonStep {
  double gradient;
  double curvature;
};

inline NewtonStep exact_step(double S, int p, double sigma) {
  const RadialMoments m = radial_moments(p, sigma);
  const double s2 = sigma * sigma;
  const double i1_over_i0 = m.mean / s2;
  const double second = m.variance + m.mean * m.mean;
  const double i2_over_i0 = second / (s2 * s2) - 2.0 * m.mean / (s2 * sigma);
  const double grad = -S / s2 + i1_over_i0;
  const double curv = 2.0 * S / (s2 * sigma) + (i2_over_i0 - i1_over_i0 * i1_over_i0);
  return {grad, curv};
}

inline NewtonStep approx_step(double S, int p, double sigma, double rel_step) {
  const double h = rel_step * sigma;
  const double gp = scale_objective(S, p, sigma + h);
  const double g0 = scale_objective(S, p, sigma);
  const double gm = scale_objective(S, p, sigma - h);
  return {(gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h)};
}

/// Newton iteration on g'(sigma) = 0 kept inside a sign-change bracket.
/// Steps that leave the bracket or meet non-positive curvature are replaced
/// by a geometric bisection of the bracket.
template <class StepFn>
ScaleResult safeguarded_newton(double sigma0, double eps, int max_iter, StepFn&& step_at) {
  double lo = kSigmaMin;
  double hi = kSigmaMax;
  ScaleResult res;
  if (step_at(hi).gradient <= 0.0) {
    // g still decreasing at the upper bracket: no interior minimizer.
    res.sigma_hat = hi;
    return res;
  }
  if (step_at(lo).gradient >= 0.0) {
    res.sigma_hat = lo;
    return res;
  }
  double sigma = std::clamp(sigma0, lo, hi);
  while (res.iterations < max_iter) {
    const NewtonStep s = step_at(sigma);
    ++res.iterations;
    if (s.gradient < 0.0) lo = std::max(lo, sigma);
    if (s.gradient > 0.0) hi = std::min(hi, sigma);
    if (s.gradient == 0.0) {
      res.converged = true;
      break;
    }
    double next = sigma - s.gradient / s.curvature;
    bool bisected = false;
    if (!(s.curvature > 0.0) || !std::isfinite(next) || next <= lo || next >= hi) {
      // Halve or double sigma towards the root while that stays inside the
      // bracket, otherwise bisect the bracket geometrically.
      next = s.gradient > 0.0 ? 0.5 * sigma : 2.0 * sigma;
      if (next <= lo || next >= hi) next = std::sqrt(lo * hi);
      bisected = true;
    }
    const double change = std::abs(next - sigma);
    sigma = next;
    if (change < eps && (!bisected || hi - lo < eps)) {
      res.converged = true;
      break;
    }
  }
  res.sigma_hat = sigma;
  return res;
}

}  // namespace detail

/// Newton-Raphson for sigma_hat with the exact update
///
///   sigma <- sigma - (-S/sigma^2 + I_1/I_0) / (2S/sigma^3 + (I_0 I_2 - I_1^2) / I_0^2).
///
/// Iterates stay inside [1e-6, 1e3]; a step leaving the current sign-change
/// bracket falls back to bisection. If g' has no sign change on the bracket
/// (S at or beyond the uniform-law mean distance pi/2) the bracket end is
/// returned with converged = false.
[[nodiscard]] inline ScaleResult estimate_sigma_newton_exact(double S, int p, double sigma0,
                                                             double eps = kDefaultEps,
                                                             int max_iter = kDefaultMaxIter) {
  require_dispersion_in_range(S);
  require_sphere_dim(p);
  return detail::safeguarded_newton(sigma0, eps, max_iter,
                                    [&](double s) { return detail::exact_step(S, p, s); });
}

/// Newton-Raphson for sigma_hat with centered finite differences of g:
///
///   sigma <- sigma - (h/2) (g(sigma+h) - g(sigma-h)) / (g(sigma+h) - 2 g(sigma) + g(sigma-h)),
///
/// with h = rel_step * sigma at every iterate.
[[nodiscard]] inline ScaleResult estimate_sigma_newton_approx(double S, int p, double sigma0,
                                                              double eps = kDefaultEps,
                                                              int max_iter = kDefaultMaxIter,
                                                              double rel_step = kDefaultRelativeStep) {
  require_dispersion_in_range(S);
  require_sphere_dim(p);
  if (!(rel_step > 0.0 && rel_step < 0.5)) {
    throw std::invalid_argument("estimate_sigma_newton_approx: rel_step must be in (0, 0.5)");
  }
  return detail::safeguarded_newton(
      sigma0, eps, max_iter, [&](double s) { return detail::approx_step(S, p, s, rel_step); });
}

[[nodiscard]] inline ScaleResult estimate_sigma(double S, int p, double sigma0, ScaleSolver solver,
                                                double eps = kDefaultEps,
                                                int max_iter = kDefaultMaxIter,
                                                double rel_step = kDefaultRelativeStep) {
  return solver == ScaleSolver::NewtonExact
             ? estimate_sigma_newton_exact(S, p, sigma0, eps, max_iter)
             : estimate_sigma_newton_approx(S, p, sigma0, eps, max_iter, rel_step);
}

// ---------------------------------------------------------------------------
// Two-stage MLE

struct FitOptions {
  double eps = kDefaultEps;
  int max_iter = kDefaultMaxIter;
  ScaleSolver solver = ScaleSolver::NewtonExact;
  double rel_step = kDefaultRelativeStep;
};

struct FitResult {
  SLParams params;
  double log_likelihood;
  double mean_distance;  // S
  MedianResult median;
  ScaleResult scale;
  /// True when the sample is not verified to lie in a geodesic ball of radius
  /// pi/4 around mu_hat, so uniqueness of the estimate is not guaranteed.
  bool uniqueness_unverified;
};

/// L(mu, sigma) = -sum_n d(x_n, mu) / sigma - N log C_p(sigma).
[[nodiscard]] inline double log_likelihood(const std::vector<UnitVector>& points,
                                           const SLParams& params) {
  double sum = 0.0;
  for (const auto& x : points) sum += geodesic_distance(x, params.mu);
  return -sum / params.sigma -
         static_cast<double>(points.size()) * log_normalizing_constant(params.dim(), params.sigma);
}

/// mu_hat = Frechet median (uniform weights), S = mean d(x_n, mu_hat),
/// sigma_hat = argmin g via Newton started at sigma = S.
[[nodiscard]] inline FitResult fit_mle(const std::vector<UnitVector>& points,
                                       const FitOptions& opts = {}) {
  if (points.size() < 2) throw std::invalid_argument("fit_mle: need at least 2 points");
  const bool zero_dispersion = std::all_of(points.begin(), points.end(), [&](const UnitVector& x) {
    return geodesic_distance(x, points.front()) < 1e-12;
  });
  if (zero_dispersion) {
    throw std::domain_error("fit_mle: zero dispersion, sigma_hat undefined");
  }
  const WeightedSample sample(points);
  MedianResult med = frechet_median(sample, opts.eps, opts.max_iter);
  double S = 0.0;
  double far = 0.0;
  for (const auto& x : points) {
    const double d = geodesic_distance(x, med.mu_hat);
    S += d;
    far = std::max(far, d);
  }
  S /= static_cast<double>(points.size());
  const ScaleResult scale = estimate_sigma(S, sample.dim(), S, opts.solver, opts.eps,
                                           opts.max_iter, opts.rel_step);
  SLParams params(med.mu_hat, scale.sigma_hat);
  const double ll = log_likelihood(points, params);
  return FitResult{std::move(params), ll, S, std::move(med), scale, !(far < kPi / 4.0)};
}

}  // namespace sphlap
