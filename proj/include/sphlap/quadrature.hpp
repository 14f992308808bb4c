#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sphlap {

/// Nodes and weights of a Gauss-Legendre rule on a finite interval.
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, summing to the interval length
  int order = 0;

  /// Affine image of this rule on [a, b]. The rule must live on [lo, hi].
  [[nodiscard]] QuadratureRule mapped(double lo, double hi, double a, double b) const {
    QuadratureRule out;
    out.order = order;
    out.nodes.resize(nodes.size());
    out.weights.resize(weights.size());
    const double scale = (b - a) / (hi - lo);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      out.nodes[i] = a + (nodes[i] - lo) * scale;
      out.weights[i] = weights[i] * scale;
    }
    return out;
  }
};

/// n-point Gauss-Legendre rule on [a, b].
///
/// Roots of P_n are found by Newton iteration from the Tricomi initial guess;
/// weights are 2 / ((1 - x^2) P_n'(x)^2).
[[nodiscard]] inline QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  QuadratureRule rule;
  rule.order = n;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const int m = (n + 1) / 2;
  // Returns P_n'(x) and writes P_n(x).
  auto legendre = [n](double x, double& pn) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    pn = p1;
    return n * (x * p1 - p0) / (x * x - 1.0);
  };
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double d = legendre(x, pn);
      const double dx = pn / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x, pn);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = mid - half * x;
    rule.nodes[hi] = mid + half * x;
    rule.weights[lo] = half * w;
    rule.weights[hi] = half * w;
  }
  return rule;
}

/// Order of the shared radial rule.
inline constexpr int kRadialOrder = 128;

/// The 128-node Gauss-Legendre rule on [0, pi], built once.
[[nodiscard]] inline const QuadratureRule& radial_rule() {
  static const QuadratureRule rule = gauss_legendre(kRadialOrder, 0.0, std::numbers::pi);
  return rule;
}

}  // namespace sphlap
