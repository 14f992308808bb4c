#pragma once

/// Random variate generation for the spherical Laplace law.
///
/// Three samplers are provided:
///  - sample_rejection: accept/reject with a spherical-normal proposal
///    (lambda = 1 / sigma); exact but degrades as sigma -> 0.
///  - sample_mh: random-walk Metropolis-Hastings with isotropic Gaussian
///    steps in the tangent space of the current state.
///  - sample_radial_oracle: exact draw by radial decomposition (tabulated
///    inverse CDF of the distance, uniform direction in T_mu S^p).

#include "sphlap/density.hpp"
#include "sphlap/sphere.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sphlap {

/// Seeded deterministic generator (64-bit Mersenne twister). Equal seeds give
/// identical streams on a given standard library.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return engine_; }

  /// Uniform on [0, 1).
  double uniform() { return unif_(engine_); }
  double normal() { return gauss_(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

struct SamplerReport {
  long long n_accepted = 0;
  long long n_proposed = 0;
  double acceptance_rate = 0.0;

  void finalize() {
    acceptance_rate = n_proposed > 0 ? static_cast<double>(n_accepted) / n_proposed : 0.0;
  }
};

struct SampleResult {
  std::vector<UnitVector> points;
  SamplerReport report;
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection threshold tau = exp(((r - 1)^2 - (pi - 1)^2) / (2 sigma)).
///
/// This is f_SL / (M f_SN) for the proposal SN(mu, 1 / sigma) and lies in (0, 1].
[[nodiscard]] inline double acceptance_threshold(double r, double sigma) {
  const double a = r - 1.0;
  const double b = kPi - 1.0;
  return std::exp((a * a - b * b) / (2.0 * sigma));
}

/// Tabulated inverse CDF of a density on [0, upper].
///
/// The mass of each of the `cells` equal-width cells is integrated with a
/// 4-point Gauss-Legendre rule; within a cell the CDF is linear.
class RadialTable {
 public:
  static constexpr int kDefaultCells = 4096;

  template <class LogDensity>
  RadialTable(LogDensity&& log_density, double upper, int cells = kDefaultCells)
      : upper_(upper), cdf_(static_cast<std::size_t>(cells) + 1, 0.0) {
    if (!(upper > 0.0) || cells < 1) {
      throw std::invalid_argument("RadialTable: empty support");
    }
    const QuadratureRule unit = gauss_legendre(4, 0.0, 1.0);
    const double h = upper / cells;
    std::vector<double> logs(static_cast<std::size_t>(cells) * unit.nodes.size());
    double top = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cells; ++c) {
      for (std::size_t q = 0; q < unit.nodes.size(); ++q) {
        const double r = (c + unit.nodes[q]) * h;
        const double lf = log_density(r);
        logs[static_cast<std::size_t>(c) * unit.nodes.size() + q] = lf;
        top = std::max(top, lf);
      }
    }
    if (!std::isfinite(top)) throw std::invalid_argument("RadialTable: density vanishes");
    for (int c = 0; c < cells; ++c) {
      double mass = 0.0;
      for (std::size_t q = 0; q < unit.nodes.size(); ++q) {
        mass += unit.weights[q] *
                std::exp(logs[static_cast<std::size_t>(c) * unit.nodes.size() + q] - top);
      }
      cdf_[static_cast<std::size_t>(c) + 1] = cdf_[static_cast<std::size_t>(c)] + mass;
    }
    const double total = cdf_.back();
    for (double& v : cdf_) v /= total;
    cdf_.back() = 1.0;
  }

  [[nodiscard]] double upper() const noexcept { return upper_; }
  [[nodiscard]] int cells() const noexcept { return static_cast<int>(cdf_.size()) - 1; }

  /// Piecewise-linear CDF of the tabulated law.
  [[nodiscard]] double cdf(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= upper_) return 1.0;
    const double h = upper_ / cells();
    const auto c = std::min(static_cast<std::size_t>(r / h), cdf_.size() - 2);
    const double t = r / h - static_cast<double>(c);
    return cdf_[c] + t * (cdf_[c + 1] - cdf_[c]);
  }

  [[nodiscard]] double quantile(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return 0.0;
    if (it == cdf_.end()) return upper_;
    const auto c = static_cast<std::size_t>(it - cdf_.begin()) - 1;
    const double t = (u - cdf_[c]) / (cdf_[c + 1] - cdf_[c]);
    return (static_cast<double>(c) + t) * (upper_ / cells());
  }

  double draw(RngState& rng) const { return quantile(rng.uniform()); }

 private:
  double upper_;
  std::vector<double> cdf_;
};

/// Uniformly distributed unit vector in T_mu S^p.
[[nodiscard]] inline Eigen::VectorXd uniform_tangent_direction(const UnitVector& mu,
                                                               RngState& rng) {
  for (;;) {
    const Eigen::VectorXd z = rng.normal_vector(mu.size());
    Eigen::VectorXd v = z - mu.coords().dot(z) * mu.coords();
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

/// The point at distance r from mu along the unit tangent direction `dir`.
[[nodiscard]] inline UnitVector point_at_distance(const UnitVector& mu, double r,
                                                  const Eigen::VectorXd& dir) {
  return UnitVector(std::cos(r) * mu.coords() + std::sin(r) * dir);
}

/// Radial law of SL(mu, sigma): density proportional to exp(-r / sigma) sin^{p-1}(r).
[[nodiscard]] inline RadialTable sl_radial_table(int p, double sigma,
                                                 int cells = RadialTable::kDefaultCells) {
  require_sphere_dim(p);
  require_positive_sigma(sigma);
  const double upper = std::min(kPi, sigma * (40.0 + 3.0 * (p - 1)));
  return RadialTable(
      [p, sigma](double r) {
        double lf = -r / sigma;
        if (p > 1) lf += (p - 1) * std::log(std::sin(r));
        return lf;
      },
      upper, cells);
}

/// Radial law of SN(mu, lambda): density proportional to exp(-lambda r^2 / 2) sin^{p-1}(r).
[[nodiscard]] inline RadialTable sn_radial_table(int p, double lambda,
                                                 int cells = RadialTable::kDefaultCells) {
  require_sphere_dim(p);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("SN concentration must be positive and finite");
  }
  const double upper = std::min(kPi, (std::sqrt(static_cast<double>(p)) + 10.0) / std::sqrt(lambda));
  return RadialTable(
      [p, lambda](double r) {
        double lf = -0.5 * lambda * r * r;
        if (p > 1) lf += (p - 1) * std::log(std::sin(r));
        return lf;
      },
      upper, cells);
}

/// Isotropic spherical normal SN(mu, lambda), sampled by radial decomposition.
class SNProposal {
 public:
  SNProposal(UnitVector mu, double lambda)
      : mu_(std::move(mu)), lambda_(lambda), table_(sn_radial_table(mu_.dim(), lambda)) {}

  [[nodiscard]] const UnitVector& mu() const noexcept { return mu_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }

  UnitVector draw(RngState& rng) const {
    const double r = table_.draw(rng);
    return point_at_distance(mu_, r, uniform_tangent_direction(mu_, rng));
  }

 private:
  UnitVector mu_;
  double lambda_;
  RadialTable table_;
};

[[nodiscard]] inline UnitVector sample_sn_proposal(const UnitVector& mu, double lambda,
                                                   RngState& rng) {
  return SNProposal(mu, lambda).draw(rng);
}

[[nodiscard]] inline std::vector<UnitVector> sample_sn(const UnitVector& mu, double lambda,
                                                       int n, RngState& rng) {
  const SNProposal proposal(mu, lambda);
  std::vector<UnitVector> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out.push_back(proposal.draw(rng));
  return out;
}

/// Proposals between acceptance-rate checks of the rejection sampler.
inline constexpr long long kRejectionCheckEvery = 100000;
/// Below this acceptance rate the rejection sampler gives up.
inline constexpr double kRejectionMinRate = 1e-4;

/// Rejection sampling with proposal SN(mu, 1 / sigma): draw u ~ U(0, 1) and
/// y ~ SN, accept y when u <= tau(d(mu, y), sigma).
///
/// Throws SamplerError when fewer than 1 in 10^4 proposals are accepted after
/// each block of 10^5 proposals; use sample_mh in that regime.
[[nodiscard]] inline SampleResult sample_rejection(const SLParams& params, int n,
                                                   RngState& rng) {
  if (n < 0) throw std::invalid_argument("sample_rejection: n must be >= 0");
  const SNProposal proposal(params.mu, 1.0 / params.sigma);
  SampleResult out;
  out.points.reserve(static_cast<std::size_t>(n));
  auto& rep = out.report;
  while (rep.n_accepted < n) {
    const double u = rng.uniform();
    UnitVector y = proposal.draw(rng);
    const double r = geodesic_distance(params.mu, y);
    const double tau = acceptance_threshold(r, params.sigma);
    if (!(tau >= 0.0 && tau <= 1.0 + 1e-12)) {
      throw std::logic_error("rejection sampler: ratio bound violated");
    }
    ++rep.n_proposed;
    if (u <= tau) {
      ++rep.n_accepted;
      out.points.push_back(std::move(y));
    }
    if (rep.n_proposed % kRejectionCheckEvery == 0 &&
        static_cast<double>(rep.n_accepted) < kRejectionMinRate * static_cast<double>(rep.n_proposed)) {
      rep.finalize();
      throw SamplerError("rejection sampler acceptance rate below 1e-4 (sigma too small); "
                         "use the MH sampler");
    }
  }
  rep.finalize();
  return out;
}

struct MHOptions {
  int burn_in = 1000;
  int thinning = 1;
  /// Standard deviation of the tangent-space Gaussian step; <= 0 means sigma.
  double proposal_stddev = 0.0;
};

/// Random-walk Metropolis-Hastings targeting SL(mu, sigma), started at mu.
///
/// The step y = Exp_x(zeta), zeta ~ N(0, s^2 I) on T_x S^p, has a density
/// depending only on d(x, y), so the acceptance ratio is f(y) / f(x).
[[nodiscard]] inline SampleResult sample_mh(const SLParams& params, int n, RngState& rng,
                                            const MHOptions& opts = {}) {
  if (n < 0 || opts.burn_in < 0 || opts.thinning < 1) {
    throw std::invalid_argument("sample_mh: invalid n, burn_in or thinning");
  }
  const double step = opts.proposal_stddev > 0.0 ? opts.proposal_stddev : params.sigma;
  SampleResult out;
  out.points.reserve(static_cast<std::size_t>(n));
  UnitVector x = params.mu;
  double dx = 0.0;
  const long long total =
      static_cast<long long>(opts.burn_in) + static_cast<long long>(n) * opts.thinning;
  for (long long t = 0; t < total; ++t) {
    const Eigen::VectorXd z = step * rng.normal_vector(x.size());
    UnitVector y = exp_map(x, project_to_tangent(x, z));
    const double dy = geodesic_distance(y, params.mu);
    const double u = rng.uniform();
    ++out.report.n_proposed;
    if (std::log(u) < (dx - dy) / params.sigma) {
      x = std::move(y);
      dx = dy;
      ++out.report.n_accepted;
    }
    const long long kept = t - opts.burn_in + 1;
    if (kept > 0 && kept % opts.thinning == 0) out.points.push_back(x);
  }
  out.report.finalize();
  return out;
}

/// Exact sampler by radial decomposition, with r drawn from a 4096-cell
/// inverse-CDF table of exp(-r / sigma) sin^{p-1}(r).
[[nodiscard]] inline SampleResult sample_radial_oracle(const SLParams& params, int n,
                                                       RngState& rng) {
  if (n < 0) throw std::invalid_argument("sample_radial_oracle: n must be >= 0");
  const RadialTable table = sl_radial_table(params.dim(), params.sigma);
  SampleResult out;
  out.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = table.draw(rng);
    out.points.push_back(point_at_distance(params.mu, r, uniform_tangent_direction(params.mu, rng)));
  }
  out.report.n_accepted = n;
  out.report.n_proposed = n;
  out.report.finalize();
  return out;
}

}  // namespace sphlap
