#pragma once

/// Finite mixtures of spherical Laplace laws fit by EM.
///
/// E-step:  gamma_nk proportional to pi_k f(x_n | mu_k, sigma_k)   (log space)
/// M-step:  pi_k = sum_n gamma_nk / N,
///          mu_k = weighted Frechet median with weights gamma_.k,
///          sigma_k minimizes S_k / sigma + log C_p(sigma), S_k the weighted
///          mean distance to mu_k (pooled over components when homogeneous).

#include "sphlap/density.hpp"
#include "sphlap/metrics.hpp"
#include "sphlap/mle.hpp"
#include "sphlap/sampler.hpp"
#include "sphlap/sphere.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sphlap {

/// Columns whose total membership is below this are treated as empty.
inline constexpr double kEmptyComponentMass = 1e-10;
/// Mean distances are clamped into [kMinDispersion, pi - kMinDispersion]
/// before the scale update, so a component collapsed onto one point keeps a
/// finite (bracket-floor) scale.
inline constexpr double kMinDispersion = 1e-12;

struct SLMixture {
  std::vector<double> weights;
  std::vector<UnitVector> locations;
  std::vector<double> scales;
  bool homogeneous = false;

  [[nodiscard]] int K() const noexcept { return static_cast<int>(weights.size()); }
  [[nodiscard]] int dim() const { return locations.front().dim(); }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const {
    if (weights.empty()) throw std::invalid_argument("SLMixture: K must be >= 1");
    if (locations.size() != weights.size() || scales.size() != weights.size()) {
      throw std::invalid_argument("SLMixture: weights/locations/scales length mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("SLMixture: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("SLMixture: weights must sum to 1");
    }
    for (const auto& mu : locations) require_same_dim(mu, locations.front());
    for (double s : scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("SLMixture: scales must be positive");
    }
    if (homogeneous && std::any_of(scales.begin(), scales.end(),
                                   [&](double s) { return s != scales.front(); })) {
      throw std::invalid_argument("SLMixture: homogeneous model with unequal scales");
    }
  }
};

/// N x K row-stochastic matrix of memberships.
using MembershipMatrix = Eigen::MatrixXd;

enum class Assignment { Soft, Hard, Stochastic };

[[nodiscard]] inline std::string to_string(Assignment a) {
  switch (a) {
    case Assignment::Soft: return "soft";
    case Assignment::Hard: return "hard";
    case Assignment::Stochastic: return "stochastic";
  }
  return "soft";
}

[[nodiscard]] inline Assignment parse_assignment(const std::string& s) {
  if (s == "soft") return Assignment::Soft;
  if (s == "hard") return Assignment::Hard;
  if (s == "stochastic") return Assignment::Stochastic;
  throw std::invalid_argument("unknown assignment '" + s + "' (expected soft, hard or stochastic)");
}

struct EMOptions {
  Assignment assignment = Assignment::Soft;
  bool homogeneous = false;
  double eps_gamma = 1e-6;
  int max_iter = 200;
  std::uint64_t seed = 0;
  /// Tolerances and solver for the inner median and scale problems.
  FitOptions inner{};
  int kmeans_restarts = 10;
};

// ---------------------------------------------------------------------------
// E-step

struct EStepResult {
  MembershipMatrix gamma;
  /// sum_n log sum_k pi_k f(x_n | mu_k, sigma_k)
  double log_likelihood = 0.0;
};

[[nodiscard]] inline EStepResult e_step_with_likelihood(const std::vector<UnitVector>& data,
                                                        const SLMixture& model) {
  model.validate();
  const int K = model.K();
  const auto N = static_cast<Eigen::Index>(data.size());
  std::vector<double> log_norm(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    log_norm[static_cast<std::size_t>(k)] =
        log_normalizing_constant(model.dim(), model.scales[static_cast<std::size_t>(k)]);
  }
  EStepResult out{MembershipMatrix(N, K), 0.0};
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto& x = data[static_cast<std::size_t>(n)];
    require_same_dim(x, model.locations.front());
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double lw = std::log(model.weights[kk]) -
                        geodesic_distance(x, model.locations[kk]) / model.scales[kk] - log_norm[kk];
      out.gamma(n, k) = lw;
      top = std::max(top, lw);
    }
    if (!std::isfinite(top)) {
      throw std::runtime_error("e_step: all component densities underflowed for row " +
                               std::to_string(n));
    }
    double mass = 0.0;
    for (int k = 0; k < K; ++k) {
      out.gamma(n, k) = std::exp(out.gamma(n, k) - top);
      mass += out.gamma(n, k);
    }
    out.gamma.row(n) /= mass;
    out.log_likelihood += top + std::log(mass);
  }
  return out;
}

/// Posterior memberships gamma_nk, evaluated in log space with per-row max subtraction.
[[nodiscard]] inline MembershipMatrix e_step(const std::vector<UnitVector>& data,
                                             const SLMixture& model) {
  return e_step_with_likelihood(data, model).gamma;
}

/// Incomplete-data log-likelihood sum_n log sum_k pi_k f(x_n | mu_k, sigma_k).
[[nodiscard]] inline double mixture_log_likelihood(const std::vector<UnitVector>& data,
                                                   const SLMixture& model) {
  return e_step_with_likelihood(data, model).log_likelihood;
}

// ---------------------------------------------------------------------------
// Assignment heuristics

/// Row argmax; ties go to the lowest component index.
[[nodiscard]] inline LabelVector predict_labels(const MembershipMatrix& gamma) {
  LabelVector labels(static_cast<std::size_t>(gamma.rows()));
  for (Eigen::Index n = 0; n < gamma.rows(); ++n) {
    int best = 0;
    for (Eigen::Index k = 1; k < gamma.cols(); ++k) {
      if (gamma(n, k) > gamma(n, best)) best = static_cast<int>(k);
    }
    labels[static_cast<std::size_t>(n)] = best;
  }
  return labels;
}

[[nodiscard]] inline MembershipMatrix one_hot(const LabelVector& labels, int K) {
  MembershipMatrix g = MembershipMatrix::Zero(static_cast<Eigen::Index>(labels.size()), K);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= K) throw std::invalid_argument("one_hot: label out of range");
    g(static_cast<Eigen::Index>(n), labels[n]) = 1.0;
  }
  return g;
}

/// One-hot at the row maximum (lowest index on ties).
[[nodiscard]] inline MembershipMatrix apply_hard(const MembershipMatrix& gamma) {
  return one_hot(predict_labels(gamma), static_cast<int>(gamma.cols()));
}

/// One-hot at a component drawn from each row's categorical distribution.
[[nodiscard]] inline MembershipMatrix apply_stochastic(const MembershipMatrix& gamma, RngState& rng) {
  const auto K = gamma.cols();
  LabelVector labels(static_cast<std::size_t>(gamma.rows()));
  for (Eigen::Index n = 0; n < gamma.rows(); ++n) {
    const double u = rng.uniform() * gamma.row(n).sum();
    double acc = 0.0;
    Eigen::Index pick = K - 1;
    for (Eigen::Index k = 0; k < K; ++k) {
      acc += gamma(n, k);
      if (u < acc && gamma(n, k) > 0.0) {
        pick = k;
        break;
      }
    }
    // Never land on a zero-probability component through round-off.
    while (pick > 0 && gamma(n, pick) <= 0.0) --pick;
    labels[static_cast<std::size_t>(n)] = static_cast<int>(pick);
  }
  return one_hot(labels, static_cast<int>(K));
}

// ---------------------------------------------------------------------------
// M-step

struct MStepResult {
  SLMixture model;
  /// Components left at their previous parameters because their column mass
  /// fell below kEmptyComponentMass.
  std::vector<bool> frozen;
};

/// Maximizes the expected complete-data log-likelihood for fixed gamma.
///
/// `previous` supplies the parameters of frozen (empty) components; without
/// it an empty component is an error. When `previous` is given, a component's
/// new location is kept only if it does not raise the weighted median
/// objective relative to the previous location.
[[nodiscard]] inline MStepResult m_step(const std::vector<UnitVector>& data,
                                        const MembershipMatrix& gamma, bool homogeneous,
                                        const FitOptions& opts = {},
                                        const SLMixture* previous = nullptr) {
  const auto N = static_cast<Eigen::Index>(data.size());
  const auto K = static_cast<int>(gamma.cols());
  if (N == 0 || gamma.rows() != N || K < 1) {
    throw std::invalid_argument("m_step: membership matrix does not match data");
  }
  if (previous != nullptr && previous->K() != K) {
    throw std::invalid_argument("m_step: previous model has a different K");
  }
  const int p = data.front().dim();
  MStepResult out;
  out.model.homogeneous = homogeneous;
  out.frozen.assign(static_cast<std::size_t>(K), false);
  std::vector<double> dispersion(static_cast<std::size_t>(K), 0.0);  // sum_n gamma_nk d(x_n, mu_k)
  std::vector<double> mass(static_cast<std::size_t>(K), 0.0);
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    mass[kk] = gamma.col(k).sum();
    if (mass[kk] < kEmptyComponentMass) {
      if (previous == nullptr) {
        throw std::runtime_error("m_step: component " + std::to_string(k) +
                                 " is empty and has no previous parameters");
      }
      out.frozen[kk] = true;
      out.model.locations.push_back(previous->locations[kk]);
      continue;
    }
    std::vector<double> w(data.size());
    for (Eigen::Index n = 0; n < N; ++n) w[static_cast<std::size_t>(n)] = std::max(gamma(n, k), 0.0);
    const WeightedSample sample(data, std::move(w));
    UnitVector mu = frechet_median(sample, opts.eps, opts.max_iter).mu_hat;
    if (previous != nullptr &&
        median_objective(sample, previous->locations[kk]) < median_objective(sample, mu)) {
      mu = previous->locations[kk];
    }
    out.model.locations.push_back(std::move(mu));
    for (Eigen::Index n = 0; n < N; ++n) {
      const double g = gamma(n, k);
      if (g > 0.0) dispersion[kk] += g * geodesic_distance(data[static_cast<std::size_t>(n)], out.model.locations[kk]);
    }
  }
  double total_mass = 0.0;
  for (double m : mass) total_mass += m;
  for (int k = 0; k < K; ++k) {
    out.model.weights.push_back(mass[static_cast<std::size_t>(k)] / total_mass);
  }

  const auto solve_scale = [&](double S) {
    S = std::clamp(S, kMinDispersion, kPi - kMinDispersion);
    return estimate_sigma(S, p, S, opts.solver, opts.eps, opts.max_iter, opts.rel_step).sigma_hat;
  };
  if (homogeneous) {
    double pooled = 0.0;
    double pooled_mass = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (out.frozen[kk]) continue;
      pooled += dispersion[kk];
      pooled_mass += mass[kk];
    }
    out.model.scales.assign(static_cast<std::size_t>(K), solve_scale(pooled / pooled_mass));
  } else {
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.model.scales.push_back(out.frozen[kk] ? previous->scales[kk]
                                                : solve_scale(dispersion[kk] / mass[kk]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

struct KMeansRun {
  LabelVector labels;
  double wcss = std::numeric_limits<double>::infinity();
};

/// One k-means++ seeded Lloyd run on the rows of X.
inline KMeansRun kmeans_once(const Eigen::MatrixXd& X, int K, RngState& rng, int max_iter = 100) {
  const Eigen::Index N = X.rows();
  Eigen::MatrixXd C(K, X.cols());
  std::vector<double> d2(static_cast<std::size_t>(N), std::numeric_limits<double>::infinity());
  auto pick = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(N));
  C.row(0) = X.row(std::min(pick, N - 1));
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
      auto& d = d2[static_cast<std::size_t>(n)];
      d = std::min(d, (X.row(n) - C.row(k - 1)).squaredNorm());
      total += d;
    }
    Eigen::Index chosen = N - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index n = 0; n < N; ++n) {
        acc += d2[static_cast<std::size_t>(n)];
        if (u < acc) {
          chosen = n;
          break;
        }
      }
    } else {
      chosen = std::min(static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(N)), N - 1);
    }
    C.row(k) = X.row(chosen);
  }

  KMeansRun run;
  run.labels.assign(static_cast<std::size_t>(N), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index n = 0; n < N; ++n) {
      int best = 0;
      double best_d = (X.row(n) - C.row(0)).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double d = (X.row(n) - C.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      auto& label = run.labels[static_cast<std::size_t>(n)];
      if (label != best) {
        label = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, X.cols());
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index n = 0; n < N; ++n) {
      const int k = run.labels[static_cast<std::size_t>(n)];
      sums.row(k) += X.row(n);
      ++counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        C.row(k) = sums.row(k) / counts[static_cast<std::size_t>(k)];
        continue;
      }
      // Re-seed an empty cluster at the point farthest from its centroid.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index n = 0; n < N; ++n) {
        const double d = (X.row(n) - C.row(run.labels[static_cast<std::size_t>(n)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = n;
        }
      }
      C.row(k) = X.row(far);
      changed = true;
    }
    if (!changed) break;
  }
  run.wcss = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    run.wcss += (X.row(n) - C.row(run.labels[static_cast<std::size_t>(n)])).squaredNorm();
  }
  return run;
}

}  // namespace detail

/// Hard memberships from Euclidean k-means on the ambient coordinates
/// (k-means++ seeding, best within-cluster sum of squares over `restarts` runs).
[[nodiscard]] inline MembershipMatrix init_kmeans(const std::vector<UnitVector>& data, int K,
                                                  RngState& rng, int restarts = 10) {
  if (K < 1) throw std::invalid_argument("init_kmeans: K must be >= 1");
  if (static_cast<std::size_t>(K) > data.size()) {
    throw std::invalid_argument("init_kmeans: K = " + std::to_string(K) + " exceeds N = " +
                                std::to_string(data.size()));
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(data.size()), data.front().size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    require_same_dim(data[n], data.front());
    X.row(static_cast<Eigen::Index>(n)) = data[n].coords().transpose();
  }
  detail::KMeansRun best;
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    detail::KMeansRun run = detail::kmeans_once(X, K, rng);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  return one_hot(best.labels, K);
}

// ---------------------------------------------------------------------------
// EM driver

struct EMResult {
  SLMixture model;
  /// Posterior memberships under the final model.
  MembershipMatrix gamma;
  /// Incomplete-data log-likelihood of the initial model and after every iteration.
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  /// Components frozen as empty in the last M-step.
  std::vector<bool> frozen;
};

/// EM for a K-component SL mixture.
///
/// Initialization: k-means memberships followed by one M-step. Each iteration
/// applies the assignment heuristic to the current posteriors, runs the M-step,
/// and recomputes the posteriors; it stops once the Frobenius change of the
/// posterior matrix is below eps_gamma, or after max_iter iterations.
[[nodiscard]] inline EMResult fit_em(const std::vector<UnitVector>& data, int K,
                                     const EMOptions& opts = {}) {
  if (K < 1) throw std::invalid_argument("fit_em: K must be >= 1");
  if (static_cast<std::size_t>(K) > data.size()) {
    throw std::invalid_argument("fit_em: K = " + std::to_string(K) + " exceeds N = " +
                                std::to_string(data.size()));
  }
  if (!(opts.eps_gamma > 0.0)) throw std::invalid_argument("fit_em: eps_gamma must be positive");
  RngState rng(opts.seed);
  const MembershipMatrix init = init_kmeans(data, K, rng, opts.kmeans_restarts);
  MStepResult ms = m_step(data, init, opts.homogeneous, opts.inner);

  EMResult res;
  res.model = std::move(ms.model);
  res.frozen = std::move(ms.frozen);
  EStepResult es = e_step_with_likelihood(data, res.model);
  res.gamma = std::move(es.gamma);
  res.trace.push_back(es.log_likelihood);
  while (res.iterations < opts.max_iter) {
    MembershipMatrix used;
    switch (opts.assignment) {
      case Assignment::Soft: used = res.gamma; break;
      case Assignment::Hard: used = apply_hard(res.gamma); break;
      case Assignment::Stochastic: used = apply_stochastic(res.gamma, rng); break;
    }
    ms = m_step(data, used, opts.homogeneous, opts.inner, &res.model);
    res.model = std::move(ms.model);
    res.frozen = std::move(ms.frozen);
    es = e_step_with_likelihood(data, res.model);
    ++res.iterations;
    res.trace.push_back(es.log_likelihood);
    const double change = (es.gamma - res.gamma).norm();
    res.gamma = std::move(es.gamma);
    if (change < opts.eps_gamma) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace sphlap
