#pragma once

/// Experiment drivers: benchmark sweeps for the location and scale
/// estimators, the small-mix clustering simulation and the household study.

#include "sphlap/density.hpp"
#include "sphlap/io.hpp"
#include "sphlap/metrics.hpp"
#include "sphlap/mixture.hpp"
#include "sphlap/mle.hpp"
#include "sphlap/sampler.hpp"
#include "sphlap/sphere.hpp"
#include "sphlap/table.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace sphlap {

// ---------------------------------------------------------------------------
// Seeds and parallel repeats

/// Seed of repeat r under base seed s: s XOR r. Results never depend on how
/// repeats are scheduled across threads.
[[nodiscard]] constexpr std::uint64_t repeat_seed(std::uint64_t base, std::uint64_t r) noexcept {
  return base ^ r;
}

/// Independent seed for a named sub-stream (splitmix64 finalizer of seed + stream).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown by any body is rethrown.
inline void parallel_for(int n, const std::function<void(int)>& body, int threads = 0) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  int workers = threads > 0 ? threads : static_cast<int>(hw == 0 ? 1 : hw);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Sampling front end

enum class SamplerMethod { Rejection, MH, Oracle };

[[nodiscard]] inline std::string to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::Rejection: return "rejection";
    case SamplerMethod::MH: return "mh";
    case SamplerMethod::Oracle: return "oracle";
  }
  return "oracle";
}

[[nodiscard]] inline SamplerMethod parse_sampler_method(const std::string& s) {
  if (s == "rejection") return SamplerMethod::Rejection;
  if (s == "mh") return SamplerMethod::MH;
  if (s == "oracle") return SamplerMethod::Oracle;
  throw std::invalid_argument("unknown sampler method '" + s + "' (expected rejection, mh or oracle)");
}

[[nodiscard]] inline SampleResult draw_sl(const SLParams& params, int n, RngState& rng,
                                          SamplerMethod method, const MHOptions& mh = {}) {
  switch (method) {
    case SamplerMethod::Rejection: return sample_rejection(params, n, rng);
    case SamplerMethod::MH: return sample_mh(params, n, rng, mh);
    case SamplerMethod::Oracle: return sample_radial_oracle(params, n, rng);
  }
  throw std::logic_error("draw_sl: unreachable");
}

[[nodiscard]] inline std::string to_string(ScaleSolver s) {
  return s == ScaleSolver::NewtonExact ? "NewtonE" : "NewtonA";
}

// ---------------------------------------------------------------------------
// Benchmarks

/// Sweep grid; the defaults are the full published grid.
struct BenchConfig {
  std::vector<int> dims{5, 10, 20};
  std::vector<double> sigmas{0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0};
  std::vector<int> sizes{50, 100, 250, 500};
  int repeats = 100;
  std::uint64_t seed = 20240101;
  SamplerMethod method = SamplerMethod::Oracle;
  double eps = kDefaultEps;
  int max_iter = kDefaultMaxIter;
  int threads = 0;
};

namespace detail {

struct BenchCell {
  int p;
  double sigma0;
  int n;
};

inline std::vector<BenchCell> bench_cells(const BenchConfig& cfg) {
  std::vector<BenchCell> cells;
  for (int p : cfg.dims)
    for (double s : cfg.sigmas)
      for (int n : cfg.sizes) cells.push_back({p, s, n});
  return cells;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The data set of one benchmark repeat: n draws from SL(e_0, sigma0) on S^p.
inline std::vector<UnitVector> bench_sample(const BenchCell& c, std::uint64_t seed, SamplerMethod method) {
  RngState rng(seed);
  return draw_sl(SLParams(UnitVector::north_pole(c.p), c.sigma0), c.n, rng, method).points;
}

}  // namespace detail

struct LocationCellResult {
  int p = 0;
  double sigma0 = 0.0;
  int n = 0;
  double mean_error = 0.0;  // mean geodesic distance d(mu_hat, mu_0)
  double mean_time = 0.0;   // seconds per estimate (monotonic clock)
  int hit_data_point = 0;
  int not_converged = 0;
};

/// Weighted-median location accuracy over the grid.
[[nodiscard]] inline std::vector<LocationCellResult> bench_location(const BenchConfig& cfg) {
  const auto cells = detail::bench_cells(cfg);
  std::vector<LocationCellResult> out(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& c = cells[ci];
    std::vector<double> err(static_cast<std::size_t>(cfg.repeats));
    std::vector<double> secs(err.size());
    std::vector<int> hit(err.size());
    std::vector<int> unconverged(err.size());
    parallel_for(cfg.repeats, [&](int r) {
      const auto data = detail::bench_sample(c, repeat_seed(cfg.seed, static_cast<std::uint64_t>(r)), cfg.method);
      const auto t0 = std::chrono::steady_clock::now();
      const MedianResult m = frechet_median(WeightedSample(data), cfg.eps, cfg.max_iter);
      const auto rr = static_cast<std::size_t>(r);
      secs[rr] = detail::seconds_since(t0);
      err[rr] = geodesic_distance(m.mu_hat, UnitVector::north_pole(c.p));
      hit[rr] = m.hit_data_point ? 1 : 0;
      unconverged[rr] = m.converged ? 0 : 1;
    }, cfg.threads);
    auto& res = out[ci];
    res.p = c.p;
    res.sigma0 = c.sigma0;
    res.n = c.n;
    for (std::size_t r = 0; r < err.size(); ++r) {
      res.mean_error += err[r];
      res.mean_time += secs[r];
      res.hit_data_point += hit[r];
      res.not_converged += unconverged[r];
    }
    res.mean_error /= cfg.repeats;
    res.mean_time /= cfg.repeats;
  }
  return out;
}

struct ScaleCellResult {
  double sigma0 = 0.0;
  int p = 0;
  int n = 0;
  double error_exact = 0.0;   // mean |sigma_hat - sigma0| / sigma0, NewtonE
  double error_approx = 0.0;  // same, NewtonA
  double time_exact = 0.0;
  double time_approx = 0.0;
  /// max over repeats of |sigma_E - sigma_A| / sigma_E
  double max_solver_gap = 0.0;
  /// repeats whose mean distance admits no interior scale estimate
  int capped = 0;
};

/// Two-stage MLE scale accuracy over the grid. The median is computed once
/// per repeat; both Newton variants then solve for sigma from the same S.
[[nodiscard]] inline std::vector<ScaleCellResult> bench_scale(const BenchConfig& cfg) {
  const auto cells = detail::bench_cells(cfg);
  std::vector<ScaleCellResult> out(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& c = cells[ci];
    const auto R = static_cast<std::size_t>(cfg.repeats);
    std::vector<double> se(R), sa(R), te(R), ta(R);
    std::vector<int> capped(R);
    parallel_for(cfg.repeats, [&](int r) {
      const auto data = detail::bench_sample(c, repeat_seed(cfg.seed, static_cast<std::uint64_t>(r)), cfg.method);
      const MedianResult m = frechet_median(WeightedSample(data), cfg.eps, cfg.max_iter);
      double S = 0.0;
      for (const auto& x : data) S += geodesic_distance(x, m.mu_hat);
      S /= static_cast<double>(data.size());
      const auto rr = static_cast<std::size_t>(r);
      auto t0 = std::chrono::steady_clock::now();
      const ScaleResult e = estimate_sigma_newton_exact(S, c.p, S, cfg.eps, cfg.max_iter);
      te[rr] = detail::seconds_since(t0);
      t0 = std::chrono::steady_clock::now();
      const ScaleResult a = estimate_sigma_newton_approx(S, c.p, S, cfg.eps, cfg.max_iter);
      ta[rr] = detail::seconds_since(t0);
      se[rr] = e.sigma_hat;
      sa[rr] = a.sigma_hat;
      capped[rr] = (!e.converged || !a.converged) ? 1 : 0;
    }, cfg.threads);
    auto& res = out[ci];
    res.sigma0 = c.sigma0;
    res.p = c.p;
    res.n = c.n;
    for (std::size_t r = 0; r < R; ++r) {
      res.error_exact += std::abs(se[r] - c.sigma0) / c.sigma0;
      res.error_approx += std::abs(sa[r] - c.sigma0) / c.sigma0;
      res.time_exact += te[r];
      res.time_approx += ta[r];
      res.max_solver_gap = std::max(res.max_solver_gap, std::abs(se[r] - sa[r]) / se[r]);
      res.capped += capped[r];
    }
    const auto Rd = static_cast<double>(R);
    res.error_exact /= Rd;
    res.error_approx /= Rd;
    res.time_exact /= Rd;
    res.time_approx /= Rd;
  }
  return out;
}

/// Layout: dimension, sigma0, n, Weiszfeld accuracy/time, then the
/// gradient-descent baseline columns left empty.
[[nodiscard]] inline Table location_table(const std::vector<LocationCellResult>& cells) {
  Table t{{"p", "sigma0", "n", "weiszfeld_accuracy", "weiszfeld_time", "rgd_accuracy", "rgd_time",
           "hit_data_point", "not_converged"},
          {}};
  for (const auto& c : cells) {
    t.add_row({std::int64_t{c.p}, c.sigma0, std::int64_t{c.n}, c.mean_error, c.mean_time, {}, {},
               std::int64_t{c.hit_data_point}, std::int64_t{c.not_converged}});
  }
  return t;
}

/// Layout: sigma0, p, n, accuracy (NewtonE, NewtonA, two empty baselines),
/// time (same order), then solver agreement and capped-repeat count.
[[nodiscard]] inline Table scale_table(const std::vector<ScaleCellResult>& cells) {
  Table t{{"sigma0", "p", "n", "newtonE_accuracy", "newtonA_accuracy", "roptim_accuracy",
           "de_accuracy", "newtonE_time", "newtonA_time", "roptim_time", "de_time",
           "max_relative_gap", "capped"},
          {}};
  for (const auto& c : cells) {
    t.add_row({c.sigma0, std::int64_t{c.p}, std::int64_t{c.n}, c.error_exact, c.error_approx, {}, {},
               c.time_exact, c.time_approx, {}, {}, c.max_solver_gap, std::int64_t{c.capped}});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Clustering studies

struct LabeledData {
  std::vector<UnitVector> points;
  LabelVector labels;
};

/// Two equally weighted spherical-normal components on S^1:
/// (mu, lambda) = ([-0.251, -0.968], 10) and ([0.399, 0.917], 2).
struct SmallMixModel {
  UnitVector mu1{-0.251, -0.968};
  double lambda1 = 10.0;
  UnitVector mu2{0.399, 0.917};
  double lambda2 = 2.0;
};

/// n points; by default exactly n/2 per component (first half label 0),
/// otherwise component sizes are Binomial(n, 1/2).
[[nodiscard]] inline LabeledData generate_smallmix(RngState& rng, int n = 200, bool multinomial = false) {
  if (n < 0) throw std::invalid_argument("generate_smallmix: n must be >= 0");
  const SmallMixModel model;
  int n1 = n / 2;
  if (multinomial) {
    n1 = 0;
    for (int i = 0; i < n; ++i) n1 += rng.uniform() < 0.5 ? 1 : 0;
  }
  LabeledData out;
  out.points = sample_sn(model.mu1, model.lambda1, n1, rng);
  auto second = sample_sn(model.mu2, model.lambda2, n - n1, rng);
  out.points.insert(out.points.end(), std::make_move_iterator(second.begin()),
                    std::make_move_iterator(second.end()));
  out.labels.assign(static_cast<std::size_t>(n1), 0);
  out.labels.resize(static_cast<std::size_t>(n), 1);
  return out;
}

struct ClusterStudyRow {
  Assignment assignment = Assignment::Soft;
  int K = 0;
  ClusterIndices mean;
  /// Fraction of repeats reproducing the truth exactly (all three indices 1).
  double perfect_fraction = 0.0;
  int repeats = 0;
};

struct ClusterStudyConfig {
  std::vector<int> Ks{2, 3, 4};
  std::vector<Assignment> assignments{Assignment::Soft, Assignment::Hard};
  int repeats = 100;
  std::uint64_t seed = 20240101;
  EMOptions em{};
  int threads = 0;
};

/// For every (assignment, K): repeat r draws data from `make_data(seed_r)`
/// and fits EM initialized from derive_seed(seed_r, K); the indices of the
/// fitted labels against the truth are averaged over repeats.
template <class MakeData>
[[nodiscard]] std::vector<ClusterStudyRow> run_cluster_study(const ClusterStudyConfig& cfg,
                                                             MakeData&& make_data) {
  std::vector<ClusterStudyRow> rows;
  for (Assignment a : cfg.assignments) {
    for (int K : cfg.Ks) {
      std::vector<ClusterIndices> idx(static_cast<std::size_t>(cfg.repeats));
      parallel_for(cfg.repeats, [&](int r) {
        const std::uint64_t s = repeat_seed(cfg.seed, static_cast<std::uint64_t>(r));
        const LabeledData data = make_data(s);
        EMOptions em = cfg.em;
        em.assignment = a;
        em.seed = derive_seed(s, static_cast<std::uint64_t>(K));
        const EMResult fit = fit_em(data.points, K, em);
        idx[static_cast<std::size_t>(r)] = cluster_indices(data.labels, predict_labels(fit.gamma));
      }, cfg.threads);
      ClusterStudyRow row{a, K, {}, 0.0, cfg.repeats};
      for (const auto& v : idx) {
        row.mean.jaccard += v.jaccard;
        row.mean.rand += v.rand;
        row.mean.nmi += v.nmi;
        if (v.jaccard == 1.0 && v.rand == 1.0 && v.nmi == 1.0) row.perfect_fraction += 1.0;
      }
      const auto R = static_cast<double>(std::max(cfg.repeats, 1));
      row.mean.jaccard /= R;
      row.mean.rand /= R;
      row.mean.nmi /= R;
      row.perfect_fraction /= R;
      rows.push_back(row);
    }
  }
  return rows;
}

[[nodiscard]] inline std::vector<ClusterStudyRow> run_smallmix(const ClusterStudyConfig& cfg,
                                                               int n = 200, bool multinomial = false) {
  return run_cluster_study(cfg, [&](std::uint64_t s) {
    RngState rng(s);
    return generate_smallmix(rng, n, multinomial);
  });
}

/// Wide layout: one row per method, columns index x K. Baseline methods are
/// listed with empty cells.
[[nodiscard]] inline Table cluster_study_table(const std::vector<ClusterStudyRow>& rows,
                                               const std::vector<int>& Ks) {
  Table t;
  t.columns.emplace_back("method");
  for (const char* index : {"jaccard", "rand", "nmi"}) {
    for (int K : Ks) t.columns.push_back(std::string(index) + "_K" + std::to_string(K));
  }
  t.columns.emplace_back("repeats");
  std::vector<Assignment> seen;
  for (const auto& r : rows) {
    if (std::find(seen.begin(), seen.end(), r.assignment) == seen.end()) seen.push_back(r.assignment);
  }
  for (Assignment a : seen) {
    std::vector<Cell> row{std::string("moSL-") + to_string(a)};
    std::int64_t repeats = 0;
    for (int index = 0; index < 3; ++index) {
      for (int K : Ks) {
        Cell cell;
        for (const auto& r : rows) {
          if (r.assignment != a || r.K != K) continue;
          cell = index == 0 ? r.mean.jaccard : index == 1 ? r.mean.rand : r.mean.nmi;
          repeats = r.repeats;
        }
        row.push_back(cell);
      }
    }
    row.emplace_back(repeats);
    t.add_row(std::move(row));
  }
  for (const char* baseline : {"kmeans", "spkmeans", "movMF", "moSN"}) {
    std::vector<Cell> row(t.columns.size());
    row.front() = std::string(baseline);
    t.add_row(std::move(row));
  }
  return t;
}

/// Long layout with one row per (method, K), including the perfect-recovery rate.
[[nodiscard]] inline Table cluster_study_long_table(const std::vector<ClusterStudyRow>& rows) {
  Table t{{"method", "K", "jaccard", "rand", "nmi", "perfect_fraction", "repeats"}, {}};
  for (const auto& r : rows) {
    t.add_row({std::string("moSL-") + to_string(r.assignment), std::int64_t{r.K}, r.mean.jaccard,
               r.mean.rand, r.mean.nmi, r.perfect_fraction, std::int64_t{r.repeats}});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Household study

inline const std::vector<std::string> kHouseholdCategories{"food", "housing", "service"};
inline const std::string kHouseholdGroupColumn = "gender";

struct HouseholdData {
  LabeledData data;
  std::vector<std::string> ids;
  std::vector<std::string> group_names;
};

/// Selects the categories, l1-normalizes each record and maps it to the
/// sphere by element-wise square root; the group column becomes the truth.
[[nodiscard]] inline HouseholdData household_from_table(const CompositionalTable& table) {
  HouseholdData out;
  std::vector<std::string> groups;
  for (const auto& rec : table.records) {
    out.data.points.push_back(sqrt_transform(rec.values, rec.id));
    out.ids.push_back(rec.id);
    groups.push_back(rec.group.value_or(""));
  }
  out.data.labels = encode_groups(groups, &out.group_names);
  return out;
}

[[nodiscard]] inline HouseholdData load_household(const std::string& path,
                                                  const std::vector<std::string>& categories = kHouseholdCategories,
                                                  const std::string& group_column = kHouseholdGroupColumn) {
  return household_from_table(read_compositional_csv(path, categories, group_column));
}

/// Synthetic stand-in for the household data: two SL groups on S^2 with
/// scales 0.0643 (group 0) and 0.1426 (group 1), centred at the square-root
/// images of the profiles (0.1, 0.8, 0.1) and (0.8, 0.1, 0.1).
struct SyntheticHousehold {
  UnitVector mu0{std::sqrt(0.1), std::sqrt(0.8), std::sqrt(0.1)};
  double sigma0 = 0.0643;
  UnitVector mu1{std::sqrt(0.8), std::sqrt(0.1), std::sqrt(0.1)};
  double sigma1 = 0.1426;
  int per_group = 20;
};

[[nodiscard]] inline LabeledData generate_synthetic_household(RngState& rng,
                                                              const SyntheticHousehold& model = {}) {
  LabeledData out;
  out.points = sample_radial_oracle(SLParams(model.mu0, model.sigma0), model.per_group, rng).points;
  auto second = sample_radial_oracle(SLParams(model.mu1, model.sigma1), model.per_group, rng).points;
  out.points.insert(out.points.end(), std::make_move_iterator(second.begin()),
                    std::make_move_iterator(second.end()));
  out.labels.assign(static_cast<std::size_t>(model.per_group), 0);
  out.labels.resize(static_cast<std::size_t>(2 * model.per_group), 1);
  return out;
}

}  // namespace sphlap
