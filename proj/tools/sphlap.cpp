// Command-line driver: sampling, fitting, clustering and the experiment suites.

#include "sphlap/sphlap.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace sphlap;

constexpr std::uint64_t kDefaultSeed = 20240101;

/// Flags shared by every subcommand.
struct Common {
  std::uint64_t seed = kDefaultSeed;
  double eps = kDefaultEps;
  int max_iter = 0;  // 0: the command's own default
  std::string output = "-";
  std::string format;

  [[nodiscard]] bool to_stdout() const { return output == "-" || output.empty(); }
  [[nodiscard]] bool json_format() const { return format == "json"; }
  [[nodiscard]] int iterations(int fallback) const { return max_iter > 0 ? max_iter : fallback; }

  [[nodiscard]] json to_json() const {
    return {{"seed", seed}, {"eps", eps}, {"max_iter", max_iter}, {"output", output}, {"format", format}};
  }
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--eps", c.eps, "Convergence tolerance of the median and scale solvers")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", c.max_iter, "Iteration cap of the command's main loop (0 = default)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--output,-o", c.output, "Output path ('-' for standard output)")->capture_default_str();
  cmd->add_option("--format", c.format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));
}

/// Writes `body` to the output path or standard output.
template <class Writer>
void emit(const Common& c, Writer&& body) {
  if (c.to_stdout()) {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + c.output + "' for writing");
  body(out);
  if (!out) throw std::runtime_error("failed writing '" + c.output + "'");
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

/// Metadata accompanying a CSV artifact: `<output>.json` next to a file, or
/// standard error when the CSV goes to standard output.
void emit_sidecar(const Common& c, const json& meta) {
  if (c.to_stdout()) {
    std::cerr << meta.dump(2) << '\n';
  } else {
    write_json_file(c.output + ".json", meta);
  }
}

void emit_table(const Common& c, const Table& table, const json& config) {
  if (c.json_format()) {
    emit(c, [&](std::ostream& os) { os << json{{"config", config}, {"rows", to_json(table)}}.dump(2) << '\n'; });
  } else {
    emit(c, [&](std::ostream& os) { write_csv(os, table); });
    emit_sidecar(c, json{{"config", config}});
  }
}

json mle_report(const FitResult& f) {
  return {{"mu_hat", to_json(f.params.mu)},
          {"sigma_hat", f.params.sigma},
          {"log_likelihood", f.log_likelihood},
          {"mean_distance", f.mean_distance},
          {"median_iterations", f.median.iterations},
          {"median_converged", f.median.converged},
          {"hit_data_point", f.median.hit_data_point},
          {"median_objective", f.median.objective},
          {"scale_iterations", f.scale.iterations},
          {"scale_converged", f.scale.converged},
          {"uniqueness_unverified", f.uniqueness_unverified}};
}

std::vector<Assignment> parse_assignments(const std::vector<std::string>& names) {
  std::vector<Assignment> out;
  for (const auto& n : names) out.push_back(parse_assignment(n));
  return out;
}

json assignments_json(const std::vector<Assignment>& as) {
  json arr = json::array();
  for (auto a : as) arr.push_back(to_string(a));
  return arr;
}

ScaleSolver parse_solver(const std::string& s) {
  if (s == "newtonE") return ScaleSolver::NewtonExact;
  if (s == "newtonA") return ScaleSolver::NewtonApprox;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

std::vector<UnitVector> load_points(const std::string& path, std::optional<LabelVector>* labels) {
  PointTable t = read_points_csv(path);
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << '\n';
  if (labels != nullptr) *labels = std::move(t.labels);
  return std::move(t.points);
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  Common common;
  int p = 2;
  double sigma = 1.0;
  std::vector<double> mu;
  int n = 100;
  std::string method = "rejection";
  int burn_in = 1000;
  int thinning = 1;
  double proposal_sd = 0.0;
};

void run_sample(const SampleArgs& a) {
  Eigen::VectorXd mu_coords;
  if (a.mu.empty()) {
    mu_coords = UnitVector::north_pole(a.p).coords();
  } else {
    if (static_cast<int>(a.mu.size()) != a.p + 1) {
      throw std::invalid_argument("--mu needs p + 1 = " + std::to_string(a.p + 1) + " coordinates");
    }
    mu_coords = Eigen::Map<const Eigen::VectorXd>(a.mu.data(), static_cast<Eigen::Index>(a.mu.size()));
  }
  const SLParams params(UnitVector(mu_coords), a.sigma);
  const SamplerMethod method = parse_sampler_method(a.method);
  MHOptions mh;
  mh.burn_in = a.burn_in;
  mh.thinning = a.thinning;
  mh.proposal_stddev = a.proposal_sd;
  RngState rng(a.common.seed);
  const SampleResult res = draw_sl(params, a.n, rng, method, mh);

  json config = a.common.to_json();
  config.update({{"command", "sample"},
                 {"p", a.p},
                 {"sigma", a.sigma},
                 {"mu", to_json(params.mu)},
                 {"n", a.n},
                 {"method", a.method},
                 {"burn_in", a.burn_in},
                 {"thinning", a.thinning},
                 {"proposal_sd", a.proposal_sd}});
  const json report{{"n_accepted", res.report.n_accepted},
                    {"n_proposed", res.report.n_proposed},
                    {"acceptance_rate", res.report.acceptance_rate}};
  if (a.common.json_format()) {
    json pts = json::array();
    for (const auto& x : res.points) pts.push_back(to_json(x));
    emit(a.common, [&](std::ostream& os) {
      os << json{{"config", config}, {"report", report}, {"points", pts}}.dump(2) << '\n';
    });
  } else {
    emit(a.common, [&](std::ostream& os) { write_points_csv(os, a.p, res.points); });
    emit_sidecar(a.common, json{{"config", config}, {"report", report}});
  }
}

struct FitArgs {
  Common common;
  std::string input;
  std::string solver = "newtonE";
  double h_rel = kDefaultRelativeStep;
};

void run_fit(const FitArgs& a) {
  const auto points = load_points(a.input, nullptr);
  FitOptions opts;
  opts.eps = a.common.eps;
  opts.max_iter = a.common.iterations(kDefaultMaxIter);
  opts.solver = parse_solver(a.solver);
  opts.rel_step = a.h_rel;
  const FitResult f = fit_mle(points, opts);
  if (f.uniqueness_unverified) {
    std::cerr << "warning: sample not contained in a ball of radius pi/4 around mu_hat; "
                 "uniqueness of the estimate is not guaranteed\n";
  }
  json config = a.common.to_json();
  config.update({{"command", "fit"}, {"input", a.input}, {"solver", a.solver}, {"h_rel", a.h_rel}, {"n", points.size()}});
  json report = mle_report(f);
  if (a.common.json_format()) {
    report["config"] = config;
    emit(a.common, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  } else {
    Table t{{"sigma_hat", "log_likelihood", "mean_distance", "median_iterations", "median_converged",
             "scale_iterations", "scale_converged"},
            {}};
    for (Eigen::Index j = 0; j < f.params.mu.size(); ++j) t.columns.push_back("mu" + std::to_string(j));
    std::vector<Cell> row{f.params.sigma, f.log_likelihood, f.mean_distance,
                          std::int64_t{f.median.iterations}, std::int64_t{f.median.converged ? 1 : 0},
                          std::int64_t{f.scale.iterations}, std::int64_t{f.scale.converged ? 1 : 0}};
    for (Eigen::Index j = 0; j < f.params.mu.size(); ++j) row.emplace_back(f.params.mu[j]);
    t.add_row(std::move(row));
    emit(a.common, [&](std::ostream& os) { write_csv(os, t); });
    emit_sidecar(a.common, json{{"config", config}, {"report", report}});
  }
}

struct EMArgs {
  std::string assignment = "soft";
  bool homogeneous = false;
  double eps_gamma = 1e-6;
  std::string solver = "newtonE";
  int restarts = 10;

  void add(CLI::App* cmd) {
    cmd->add_option("--assignment", assignment, "Membership heuristic")
        ->capture_default_str()
        ->check(CLI::IsMember({"soft", "hard", "stochastic"}));
    cmd->add_flag("--homogeneous", homogeneous, "Share one scale across components");
    cmd->add_option("--eps-gamma", eps_gamma, "EM stop: Frobenius change of the membership matrix")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--solver", solver, "Scale solver")->capture_default_str()->check(CLI::IsMember({"newtonE", "newtonA"}));
    cmd->add_option("--kmeans-restarts", restarts, "k-means restarts for initialization")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  [[nodiscard]] EMOptions options(const Common& c) const {
    EMOptions o;
    o.assignment = parse_assignment(assignment);
    o.homogeneous = homogeneous;
    o.eps_gamma = eps_gamma;
    o.max_iter = c.iterations(200);
    o.seed = c.seed;
    o.inner.eps = c.eps;
    o.inner.solver = parse_solver(solver);
    o.kmeans_restarts = restarts;
    return o;
  }

  [[nodiscard]] json to_json() const {
    return {{"assignment", assignment}, {"homogeneous", homogeneous}, {"eps_gamma", eps_gamma},
            {"solver", solver}, {"kmeans_restarts", restarts}};
  }
};

struct ClusterArgs {
  Common common;
  EMArgs em;
  std::string input;
  int K = 2;
  std::string model_out;
  std::string indices_out;
};

void run_cluster(const ClusterArgs& a) {
  std::optional<LabelVector> truth;
  const auto points = load_points(a.input, &truth);
  const EMOptions opts = a.em.options(a.common);
  const EMResult fit = fit_em(points, a.K, opts);
  const LabelVector labels = predict_labels(fit.gamma);

  json config = a.common.to_json();
  config.update(a.em.to_json());
  config.update({{"command", "cluster"}, {"input", a.input}, {"K", a.K}, {"max_iter_resolved", opts.max_iter}});
  const json model = mixture_to_json(fit.model);
  json frozen = json::array();
  for (bool f : fit.frozen) frozen.push_back(f);
  json result{{"config", config},
              {"model", model},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"frozen_components", frozen},
              {"log_likelihood_trace", fit.trace}};
  if (truth) {
    const ClusterIndices idx = cluster_indices(*truth, labels);
    const json indices{{"jaccard", idx.jaccard}, {"rand", idx.rand}, {"nmi", idx.nmi}};
    result["indices"] = indices;
    if (!a.indices_out.empty()) write_json_file(a.indices_out, indices);
  } else if (!a.indices_out.empty()) {
    std::cerr << "warning: --indices-out ignored, input has no label column\n";
  }
  if (!a.model_out.empty()) write_json_file(a.model_out, model);

  if (a.common.json_format()) {
    result["labels"] = labels;
    emit(a.common, [&](std::ostream& os) { os << result.dump(2) << '\n'; });
  } else {
    emit(a.common, [&](std::ostream& os) { write_labels_csv(os, labels); });
    emit_sidecar(a.common, result);
  }
}

struct StudyArgs {
  Common common;
  EMArgs em;
  std::vector<int> Ks{2, 3, 4};
  std::vector<std::string> assignments{"soft", "hard"};
  int repeats = 100;
  bool long_layout = false;

  void add(CLI::App* cmd, int default_repeats) {
    repeats = default_repeats;
    add_common(cmd, common, "csv");
    cmd->add_option("--K", Ks, "Numbers of clusters")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--assignments", assignments, "Membership heuristics to evaluate")
        ->capture_default_str()
        ->check(CLI::IsMember({"soft", "hard", "stochastic"}));
    cmd->add_option("--repeats", repeats, "Seeded repeats")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_flag("--long", long_layout, "One row per (method, K) instead of the wide table");
    cmd->add_flag("--homogeneous", em.homogeneous, "Share one scale across components");
    cmd->add_option("--eps-gamma", em.eps_gamma, "EM stop: Frobenius change of the membership matrix")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--solver", em.solver, "Scale solver")->capture_default_str()->check(CLI::IsMember({"newtonE", "newtonA"}));
  }

  [[nodiscard]] ClusterStudyConfig config() const {
    ClusterStudyConfig c;
    c.Ks = Ks;
    c.assignments = parse_assignments(assignments);
    c.repeats = repeats;
    c.seed = common.seed;
    c.em = em.options(common);
    return c;
  }

  [[nodiscard]] json to_json(const ClusterStudyConfig& c) const {
    json j = common.to_json();
    j.update({{"K", Ks},
              {"assignments", assignments_json(c.assignments)},
              {"repeats", repeats},
              {"homogeneous", em.homogeneous},
              {"eps_gamma", em.eps_gamma},
              {"solver", em.solver},
              {"max_iter_resolved", c.em.max_iter},
              {"seed_rule", "repeat r uses seed XOR r for data and derive_seed(seed XOR r, K) for EM"}});
    return j;
  }

  void emit_rows(const std::vector<ClusterStudyRow>& rows, const json& config) const {
    emit_table(common, long_layout ? cluster_study_long_table(rows) : cluster_study_table(rows, Ks), config);
  }
};

struct SmallMixArgs {
  StudyArgs study;
  int n = 200;
  bool multinomial = false;
};

void run_smallmix_cmd(const SmallMixArgs& a) {
  const ClusterStudyConfig cfg = a.study.config();
  const auto rows = run_smallmix(cfg, a.n, a.multinomial);
  json config = a.study.to_json(cfg);
  config.update({{"command", "smallmix"}, {"n", a.n}, {"multinomial", a.multinomial}});
  a.study.emit_rows(rows, config);
}

struct HouseholdArgs {
  StudyArgs study;
  std::string input;
  bool synthetic = false;
  std::vector<std::string> categories = kHouseholdCategories;
  std::string group_column = kHouseholdGroupColumn;
};

void run_household_cmd(const HouseholdArgs& a) {
  const ClusterStudyConfig cfg = a.study.config();
  json config = a.study.to_json(cfg);
  config.update({{"command", "household"}, {"categories", a.categories}, {"group_column", a.group_column}});
  std::vector<ClusterStudyRow> rows;
  if (a.synthetic || a.input.empty()) {
    if (!a.synthetic) std::cerr << "warning: no --input given, using the synthetic stand-in\n";
    const SyntheticHousehold model;
    config.update({{"data", "synthetic"},
                   {"synthetic", {{"mu0", to_json(model.mu0)}, {"sigma0", model.sigma0},
                                  {"mu1", to_json(model.mu1)}, {"sigma1", model.sigma1},
                                  {"per_group", model.per_group}}}});
    rows = run_cluster_study(cfg, [&](std::uint64_t s) {
      RngState rng(s);
      return generate_synthetic_household(rng, model);
    });
  } else {
    const HouseholdData data = load_household(a.input, a.categories, a.group_column);
    config.update({{"data", a.input}, {"records", data.ids.size()}, {"groups", data.group_names}});
    rows = run_cluster_study(cfg, [&](std::uint64_t) { return data.data; });
  }
  a.study.emit_rows(rows, config);
}

struct BenchArgs {
  Common common;
  BenchConfig bench;
  std::string method = "oracle";
  bool omit_timing = false;

  void add(CLI::App* cmd) {
    add_common(cmd, common, "csv");
    cmd->add_option("--p", bench.dims, "Sphere dimensions")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--sigma", bench.sigmas, "True scales")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--n", bench.sizes, "Sample sizes")->capture_default_str()->check(CLI::Range(2, 1 << 30));
    cmd->add_option("--repeats", bench.repeats, "Repeats per cell")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--method", method, "Sampler for the synthetic data")
        ->capture_default_str()
        ->check(CLI::IsMember({"rejection", "mh", "oracle"}));
    cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_flag("--omit-timing", omit_timing, "Leave timing columns empty (byte-reproducible tables)");
  }

  [[nodiscard]] BenchConfig resolved() const {
    BenchConfig b = bench;
    b.seed = common.seed;
    b.eps = common.eps;
    b.max_iter = common.iterations(kDefaultMaxIter);
    b.method = parse_sampler_method(method);
    return b;
  }

  [[nodiscard]] json to_json(const BenchConfig& b, const std::string& command) const {
    json j = common.to_json();
    j.update({{"command", command},
              {"p", b.dims},
              {"sigma", b.sigmas},
              {"n", b.sizes},
              {"repeats", b.repeats},
              {"method", method},
              {"max_iter_resolved", b.max_iter},
              {"mu0", "e_0"},
              {"seed_rule", "repeat r uses seed XOR r"}});
    return j;
  }
};

void blank_columns(Table& t, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    if (std::find(names.begin(), names.end(), t.columns[j]) == names.end()) continue;
    for (auto& row : t.rows) row[j] = std::monostate{};
  }
}

void run_bench_location(const BenchArgs& a) {
  const BenchConfig b = a.resolved();
  Table t = location_table(bench_location(b));
  if (a.omit_timing) blank_columns(t, {"weiszfeld_time"});
  json config = a.to_json(b, "bench-location");
  config["omit_timing"] = a.omit_timing;
  emit_table(a.common, t, config);
}

void run_bench_scale(const BenchArgs& a) {
  const BenchConfig b = a.resolved();
  Table t = scale_table(bench_scale(b));
  if (a.omit_timing) blank_columns(t, {"newtonE_time", "newtonA_time"});
  json config = a.to_json(b, "bench-scale");
  config.update({{"omit_timing", a.omit_timing}, {"solvers", {"NewtonE", "NewtonA"}}});
  emit_table(a.common, t, config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical Laplace distribution toolkit: sampling, estimation and clustering on S^p"};
  app.require_subcommand(1);

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw points from SL(mu, sigma) on S^p");
  add_common(sample_cmd, sample.common, "csv");
  sample_cmd->add_option("--p", sample.p, "Sphere dimension")->capture_default_str()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--sigma", sample.sigma, "Scale")->capture_default_str()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--mu", sample.mu, "Location (p + 1 coordinates, default e_0)")->delimiter(',');
  sample_cmd->add_option("--n", sample.n, "Number of points")->capture_default_str()->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--method", sample.method, "Sampler")
      ->capture_default_str()
      ->check(CLI::IsMember({"rejection", "mh", "oracle"}));
  sample_cmd->add_option("--burn-in", sample.burn_in, "MH burn-in steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("--thinning", sample.thinning, "MH thinning interval")->capture_default_str()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--proposal-sd", sample.proposal_sd, "MH step standard deviation (0 = sigma)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of one SL distribution");
  add_common(fit_cmd, fit.common, "json");
  fit_cmd->add_option("--input,-i", fit.input, "Point CSV")->required();
  fit_cmd->add_option("--solver", fit.solver, "Scale solver")->capture_default_str()->check(CLI::IsMember({"newtonE", "newtonA"}));
  fit_cmd->add_option("--h-rel", fit.h_rel, "Relative finite-difference step of newtonA")
      ->capture_default_str()
      ->check(CLI::Range(1e-12, 0.5));

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Fit an SL mixture by EM and label the points");
  add_common(cluster_cmd, cluster.common, "csv");
  cluster.em.add(cluster_cmd);
  cluster_cmd->add_option("--input,-i", cluster.input, "Point CSV (optional final label column = truth)")->required();
  cluster_cmd->add_option("--K", cluster.K, "Number of components")->capture_default_str()->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--model-out", cluster.model_out, "Write the fitted model JSON here");
  cluster_cmd->add_option("--indices-out", cluster.indices_out, "Write {jaccard, rand, nmi} JSON here");

  SmallMixArgs smallmix;
  auto* smallmix_cmd = app.add_subcommand("smallmix", "Two-component S^1 simulation, clustering indices");
  smallmix.study.add(smallmix_cmd, 100);
  smallmix_cmd->add_option("--n", smallmix.n, "Points per data set")->capture_default_str()->check(CLI::PositiveNumber);
  smallmix_cmd->add_flag("--multinomial", smallmix.multinomial, "Binomial class sizes instead of n/2 each");

  HouseholdArgs household;
  auto* household_cmd = app.add_subcommand("household", "Compositional household data on S^2, clustering indices");
  household.study.add(household_cmd, 20);
  household_cmd->add_option("--input,-i", household.input, "Compositional CSV");
  household_cmd->add_flag("--synthetic", household.synthetic, "Use the synthetic two-group stand-in");
  household_cmd->add_option("--categories", household.categories, "Category columns")->delimiter(',')->capture_default_str();
  household_cmd->add_option("--group-column", household.group_column, "Ground-truth column")->capture_default_str();

  BenchArgs bench_loc;
  auto* bench_loc_cmd = app.add_subcommand("bench-location", "Location-accuracy sweep");
  bench_loc.add(bench_loc_cmd);
  BenchArgs bench_sc;
  auto* bench_sc_cmd = app.add_subcommand("bench-scale", "Scale-accuracy sweep, NewtonE vs NewtonA");
  bench_sc.add(bench_sc_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample_cmd->parsed()) run_sample(sample);
    else if (fit_cmd->parsed()) run_fit(fit);
    else if (cluster_cmd->parsed()) run_cluster(cluster);
    else if (smallmix_cmd->parsed()) run_smallmix_cmd(smallmix);
    else if (household_cmd->parsed()) run_household_cmd(household);
    else if (bench_loc_cmd->parsed()) run_bench_location(bench_loc);
    else if (bench_sc_cmd->parsed()) run_bench_scale(bench_sc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
