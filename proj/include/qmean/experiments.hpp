#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "qmean/bias.hpp"
#include "qmean/io.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "qmean/noninvariant.hpp"

namespace qmean {

// ---------------------------------------------------------------------------
// Built-in templates
// ---------------------------------------------------------------------------

/// "step": amplitude-1 indicator of the middle half of the indices
/// (norm sqrt(N/2)). "smooth": sin(2*pi*j/N) + 0.5*sin(4*pi*j/N), periodic
/// across the wrap-around index. Neither is a fixed point of the shift action.
inline TemplateVector builtin_template(const std::string& name, std::size_t n) {
  require(n >= 8, "built-in templates need N >= 8");
  TemplateVector t(n, 0.0);
  if (name == "step") {
    for (std::size_t j = n / 4; j < 3 * n / 4; ++j) t[j] = 1.0;
  } else if (name == "smooth") {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      t[j] = std::sin(x) + 0.5 * std::sin(2.0 * x);
    }
  } else {
    throw ContractViolation("unknown built-in template '" + name + "'");
  }
  return t;
}

/// Cyclic total variation sum_j |x_{j+1} - x_j| (indices mod N).
inline double total_variation(const TemplateVector& x) {
  double tv = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    tv += std::abs(x[(j + 1) % x.size()] - x[j]);
  return tv;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class Experiment {
  step_template,
  continuous_template,
  multi_start_experiment,
  variance_curve_experiment,
  k_estimate,
  linearity,
  sigma_c,
  affine_consistency,
  noninvariant_demo
};

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::step_template: return "step_template";
    case Experiment::continuous_template: return "continuous_template";
    case Experiment::multi_start_experiment: return "multi_start";
    case Experiment::variance_curve_experiment: return "variance_curve";
    case Experiment::k_estimate: return "k_estimate";
    case Experiment::linearity: return "linearity";
    case Experiment::sigma_c: return "sigma_c";
    case Experiment::affine_consistency: return "affine_consistency";
    case Experiment::noninvariant_demo: return "noninvariant_demo";
  }
  return "?";
}

inline Experiment experiment_from_string(const std::string& s) {
  if (s == "step_template") return Experiment::step_template;
  if (s == "continuous_template") return Experiment::continuous_template;
  if (s == "multi_start") return Experiment::multi_start_experiment;
  if (s == "variance_curve") return Experiment::variance_curve_experiment;
  if (s == "k_estimate") return Experiment::k_estimate;
  if (s == "linearity") return Experiment::linearity;
  if (s == "sigma_c") return Experiment::sigma_c;
  if (s == "affine_consistency") return Experiment::affine_consistency;
  if (s == "noninvariant_demo") return Experiment::noninvariant_demo;
  throw ContractViolation("unknown experiment '" + s + "'");
}

struct RunConfig {
  Experiment experiment = Experiment::step_template;
  std::size_t n = 64;
  std::size_t count = 10000;  // I
  double sigma = 10.0;
  std::uint64_t seed = 0;
  bool seed_set = false;  // a seed must be given explicitly
  std::string template_spec;  // built-in name or CSV path; empty: experiment default
  std::string action_kind = "cyclic_shift";
  std::string out_dir = "out";
  int threads = 1;
  std::vector<double> sigmas;  // linearity sweep; empty: {1, 2, 4, 10}
  std::size_t k_mc = 4000;     // sample size per K repetition
  std::size_t k_reps = 4;
  double omega = 0.0;  // regularized sigma_c input

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["experiment"] = qmean::to_string(experiment);
    j["n"] = n;
    j["i"] = count;
    j["sigma"] = sigma;
    j["seed"] = seed;
    j["template"] = template_spec;
    j["action"] = action_kind;
    j["out"] = out_dir;
    j["threads"] = threads;
    j["sigmas"] = sigmas;
    j["k_mc"] = k_mc;
    j["k_reps"] = k_reps;
    j["omega"] = omega;
    return j;
  }
};

/// Merge a JSON config (any subset of the keys) into `config`.
inline void merge_config_json(RunConfig& config, const nlohmann::json& j) {
  detail::check_keys(j,
                     {"experiment", "n", "i", "sigma", "seed", "template", "action", "out",
                      "threads", "sigmas", "k_mc", "k_reps", "omega"},
                     "run config");
  if (j.contains("experiment"))
    config.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  if (j.contains("n")) config.n = j.at("n").get<std::size_t>();
  if (j.contains("i")) config.count = j.at("i").get<std::size_t>();
  if (j.contains("sigma")) config.sigma = j.at("sigma").get<double>();
  if (j.contains("seed")) {
    config.seed = j.at("seed").get<std::uint64_t>();
    config.seed_set = true;
  }
  if (j.contains("template")) config.template_spec = j.at("template").get<std::string>();
  if (j.contains("action")) config.action_kind = j.at("action").get<std::string>();
  if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
  if (j.contains("threads")) config.threads = j.at("threads").get<int>();
  if (j.contains("sigmas")) config.sigmas = j.at("sigmas").get<std::vector<double>>();
  if (j.contains("k_mc")) config.k_mc = j.at("k_mc").get<std::size_t>();
  if (j.contains("k_reps")) config.k_reps = j.at("k_reps").get<std::size_t>();
  if (j.contains("omega")) config.omega = j.at("omega").get<double>();
}

inline void validate_config(const RunConfig& config) {
  require(config.seed_set, "seed is mandatory (runs must be reproducible)");
  require(config.n >= 1, "n must be positive");
  require(config.count >= 1, "i must be positive");
  require(config.sigma >= 0.0, "sigma must be >= 0");
  require(config.threads >= 1, "threads must be >= 1");
  require(!config.out_dir.empty(), "output directory required");
}

namespace detail {

class ArtifactSink {
 public:
  explicit ArtifactSink(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    started_ = std::chrono::steady_clock::now();
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path file(const std::string& rel) { return dir_ / rel; }

  void note(const std::string& rel) { entries_.emplace_back(rel, file_hash(dir_ / rel)); }

  void finish(const nlohmann::json& config_echo) {
    Manifest manifest;
    manifest.config = config_echo;
    manifest.artifacts = entries_;
    manifest.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    write_manifest(manifest, dir_);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::chrono::steady_clock::time_point started_;
};

inline TemplateVector resolve_template(const RunConfig& config, const std::string& fallback) {
  const std::string spec = config.template_spec.empty() ? fallback : config.template_spec;
  if (spec == "step" || spec == "smooth") return builtin_template(spec, config.n);
  TemplateVector t = read_vector_csv(spec);
  require(t.size() == config.n, "template file dimension does not match n");
  return t;
}

inline ActionDescriptor resolve_action(const RunConfig& config) {
  if (config.action_kind == "cyclic_shift") return ActionDescriptor::cyclic(config.n);
  if (config.action_kind == "rotation") return ActionDescriptor::rotation(config.n);
  if (config.action_kind == "trivial") return ActionDescriptor::trivial(config.n);
  throw ContractViolation("experiments drive actions cyclic_shift/rotation/trivial; got '" +
                          config.action_kind + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment bodies
// ---------------------------------------------------------------------------

namespace detail {

/// Template estimation run shared by the step and continuous experiments.
inline void run_template_estimation(const RunConfig& config, ArtifactSink& sink,
                                    const std::string& default_template) {
  const TemplateVector t0 = resolve_template(config, default_template);
  const ActionDescriptor action = ActionDescriptor::cyclic(config.n);
  const NoiseSpec noise = gaussian_noise(config.n);
  const TransformationLaw law = uniform_cyclic_law(config.n);

  const ObservationSample sample = sample_observations(
      t0, config.sigma, law, noise, config.count, config.seed, action, default_template);

  const MaxMaxOptions options{config.threads, 0};
  const MaxMaxReport report =
      max_max(sample, sample.observations.front(), options, "Y1");

  const KEstimate k = estimate_K(noise, action, config.k_mc, config.seed,
                                 KOptions{config.k_reps, 1, config.threads});
  const double eb = empirical_bias(t0, report.estimate, action);
  const BiasReport bias = make_bias_report(k, config.sigma, norm(t0), eb);

  const TemplateVector oracle = mean_knowing_transformations(sample);
  const double oracle_eb = empirical_bias(t0, oracle, action);

  write_vector_csv(t0, sink.file("template.csv"));
  sink.note("template.csv");
  write_vector_csv(report.estimate, sink.file("estimate.csv"));
  sink.note("estimate.csv");
  write_vector_csv(oracle, sink.file("oracle_mean.csv"));
  sink.note("oracle_mean.csv");
  write_json(to_json(report), sink.file("maxmax_report.json"));
  sink.note("maxmax_report.json");
  write_json(to_json(bias), sink.file("bias_report.json"));
  sink.note("bias_report.json");

  CsvTable trajectory;
  trajectory.columns = {"iteration", "F"};
  for (std::size_t i = 0; i < report.variance_trajectory.size(); ++i)
    trajectory.rows.push_back({static_cast<double>(i), report.variance_trajectory[i]});
  write_table_csv(trajectory, sink.file("trajectory.csv"));
  sink.note("trajectory.csv");

  const double f_template = empirical_variance(t0, sample, config.threads);
  const double f_estimate = report.variance_trajectory.back();
  nlohmann::json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["type"] = "template_estimation_summary";
  summary["eb"] = eb;
  summary["eb_over_sigma"] = config.sigma > 0 ? eb / config.sigma : 0.0;
  summary["oracle_eb"] = oracle_eb;
  summary["oracle_eb_over_sigma"] = config.sigma > 0 ? oracle_eb / config.sigma : 0.0;
  summary["f_at_template"] = f_template;
  summary["f_at_estimate"] = f_estimate;
  summary["tv_template"] = total_variation(t0);
  summary["tv_estimate"] = total_variation(report.estimate);
  summary["tv_ratio"] = total_variation(report.estimate) / total_variation(t0);
  summary["iterations"] = report.iterations;
  summary["karcher_verified"] = report.karcher_verified;
  write_json(summary, sink.file("report.json"));
  sink.note("report.json");
}

inline void run_multi_start(const RunConfig& config, ArtifactSink& sink) {
  const TemplateVector t0 = resolve_template(config, "step");
  const ActionDescriptor action = ActionDescriptor::cyclic(config.n);
  const ObservationSample sample =
      sample_observations(t0, config.sigma, uniform_cyclic_law(config.n),
                          gaussian_noise(config.n), config.count, config.seed, action);

  const auto starts = default_starts(sample, 5);
  const auto rows = multi_start(sample, starts, MaxMaxOptions{config.threads, 0});
  const double f_template = empirical_variance(t0, sample, config.threads);

  CsvTable table;
  table.comments = {"multi-start outputs sorted by empirical variance"};
  table.columns = {"rank", "variance", "iterations", "karcher"};
  for (std::size_t r = 0; r < rows.size(); ++r)
    table.rows.push_back({static_cast<double>(r), rows[r].variance,
                          static_cast<double>(rows[r].iterations),
                          rows[r].karcher_verified ? 1.0 : 0.0});
  write_table_csv(table, sink.file("outputs.csv"));
  sink.note("outputs.csv");

  nlohmann::json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["type"] = "multi_start_summary";
  summary["f_at_template"] = f_template;
  nlohmann::json out_rows = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r;
    r["start_id"] = row.start_id;
    r["variance"] = row.variance;
    r["iterations"] = row.iterations;
    r["karcher_verified"] = row.karcher_verified;
    r["estimate_norm"] = norm(row.estimate);
    out_rows.push_back(r);
  }
  summary["outputs"] = out_rows;
  write_json(summary, sink.file("report.json"));
  sink.note("report.json");
}

inline void run_variance_curve(const RunConfig& config, ArtifactSink& sink) {
  const TemplateVector t0 = resolve_template(config, "step");
  const ActionDescriptor action = ActionDescriptor::cyclic(config.n);
  const ObservationSample sample =
      sample_observations(t0, config.sigma, uniform_cyclic_law(config.n),
                          gaussian_noise(config.n), config.count, config.seed, action);
  const MaxMaxReport report = max_max(sample, sample.observations.front(),
                                      MaxMaxOptions{config.threads, 0}, "Y1");

  std::vector<std::size_t> checkpoints;
  for (std::size_t c = 1; c < config.count; c = std::max(c + 1, c * 5 / 4))
    checkpoints.push_back(c);
  checkpoints.push_back(config.count);

  const VarianceCurve at_t0 = variance_curve(t0, sample, checkpoints, config.threads);
  const VarianceCurve at_est =
      variance_curve(report.estimate, sample, checkpoints, config.threads);

  CsvTable table;
  table.columns = {"I", "F_template", "F_estimate"};
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    table.rows.push_back({static_cast<double>(checkpoints[i]), at_t0.checkpoints[i].second,
                          at_est.checkpoints[i].second});
  write_table_csv(table, sink.file("curve.csv"));
  sink.note("curve.csv");

  write_json(to_json(report), sink.file("maxmax_report.json"));
  sink.note("maxmax_report.json");
}

inline void run_k_estimate(const RunConfig& config, ArtifactSink& sink) {
  const ActionDescriptor action = resolve_action(config);
  const NoiseSpec noise = gaussian_noise(config.n);
  const KEstimate k = estimate_K(noise, action, config.count, config.seed,
                                 KOptions{config.k_reps, 2, config.threads});
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "k_estimate";
  j["k"] = k.value;
  j["std_error"] = k.std_error;
  j["reps"] = k.reps;
  j["n_mc"] = k.n_mc;
  j["theta_cross_check"] = k.theta_cross_check;
  j["method"] = qmean::to_string(k.method);
  write_json(j, sink.file("k_report.json"));
  sink.note("k_report.json");
}

inline void run_linearity(const RunConfig& config, ArtifactSink& sink) {
  const TemplateVector t0 = resolve_template(config, "step");
  const ActionDescriptor action = ActionDescriptor::cyclic(config.n);
  const std::vector<double> sigmas =
      config.sigmas.empty() ? std::vector<double>{1.0, 2.0, 4.0, 10.0} : config.sigmas;
  LinearityOptions options;
  options.threads = config.threads;
  options.k_options = KOptions{config.k_reps, 1, config.threads};
  const LinearityResult result =
      linearity_check(t0, gaussian_noise(config.n), action, uniform_cyclic_law(config.n),
                      sigmas, config.count, config.seed, options);

  CsvTable table;
  table.columns = {"sigma", "EB", "EB_std_error", "K", "cb_lower", "cb_upper"};
  for (const auto& row : result.rows)
    table.rows.push_back({row.sigma, row.eb, row.eb_std_error, result.k_estimate,
                          row.cb_lower, row.cb_upper});
  write_table_csv(table, sink.file("linearity.csv"));
  sink.note("linearity.csv");

  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "linearity_summary";
  j["k"] = result.k_estimate;
  j["k_std_error"] = result.k_std_error;
  j["fitted_slope"] = result.fitted_slope;
  write_json(j, sink.file("report.json"));
  sink.note("report.json");
}

inline void run_sigma_c(const RunConfig& config, ArtifactSink& sink) {
  // Formula showcase on the documented worked example: H = O(M), the group
  // may stretch the template by at most 2 (A = 2, a = 0), theta_H = E|eps|
  // for standardized Gaussian noise, theta(t0) = A * theta_H. The linear and
  // regularized variants are evaluated at A = 1.2 where they apply.
  const std::size_t n = config.n;
  const double g1 = std::lgamma((static_cast<double>(n) + 1.0) / 2.0);
  const double g0 = std::lgamma(static_cast<double>(n) / 2.0);
  const double chi_mean = std::sqrt(2.0 / static_cast<double>(n)) * std::exp(g1 - g0);

  const CriticalNoise subgroup = sigma_c_subgroup(1.0, 2.0 * chi_mean, chi_mean, 0.0, 2.0);
  const CriticalNoise linear = sigma_c_linear(1.0, chi_mean, 0.0, 1.2);
  const CriticalNoise regularized =
      sigma_c_regularized(1.0, chi_mean, 0.0, 1.2, config.omega);

  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "sigma_c_summary";
  j["subgroup"] = to_json(subgroup);
  j["linear"] = to_json(linear);
  j["regularized"] = to_json(regularized);
  j["noise_mean_norm"] = chi_mean;
  write_json(j, sink.file("sigma_c.json"));
  sink.note("sigma_c.json");
}

inline void run_affine_consistency(const RunConfig& config, ArtifactSink& sink) {
  const std::size_t n = config.n;
  const TemplateVector t0 = resolve_template(config, "smooth");

  // V = span of the first max(1, n/4) coordinate axes.
  std::vector<TemplateVector> basis;
  for (std::size_t d = 0; d < std::max<std::size_t>(1, n / 4); ++d) {
    TemplateVector e(n, 0.0);
    e[d] = 1.0;
    basis.push_back(e);
  }
  const ActionDescriptor action = ActionDescriptor::affine(n, basis);

  // Discrete translation law: eight seeded vectors of V.
  const RandomStream vstream = RandomStream::derive(config.seed, "affine_law");
  std::vector<GroupElement> elements;
  for (std::size_t v = 0; v < 8; ++v) {
    TemplateVector shift(n, 0.0);
    for (std::size_t d = 0; d < basis.size(); ++d) {
      const double c = 2.0 * config.sigma * vstream.gaussian(v * basis.size() + d);
      for (std::size_t j = 0; j < n; ++j) shift[j] += c * basis[d][j];
    }
    elements.push_back(AffineTranslation{shift});
  }
  const TransformationLaw law = discrete_law(elements, std::vector<double>(8, 1.0 / 8.0));

  const ObservationSample sample = sample_observations(
      t0, config.sigma, law, gaussian_noise(n), config.count, config.seed, action);
  const TemplateVector m_hat = affine_prevariance_minimizer(sample, basis);
  const double eb = quotient_distance(t0, m_hat, action).distance;
  const double bound = 4.0 * config.sigma / std::sqrt(static_cast<double>(config.count));

  write_vector_csv(t0, sink.file("template.csv"));
  sink.note("template.csv");
  write_vector_csv(m_hat, sink.file("estimate.csv"));
  sink.note("estimate.csv");
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "affine_consistency_summary";
  j["eb"] = eb;
  j["bound_4_sigma_over_sqrt_i"] = bound;
  j["within_bound"] = eb < bound;
  write_json(j, sink.file("report.json"));
  sink.note("report.json");
}

inline void run_noninvariant_demo(const RunConfig& config, ArtifactSink& sink) {
  const std::size_t n = config.n;
  TemplateVector t0 = resolve_template(config, "smooth");
  t0 = (1.0 / norm(t0)) * t0;  // unit template keeps sigma_c interpretable

  const ConjugatedCyclicAction action = ConjugatedCyclicAction::random(n, config.seed);
  const OrbitBounds bounds = measure_orbit_bounds(t0, action);
  const NoiseSpec noise = gaussian_noise(n);
  const ThetaPositivity theta_t0 =
      theta_positivity_check(t0, noise, action, config.count, config.seed);
  const CriticalNoise critical =
      sigma_c_linear(bounds.t0_norm, theta_t0.estimate, bounds.a, bounds.A);

  CsvTable table;
  table.comments = {"empirical pre-variance at the template vs at lambda(t0)*t0"};
  table.columns = {"sigma", "F_template", "F_lambda_t0", "SE_paired_diff"};
  nlohmann::json rows = nlohmann::json::array();
  const RandomStream seeds = RandomStream::derive(config.seed, "noninv_rows");
  std::size_t row_index = 0;
  for (double factor : {0.5, 1.0, 2.0}) {
    const double sigma = factor * critical.sigma_c;
    const auto observations = sample_conjugated(t0, sigma, noise, action, config.count,
                                                seeds.substream(row_index).key());
    const double lambda = lambda_t0_empirical(t0, observations, action);
    const auto terms_t0 = prevariance_terms(t0, observations, action);
    const auto terms_lambda = prevariance_terms(lambda * t0, observations, action);
    double f_t0 = 0.0, f_lambda = 0.0;
    std::vector<double> diffs(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
      f_t0 += terms_t0[i];
      f_lambda += terms_lambda[i];
      diffs[i] = terms_t0[i] - terms_lambda[i];
    }
    f_t0 /= static_cast<double>(observations.size());
    f_lambda /= static_cast<double>(observations.size());
    double mean_diff = 0.0;
    for (double d : diffs) mean_diff += d;
    mean_diff /= static_cast<double>(diffs.size());
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean_diff) * (d - mean_diff);
    const double se = std::sqrt(ss / static_cast<double>(diffs.size() - 1) /
                                static_cast<double>(diffs.size()));
    table.rows.push_back({sigma, f_t0, f_lambda, se});

    nlohmann::json r;
    r["sigma"] = sigma;
    r["lambda_t0"] = lambda;
    r["f_template"] = f_t0;
    r["f_lambda_t0"] = f_lambda;
    r["paired_se"] = se;
    rows.push_back(r);
    ++row_index;
  }
  write_table_csv(table, sink.file("noninv.csv"));
  sink.note("noninv.csv");

  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "noninvariant_summary";
  j["a"] = bounds.a;
  j["A"] = bounds.A;
  j["theta_t0"] = theta_t0.estimate;
  j["theta_t0_std_error"] = theta_t0.std_error;
  j["sigma_c"] = critical.sigma_c;
  j["rows"] = rows;
  write_json(j, sink.file("report.json"));
  sink.note("report.json");
}

}  // namespace detail

/// Runs one experiment and writes its artifact directory (data files, JSON
/// reports, manifest with content hashes). Throws on invalid configuration or
/// infeasible regimes; the CLI maps exceptions to exit codes.
inline void run_experiment(const RunConfig& config) {
  validate_config(config);
  detail::ArtifactSink sink(config.out_dir);
  switch (config.experiment) {
    case Experiment::step_template:
      detail::run_template_estimation(config, sink, "step");
      break;
    case Experiment::continuous_template:
      detail::run_template_estimation(config, sink, "smooth");
      break;
    case Experiment::multi_start_experiment:
      detail::run_multi_start(config, sink);
      break;
    case Experiment::variance_curve_experiment:
      detail::run_variance_curve(config, sink);
      break;
    case Experiment::k_estimate:
      detail::run_k_estimate(config, sink);
      break;
    case Experiment::linearity:
      detail::run_linearity(config, sink);
      break;
    case Experiment::sigma_c:
      detail::run_sigma_c(config, sink);
      break;
    case Experiment::affine_consistency:
      detail::run_affine_consistency(config, sink);
      break;
    case Experiment::noninvariant_demo:
      detail::run_noninvariant_demo(config, sink);
      break;
  }
  sink.finish(config.to_json());
}

}  // namespace qmean
