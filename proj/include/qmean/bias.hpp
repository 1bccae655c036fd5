#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qmean/core.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "qmean/quotient.hpp"

namespace qmean {

enum class KMethod { maxmax_on_noise, sphere_search, closed_form_rotation };

inline const char* to_string(KMethod m) {
  switch (m) {
    case KMethod::maxmax_on_noise: return "maxmax_on_noise";
    case KMethod::sphere_search: return "sphere_search";
    case KMethod::closed_form_rotation: return "closed_form_rotation";
  }
  return "?";
}

/// Estimate of K = sup_{|v|=1} E(sup_g <v, g.eps>), the slope of the
/// consistency bias in the noise level.
struct KEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::size_t n_mc = 0;
  double theta_cross_check = 0.0;  // max theta over candidate directions
  KMethod method = KMethod::maxmax_on_noise;
};

struct KOptions {
  std::size_t reps = 8;        // independent repetitions for the std error
  std::size_t extra_starts = 2;  // observations used as extra max-max starts
  int threads = 1;
};

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double std_error_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                   static_cast<double>(xs.size()));
}

}  // namespace detail

/// K via the fixed-point reduction: the Frechet mean of a pure-noise sample
/// (t0 = 0, sigma = 1) has norm K in the limit, so each repetition runs
/// max-max on fresh noise and reports the norm of the lowest-variance output.
/// The rotation group admits the closed form K = E|eps|; for the trivial group
/// the supremum collapses and K is read off a direction search instead (the
/// norm of a finite-sample mean would never average down to zero).
/// A theta-based direction search is always reported as a cross-check.
inline KEstimate estimate_K(const NoiseSpec& noise, const ActionDescriptor& action,
                            std::size_t n_mc, std::uint64_t seed,
                            const KOptions& options = {}) {
  if (!action.isometric())
    throw UnsupportedAction("K is defined for isometric actions only");
  require(n_mc >= 1, "n_mc must be >= 1");
  require(options.reps >= 1, "need at least one repetition");
  require(noise.dimension == action.dimension, "noise dimension mismatch");
  detail::check_standardized(noise);

  KEstimate out;
  out.reps = options.reps;
  out.n_mc = n_mc;

  const TemplateVector zero(action.dimension, 0.0);
  const TransformationLaw identity_law = fixed_law(Identity{});
  const RandomStream rep_seeds = RandomStream::derive(seed, "k_reps");

  std::vector<double> per_rep;
  std::vector<TemplateVector> candidate_directions;

  if (action.kind == ActionKind::rotation) {
    out.method = KMethod::closed_form_rotation;
    const RandomStream eps_stream = RandomStream::derive(seed, "k_rotation_eps");
    for (std::size_t b = 0; b < options.reps; ++b) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n_mc; ++i)
        sum += norm(draw_noise(noise, eps_stream, b * n_mc + i));
      per_rep.push_back(sum / static_cast<double>(n_mc));
    }
    TemplateVector e1(action.dimension, 0.0);
    e1[0] = 1.0;
    candidate_directions.push_back(e1);
  } else if (action.kind == ActionKind::cyclic_shift) {
    out.method = KMethod::maxmax_on_noise;
    for (std::size_t b = 0; b < options.reps; ++b) {
      const ObservationSample sample = sample_observations(
          zero, 1.0, identity_law, noise, n_mc, rep_seeds.substream(b).key(), action,
          "pure-noise");
      const auto starts = default_starts(sample, options.extra_starts);
      const auto rows = multi_start(sample, starts, MaxMaxOptions{options.threads, 0});
      const TemplateVector& best = rows.front().estimate;
      per_rep.push_back(norm(best));
      if (b == 0) {
        const double nb = norm(best);
        if (nb > 0.0) candidate_directions.push_back((1.0 / nb) * best);
        for (std::size_t i = 0; i < std::min<std::size_t>(5, sample.size()); ++i) {
          const double ny = norm(sample.observations[i]);
          if (ny > 0.0)
            candidate_directions.push_back((1.0 / ny) * sample.observations[i]);
        }
      }
    }
  } else {  // trivial action
    out.method = KMethod::sphere_search;
    const ObservationSample sample = sample_observations(
        zero, 1.0, identity_law, noise, n_mc, rep_seeds.substream(0).key(), action,
        "pure-noise");
    TemplateVector mean(action.dimension, 0.0);
    for (const auto& y : sample.observations)
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += y[j];
    mean = (1.0 / static_cast<double>(sample.size())) * mean;
    const double nm = norm(mean);
    if (nm > 0.0) candidate_directions.push_back((1.0 / nm) * mean);
    for (std::size_t i = 0; i < std::min<std::size_t>(5, sample.size()); ++i) {
      const double ny = norm(sample.observations[i]);
      if (ny > 0.0) candidate_directions.push_back((1.0 / ny) * sample.observations[i]);
    }
  }

  // Direction search over fresh noise, shared by the cross-check and by the
  // trivial-action estimate.
  double best_theta = -std::numeric_limits<double>::infinity();
  double best_theta_se = 0.0;
  for (std::size_t c = 0; c < candidate_directions.size(); ++c) {
    const RegistrationScore score =
        theta(candidate_directions[c], noise, action, n_mc,
              RandomStream::derive(seed, "k_theta").substream(c).key());
    if (score.value > best_theta) {
      best_theta = score.value;
      best_theta_se = score.std_error;
    }
  }
  out.theta_cross_check = best_theta;

  if (out.method == KMethod::sphere_search) {
    out.value = best_theta;
    out.std_error = best_theta_se;
  } else {
    out.value = detail::mean_of(per_rep);
    out.std_error = detail::std_error_of(per_rep);
  }
  return out;
}

/// The consistency-bias envelope (sigma*K - 2|t0|, sigma*K + 2|t0|).
/// The lower end may be negative; report-side consumers clamp it at zero.
inline std::pair<double, double> cb_bounds(double sigma, double t0_norm, double k) {
  require(sigma >= 0.0 && t0_norm >= 0.0 && k >= 0.0, "cb_bounds needs nonnegative inputs");
  return {sigma * k - 2.0 * t0_norm, sigma * k + 2.0 * t0_norm};
}

/// EB = d_Q([t0],[m_hat]).
inline double empirical_bias(const TemplateVector& t0, const TemplateVector& m_hat,
                             const ActionDescriptor& action) {
  return quotient_distance(t0, m_hat, action).distance;
}

/// Rotation case via the congruent section s([x]) = |x| v:
/// bias = | mean_i |Y_i|  -  |t0| |.
inline double rotation_bias_closed_form(const TemplateVector& t0,
                                        const ObservationSample& sample) {
  require(!sample.observations.empty(), "empty sample");
  double sum = 0.0;
  for (const auto& y : sample.observations) sum += norm(y);
  return std::abs(sum / static_cast<double>(sample.size()) - norm(t0));
}

/// Oracle estimator available in simulation only: undo the drawn transforms
/// and average, (1/I) sum_i Phi_i^{-1}.Y_i.
inline TemplateVector mean_knowing_transformations(const ObservationSample& sample) {
  require(!sample.observations.empty(), "empty sample");
  require(sample.transforms.size() == sample.size(),
          "sample does not carry its generating transforms");
  TemplateVector acc(sample.dimension(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const TemplateVector undone =
        qmean::apply(inverse(sample.transforms[i]), sample.observations[i]);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += undone[j];
  }
  return (1.0 / static_cast<double>(sample.size())) * acc;
}

struct BiasReport {
  double k_estimate = 0.0;
  double k_std_error = 0.0;
  double sigma = 0.0;
  double t0_norm = 0.0;
  double cb_lower = 0.0;  // sigma*K - 2|t0| (unclamped)
  double cb_upper = 0.0;
  double eb = 0.0;
  double eb_over_sigma = 0.0;
  KMethod method = KMethod::maxmax_on_noise;
};

inline BiasReport make_bias_report(const KEstimate& k, double sigma, double t0_norm,
                                   double eb) {
  BiasReport r;
  r.k_estimate = k.value;
  r.k_std_error = k.std_error;
  r.sigma = sigma;
  r.t0_norm = t0_norm;
  const auto [lo, hi] = cb_bounds(sigma, t0_norm, std::max(0.0, k.value));
  r.cb_lower = lo;
  r.cb_upper = hi;
  r.eb = eb;
  r.eb_over_sigma = sigma > 0.0 ? eb / sigma : 0.0;
  r.method = k.method;
  return r;
}

// ---------------------------------------------------------------------------
// Bias as a function of the noise level
// ---------------------------------------------------------------------------

struct LinearityRow {
  double sigma = 0.0;
  double eb = 0.0;
  double eb_std_error = 0.0;
  double eb_over_sigma = 0.0;
  double cb_lower = 0.0;
  double cb_upper = 0.0;
};

struct LinearityResult {
  std::vector<LinearityRow> rows;
  double k_estimate = 0.0;
  double k_std_error = 0.0;
  double fitted_slope = 0.0;  // least squares of EB vs sigma over the top half
};

struct LinearityOptions {
  std::size_t reps = 4;
  int threads = 1;
  KOptions k_options;
};

/// Runs the full estimation pipeline per noise level and summarizes how the
/// empirical bias grows with sigma.
inline LinearityResult linearity_check(const TemplateVector& t0, const NoiseSpec& noise,
                                       const ActionDescriptor& action,
                                       const TransformationLaw& law,
                                       const std::vector<double>& sigmas, std::size_t count,
                                       std::uint64_t seed,
                                       const LinearityOptions& options = {}) {
  require(sigmas.size() >= 2, "need at least two noise levels");
  double lo = sigmas.front(), hi = sigmas.front();
  for (double s : sigmas) {
    require(s > 0.0, "sigma must be positive");
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  require(hi >= 10.0 * lo, "sigma list must span at least a decade");

  LinearityResult result;
  const KEstimate k = estimate_K(noise, action, count, seed, options.k_options);
  result.k_estimate = k.value;
  result.k_std_error = k.std_error;

  const double t0_norm = norm(t0);
  const RandomStream seeds = RandomStream::derive(seed, "linearity");
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    std::vector<double> ebs;
    for (std::size_t b = 0; b < options.reps; ++b) {
      const ObservationSample sample =
          sample_observations(t0, sigmas[s], law, noise, count,
                              seeds.substream(s * options.reps + b).key(), action);
      const MaxMaxReport rep = max_max(sample, sample.observations.front(),
                                       MaxMaxOptions{options.threads, 0});
      ebs.push_back(empirical_bias(t0, rep.estimate, action));
    }
    LinearityRow row;
    row.sigma = sigmas[s];
    row.eb = detail::mean_of(ebs);
    row.eb_std_error = detail::std_error_of(ebs);
    row.eb_over_sigma = row.eb / sigmas[s];
    const auto [cl, cu] = cb_bounds(sigmas[s], t0_norm, std::max(0.0, k.value));
    row.cb_lower = cl;
    row.cb_upper = cu;
    result.rows.push_back(row);
  }

  // Slope over the largest noise levels (top half of the sorted sigmas).
  std::vector<LinearityRow> sorted = result.rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const LinearityRow& a, const LinearityRow& b) { return a.sigma < b.sigma; });
  const std::size_t start = sorted.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(sorted.size() - start);
  for (std::size_t i = start; i < sorted.size(); ++i) {
    sx += sorted[i].sigma;
    sy += sorted[i].eb;
    sxx += sorted[i].sigma * sorted[i].sigma;
    sxy += sorted[i].sigma * sorted[i].eb;
  }
  const double denom = n * sxx - sx * sx;
  result.fitted_slope = denom != 0.0 ? (n * sxy - sx * sy) / denom
                                     : (sorted.back().eb / sorted.back().sigma);
  return result;
}

}  // namespace qmean
