#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qmean/actions.hpp"
#include "qmean/core.hpp"
#include "qmean/model.hpp"

namespace qmean {

// ---------------------------------------------------------------------------
// Empirical variance in the quotient space
// ---------------------------------------------------------------------------

/// Registration of every observation with respect to x. Cyclic actions go
/// through the FFT correlator; the other actions use their closed forms.
inline std::vector<RegistrationResult> per_observation_registration(
    const TemplateVector& x, const ObservationSample& sample, int threads = 1) {
  require(!sample.observations.empty(), "empty sample");
  const ActionDescriptor& action = sample.meta.action;
  std::vector<RegistrationResult> out(sample.size());
  if (action.kind == ActionKind::cyclic_shift) {
    CyclicRegistrar registrar(sample.observations);
    std::vector<CyclicRegistrar::Hit> hits;
    registrar.register_all(x, hits, threads);
    const double nx = norm(x);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      RegistrationResult r;
      r.element = CyclicShift(hits[i].shift, x.size());
      r.distance = std::sqrt(hits[i].dist2);
      const double ny = norm(sample.observations[i]);
      const double d2_second =
          std::max(0.0, nx * nx - 2.0 * hits[i].corr_second + ny * ny);
      r.unique = x.size() == 1 ||
                 (std::sqrt(d2_second) - r.distance) > 1e-9 * std::max(1.0, nx);
      out[i] = std::move(r);
    }
  } else {
    for (std::size_t i = 0; i < sample.size(); ++i)
      out[i] = registration(x, sample.observations[i], action);
  }
  return out;
}

/// F_I(x) = (1/I) sum_i min_g ||x - g.Y_i||^2, summed in index order.
inline double empirical_variance(const TemplateVector& x, const ObservationSample& sample,
                                 int threads = 1) {
  const auto regs = per_observation_registration(x, sample, threads);
  double sum = 0.0;
  for (const auto& r : regs) sum += r.distance * r.distance;
  return sum / static_cast<double>(regs.size());
}

/// Mean of the registered observations (1/I) sum_i g_i.Y_i, accumulated in
/// index order so reruns are bit-identical.
inline TemplateVector assignment_mean(const ObservationSample& sample,
                                      const std::vector<GroupElement>& assignments) {
  require(sample.size() == assignments.size(), "assignment count mismatch");
  TemplateVector acc(sample.dimension(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const TemplateVector moved = qmean::apply(assignments[i], sample.observations[i]);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += moved[j];
  }
  return (1.0 / static_cast<double>(sample.size())) * acc;
}

// ---------------------------------------------------------------------------
// Max-max alternating minimization
// ---------------------------------------------------------------------------

struct MaxMaxOptions {
  int threads = 1;
  std::size_t iteration_cap = 0;  // 0: use 10*I + 1000
};

struct MaxMaxReport {
  TemplateVector estimate;
  std::size_t iterations = 0;                 // number of averaging steps taken
  std::vector<double> variance_trajectory;    // F_I at every visited point
  std::vector<GroupElement> assignments_final;
  bool karcher_verified = false;
  std::string start_id;
};

/// True when every observation registers uniquely onto m_hat (no focal
/// observation): the best distance beats the runner-up by more than
/// 1e-9 * max(1, |m_hat|). A successful check certifies the max-max output
/// as a local minimum of the empirical variance.
inline bool karcher_check(const TemplateVector& m_hat, const ObservationSample& sample,
                          int threads = 1) {
  const auto regs = per_observation_registration(m_hat, sample, threads);
  return std::all_of(regs.begin(), regs.end(),
                     [](const RegistrationResult& r) { return r.unique; });
}

/// Alternates registration and averaging until the assignment vector repeats.
/// Assignments of a finite group are discrete, so the stopping test is exact;
/// the variance trajectory never increases along the way. The iteration cap
/// 10*I + 1000 guards the theoretical finite-termination guarantee against
/// floating-point tie pathologies.
inline MaxMaxReport max_max(const ObservationSample& sample, const TemplateVector& start,
                            const MaxMaxOptions& options = {}, std::string start_id = "") {
  require(!sample.observations.empty(), "empty sample");
  const ActionDescriptor& action = sample.meta.action;
  if (!action.finite_group())
    throw UnsupportedAction("max-max needs a finite group action");
  require(start.size() == sample.dimension(), "start dimension mismatch");

  const std::size_t count = sample.size();
  const std::size_t cap =
      options.iteration_cap > 0 ? options.iteration_cap : 10 * count + 1000;
  const bool cyclic = action.kind == ActionKind::cyclic_shift;

  MaxMaxReport report;
  report.start_id = std::move(start_id);

  CyclicRegistrar registrar(sample.observations);
  std::vector<CyclicRegistrar::Hit> hits;
  std::vector<GroupElement> assignments(count), previous;

  TemplateVector m = start;
  for (std::size_t iter = 0;; ++iter) {
    double dist2_sum = 0.0;
    if (cyclic) {
      registrar.register_all(m, hits, options.threads);
      for (std::size_t i = 0; i < count; ++i) {
        assignments[i] = CyclicShift(hits[i].shift, m.size());
        dist2_sum += hits[i].dist2;
      }
    } else {  // trivial group: the only assignment is the identity
      for (std::size_t i = 0; i < count; ++i) {
        assignments[i] = Identity{};
        const double d = distance(m, sample.observations[i]);
        dist2_sum += d * d;
      }
    }
    report.variance_trajectory.push_back(dist2_sum / static_cast<double>(count));

    if (!previous.empty() && assignments == previous) {
      report.estimate = std::move(m);
      report.iterations = iter;
      report.assignments_final = std::move(assignments);
      break;
    }
    if (iter >= cap)
      throw NonterminationError("max-max hit the iteration cap (" + std::to_string(cap) +
                                ")");
    m = assignment_mean(sample, assignments);
    previous = assignments;
  }

  report.karcher_verified = karcher_check(report.estimate, sample, options.threads);
  return report;
}

// ---------------------------------------------------------------------------
// Multi-start exploration
// ---------------------------------------------------------------------------

struct MultiStartRow {
  std::string start_id;
  TemplateVector estimate;
  double variance = 0.0;
  std::size_t iterations = 0;
  bool karcher_verified = false;
};

/// First k observations plus the sample mean: the start set used when the
/// caller does not supply one.
inline std::vector<std::pair<std::string, TemplateVector>> default_starts(
    const ObservationSample& sample, std::size_t k = 5) {
  std::vector<std::pair<std::string, TemplateVector>> starts;
  for (std::size_t i = 0; i < std::min(k, sample.size()); ++i)
    starts.emplace_back("Y" + std::to_string(i + 1), sample.observations[i]);
  TemplateVector mean(sample.dimension(), 0.0);
  for (const auto& y : sample.observations)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += y[j];
  starts.emplace_back("mean", (1.0 / static_cast<double>(sample.size())) * mean);
  return starts;
}

/// Independent max-max runs, sorted by achieved empirical variance.
inline std::vector<MultiStartRow> multi_start(
    const ObservationSample& sample,
    const std::vector<std::pair<std::string, TemplateVector>>& starts,
    const MaxMaxOptions& options = {}) {
  require(!starts.empty(), "need at least one start");
  std::vector<MultiStartRow> rows;
  rows.reserve(starts.size());
  for (const auto& [id, start] : starts) {
    MaxMaxReport rep = max_max(sample, start, options, id);
    rows.push_back(MultiStartRow{rep.start_id, std::move(rep.estimate),
                                 rep.variance_trajectory.back(), rep.iterations,
                                 rep.karcher_verified});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MultiStartRow& a, const MultiStartRow& b) {
                     return a.variance < b.variance;
                   });
  return rows;
}

// ---------------------------------------------------------------------------
// Variance as a function of the sample size
// ---------------------------------------------------------------------------

struct VarianceCurve {
  std::vector<std::pair<std::size_t, double>> checkpoints;  // (I_k, F_{I_k}(x))
};

/// F over sample prefixes at a fixed evaluation point.
inline VarianceCurve variance_curve(const TemplateVector& x, const ObservationSample& sample,
                                    const std::vector<std::size_t>& checkpoints,
                                    int threads = 1) {
  require(!checkpoints.empty(), "need at least one checkpoint");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    require(checkpoints[i] >= 1 && checkpoints[i] <= sample.size(),
            "checkpoint outside [1, I]");
    if (i > 0) require(checkpoints[i] > checkpoints[i - 1], "checkpoints must increase");
  }
  const auto regs = per_observation_registration(x, sample, threads);
  VarianceCurve curve;
  double partial = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < regs.size() && next < checkpoints.size(); ++i) {
    partial += regs[i].distance * regs[i].distance;
    if (i + 1 == checkpoints[next]) {
      curve.checkpoints.emplace_back(checkpoints[next],
                                     partial / static_cast<double>(checkpoints[next]));
      ++next;
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Global minimizer of F_I over the candidate set {(1/I) sum_i g_i.Y_i}.
/// Every minimizer of F_I over the whole space lies in that set, so this is
/// a true (if exponential) Frechet-mean oracle for tiny instances.
inline TemplateVector brute_force_frechet(const ObservationSample& sample,
                                          std::size_t capacity = 1000000) {
  const ActionDescriptor& action = sample.meta.action;
  if (!action.finite_group())
    throw UnsupportedAction("brute-force oracle needs a finite group");
  const std::size_t order = action.group_order();
  const std::size_t count = sample.size();

  double combos = 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    combos *= static_cast<double>(order);
    if (combos > static_cast<double>(capacity))
      throw CapacityError("assignment space exceeds capacity");
  }

  const std::vector<GroupElement> elements = group_elements(action);
  std::vector<std::size_t> digits(count, 0);
  std::vector<GroupElement> assignment(count, elements[0]);

  TemplateVector best;
  double best_variance = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < count; ++i) assignment[i] = elements[digits[i]];
    const TemplateVector candidate = assignment_mean(sample, assignment);
    const double variance = empirical_variance(candidate, sample);
    if (variance < best_variance) {
      best_variance = variance;
      best = candidate;
    }
    std::size_t pos = 0;
    while (pos < count && ++digits[pos] == order) digits[pos++] = 0;
    if (pos == count) break;
  }
  return best;
}

}  // namespace qmean
