#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qmean/actions.hpp"
#include "qmean/core.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "qmean/quotient.hpp"

namespace qmean {

// ---------------------------------------------------------------------------
// Critical noise levels
// ---------------------------------------------------------------------------

/// Empirical bounds a|t0| <= |g.t0| <= A|t0| on the orbit of the template.
struct OrbitBounds {
  double a = 1.0;
  double A = 1.0;
  double t0_norm = 0.0;
};

enum class SigmaCRegime { subgroup, linear, linear_regularized };

inline const char* to_string(SigmaCRegime r) {
  switch (r) {
    case SigmaCRegime::subgroup: return "subgroup";
    case SigmaCRegime::linear: return "linear";
    case SigmaCRegime::linear_regularized: return "linear_regularized";
  }
  return "?";
}

/// A sufficient noise level for inconsistency, together with the inputs it
/// was computed from. Below sigma_c the formulas claim nothing.
struct CriticalNoise {
  double sigma_c = 0.0;
  SigmaCRegime regime = SigmaCRegime::subgroup;
  double t0_norm = 0.0;
  double theta_t0 = 0.0;
  double theta_H = 0.0;  // subgroup regime only
  double a = 0.0;
  double A = 0.0;
  double omega = 0.0;  // regularized regime only
};

/// Critical level when the group contains a subgroup H acting isometrically:
/// sigma_c = (|t0|/theta_H) [ (theta(t0)/theta_H + A)
///                            + sqrt((theta(t0)/theta_H + A)^2 + A^2 - a^2) ].
inline CriticalNoise sigma_c_subgroup(double t0_norm, double theta_t0, double theta_H,
                                      double a, double A) {
  require(theta_H > 0.0, "theta_H must be positive");
  require(t0_norm > 0.0, "template norm must be positive");
  require(a >= 0.0 && A > 0.0, "orbit bounds must be nonnegative");
  require(a <= A, "invalid orbit bounds: a > A");
  const double ratio = theta_t0 / theta_H + A;
  const double sigma_c = (t0_norm / theta_H) * (ratio + std::sqrt(ratio * ratio + A * A - a * a));
  return {sigma_c, SigmaCRegime::subgroup, t0_norm, theta_t0, theta_H, a, A, 0.0};
}

/// Critical level for a linear action with orbit spread A < sqrt(2):
/// sigma_c = (|t0|/theta(t0)) [ A^2 + (1 + sqrt(1 - a^2 (2 - A^2))) / (2 - A^2) ].
inline CriticalNoise sigma_c_linear(double t0_norm, double theta_t0, double a, double A) {
  require(t0_norm > 0.0, "template norm must be positive");
  require(theta_t0 > 0.0, "theta(t0) must be positive");
  require(a >= 0.0 && A > 0.0 && a <= A, "invalid orbit bounds");
  if (!(A < std::sqrt(2.0)))
    throw ContractViolation(
        "A must be < sqrt(2); re-anchor the template at some h.t0 with a tighter orbit "
        "spread to apply the linear criterion");
  const double radicand = 1.0 - a * a * (2.0 - A * A);
  require(radicand >= 0.0, "negative radicand: invalid (a, A) combination");
  const double sigma_c =
      (t0_norm / theta_t0) * (A * A + (1.0 + std::sqrt(radicand)) / (2.0 - A * A));
  return {sigma_c, SigmaCRegime::linear, t0_norm, theta_t0, 0.0, a, A, 0.0};
}

/// Linear action with a bounded regularization term Reg: G -> [0, Omega].
/// Omega = 0 reduces exactly to sigma_c_linear.
inline CriticalNoise sigma_c_regularized(double t0_norm, double theta_t0, double a, double A,
                                         double omega) {
  require(t0_norm > 0.0, "template norm must be positive");
  require(theta_t0 > 0.0, "theta(t0) must be positive");
  require(a >= 0.0 && A > 0.0 && a <= A, "invalid orbit bounds");
  require(omega >= 0.0, "omega must be >= 0");
  if (!(A < std::sqrt(2.0)))
    throw ContractViolation("A must be < sqrt(2) for the regularized criterion");
  const double radicand =
      1.0 - (a * a + omega / (t0_norm * t0_norm)) * (2.0 - A * A);
  if (radicand < 0.0)
    throw ContractViolation(
        "negative radicand: the sufficient condition is vacuous for these inputs");
  const double sigma_c =
      (t0_norm / theta_t0) * (A * A + (1.0 + std::sqrt(radicand)) / (2.0 - A * A));
  return {sigma_c, SigmaCRegime::linear_regularized, t0_norm, theta_t0, 0.0, a, A, omega};
}

// ---------------------------------------------------------------------------
// theta(t0) positivity
// ---------------------------------------------------------------------------

struct ThetaPositivity {
  double estimate = 0.0;
  double std_error = 0.0;
  bool positive = false;        // estimate > 4 std errors
  bool hypothesis_ok = true;    // false when t0 is a fixed point
};

/// MC estimate of theta(t0) = (1/|t0|) E(sup_g <g.t0, eps>). A fixed-point
/// template voids the positivity guarantee; the check still runs but flags it.
inline ThetaPositivity theta_positivity_check(const TemplateVector& t0,
                                              const NoiseSpec& noise,
                                              const ActionDescriptor& action,
                                              std::size_t n_mc, std::uint64_t seed) {
  require(norm(t0) > 0.0, "template norm must be positive");
  require(n_mc >= 2, "n_mc must be >= 2");
  ThetaPositivity out;
  out.hypothesis_ok = !is_fixed_point(t0, action);
  const RandomStream stream = RandomStream::derive(seed, "theta_t0_eps");
  std::vector<double> terms(n_mc);
  const double inv_norm = 1.0 / norm(t0);
  for (std::size_t i = 0; i < n_mc; ++i)
    terms[i] = inv_norm * sup_inner_over_orbit(t0, draw_noise(noise, stream, i), action);
  double sum = 0.0;
  for (double t : terms) sum += t;
  out.estimate = sum / static_cast<double>(n_mc);
  double ss = 0.0;
  for (double t : terms) ss += (t - out.estimate) * (t - out.estimate);
  out.std_error =
      std::sqrt(ss / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  out.positive = out.estimate > 4.0 * out.std_error;
  return out;
}

// ---------------------------------------------------------------------------
// The consistent affine example
// ---------------------------------------------------------------------------

/// Canonical minimizer of the affine pre-variance: the orthogonal projection
/// of the sample mean onto V-perp (the V component of any minimizer is free,
/// so the canonical representative has it zeroed).
inline TemplateVector affine_prevariance_minimizer(
    const ObservationSample& sample, const std::vector<TemplateVector>& subspace_basis) {
  require(!sample.observations.empty(), "empty sample");
  for (std::size_t i = 0; i < subspace_basis.size(); ++i) {
    require(subspace_basis[i].size() == sample.dimension(), "basis dimension mismatch");
    for (std::size_t j = 0; j <= i; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      require(std::abs(inner(subspace_basis[i], subspace_basis[j]) - want) <= 1e-9,
              "subspace basis must be orthonormal");
    }
  }
  TemplateVector mean(sample.dimension(), 0.0);
  for (const auto& y : sample.observations)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += y[j];
  mean = (1.0 / static_cast<double>(sample.size())) * mean;
  return mean - project_onto(subspace_basis, mean);
}

// ---------------------------------------------------------------------------
// Restricted registration (regularization by a ball in the group)
// ---------------------------------------------------------------------------

/// Pre-variance with the registration restricted to shifts within radius r of
/// the identity: (1/I) sum_i min over admissible g of ||g.m - Y_i||^2.
/// r >= N/2 admits the whole group and reproduces empirical_variance.
inline double prevariance_restricted(const TemplateVector& m, const ObservationSample& sample,
                                     std::size_t ball_radius) {
  require(!sample.observations.empty(), "empty sample");
  const ActionDescriptor& action = sample.meta.action;
  require(action.kind == ActionKind::cyclic_shift, "restricted pre-variance is cyclic-only");
  require(m.size() == sample.dimension(), "dimension mismatch");
  const std::size_t n = m.size();

  std::vector<std::size_t> admissible;
  for (std::size_t k = 0; k < n; ++k)
    if (std::min(k, n - k) <= ball_radius) admissible.push_back(k);
  require(!admissible.empty(), "empty admissible set");

  double sum = 0.0;
  for (const auto& y : sample.observations) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : admissible) {
      // ||shift_k(m) - y|| via the isometric rewrite ||m - shift_{n-k}(y)||,
      // which keeps the summation order identical to empirical_variance.
      best = std::min(best, detail::shifted_dist2(m, y, (n - k) % n));
    }
    sum += best;
  }
  return sum / static_cast<double>(sample.size());
}

// ---------------------------------------------------------------------------
// A concrete finite non-invariant linear action
// ---------------------------------------------------------------------------

/// Cyclic shift conjugated by a fixed invertible diagonal matrix:
/// g_k . x = D shift_k(D^{-1} x). Linear, finite, and non-isometric as soon
/// as D is not a multiple of the identity.
class ConjugatedCyclicAction {
 public:
  explicit ConjugatedCyclicAction(std::vector<double> diagonal)
      : diagonal_(std::move(diagonal)) {
    require(!diagonal_.empty(), "empty diagonal");
    for (double d : diagonal_) require(d != 0.0, "diagonal entries must be nonzero");
  }

  /// Diagonal entries drawn uniformly in [0.9, 1.1].
  static ConjugatedCyclicAction random(std::size_t n, std::uint64_t seed) {
    const RandomStream stream = RandomStream::derive(seed, "conjugation_diag");
    std::vector<double> diag(n);
    for (std::size_t j = 0; j < n; ++j) diag[j] = 0.9 + 0.2 * stream.uniform01(j);
    return ConjugatedCyclicAction(std::move(diag));
  }

  std::size_t dimension() const { return diagonal_.size(); }
  std::size_t order() const { return diagonal_.size(); }
  const std::vector<double>& diagonal() const { return diagonal_; }

  TemplateVector apply(std::size_t k, const TemplateVector& x) const {
    const std::size_t n = dimension();
    require(x.size() == n, "dimension mismatch");
    TemplateVector r(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t src = (j + k) % n;
      r[j] = diagonal_[j] * (x[src] / diagonal_[src]);
    }
    return r;
  }

  /// All group images of x, in element order g_0 .. g_{n-1}.
  std::vector<TemplateVector> orbit_of(const TemplateVector& x) const {
    std::vector<TemplateVector> out;
    out.reserve(order());
    for (std::size_t k = 0; k < order(); ++k) out.push_back(apply(k, x));
    return out;
  }

 private:
  std::vector<double> diagonal_;
};

inline OrbitBounds measure_orbit_bounds(const TemplateVector& t0,
                                        const ConjugatedCyclicAction& action) {
  const double n0 = norm(t0);
  require(n0 > 0.0, "template norm must be positive");
  OrbitBounds b{std::numeric_limits<double>::infinity(), 0.0, n0};
  for (std::size_t k = 0; k < action.order(); ++k) {
    const double ratio = norm(action.apply(k, t0)) / n0;
    b.a = std::min(b.a, ratio);
    b.A = std::max(b.A, ratio);
  }
  return b;
}

/// min_g ||g.a - b||: the (asymmetric) pre-distance of the conjugated action.
inline double pre_distance(const TemplateVector& a, const TemplateVector& b,
                           const ConjugatedCyclicAction& action) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < action.order(); ++k)
    best = std::min(best, distance(action.apply(k, a), b));
  return best;
}

/// Per-observation terms min_g ||g.m - Y_i||^2 of the empirical pre-variance.
inline std::vector<double> prevariance_terms(const TemplateVector& m,
                                             const std::vector<TemplateVector>& observations,
                                             const ConjugatedCyclicAction& action) {
  require(!observations.empty(), "empty sample");
  const auto images = action.orbit_of(m);
  std::vector<double> terms(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& gm : images) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < gm.size(); ++j) {
        const double d = gm[j] - observations[i][j];
        d2 += d * d;
      }
      best = std::min(best, d2);
    }
    terms[i] = best;
  }
  return terms;
}

inline double prevariance(const TemplateVector& m,
                          const std::vector<TemplateVector>& observations,
                          const ConjugatedCyclicAction& action) {
  const auto terms = prevariance_terms(m, observations, action);
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

/// Empirical lambda(t0) = (1/(I |t0|^2)) sum_i max_g <g.t0, Y_i>: the scaling
/// factor whose multiple of t0 witnesses the inconsistency.
inline double lambda_t0_empirical(const TemplateVector& t0,
                                  const std::vector<TemplateVector>& observations,
                                  const ConjugatedCyclicAction& action) {
  require(!observations.empty(), "empty sample");
  const auto images = action.orbit_of(t0);
  double sum = 0.0;
  for (const auto& y : observations) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gt : images) best = std::max(best, inner(gt, y));
    sum += best;
  }
  return sum / (static_cast<double>(observations.size()) * norm_squared(t0));
}

/// MC estimate of theta(t0) under the conjugated action.
inline ThetaPositivity theta_positivity_check(const TemplateVector& t0,
                                              const NoiseSpec& noise,
                                              const ConjugatedCyclicAction& action,
                                              std::size_t n_mc, std::uint64_t seed) {
  require(norm(t0) > 0.0, "template norm must be positive");
  require(n_mc >= 2, "n_mc must be >= 2");
  const auto images = action.orbit_of(t0);
  const RandomStream stream = RandomStream::derive(seed, "theta_t0_eps");
  const double inv_norm = 1.0 / norm(t0);
  std::vector<double> terms(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    const TemplateVector eps = draw_noise(noise, stream, i);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gt : images) best = std::max(best, inner(gt, eps));
    terms[i] = inv_norm * best;
  }
  ThetaPositivity out;
  out.hypothesis_ok = true;
  double sum = 0.0;
  for (double t : terms) sum += t;
  out.estimate = sum / static_cast<double>(n_mc);
  double ss = 0.0;
  for (double t : terms) ss += (t - out.estimate) * (t - out.estimate);
  out.std_error =
      std::sqrt(ss / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
  out.positive = out.estimate > 4.0 * out.std_error;
  return out;
}

/// Observations Y_i = g_{phi_i}.t0 + sigma eps_i under the conjugated action,
/// phi uniform over the group. Same substream discipline as the model module.
inline std::vector<TemplateVector> sample_conjugated(const TemplateVector& t0, double sigma,
                                                     const NoiseSpec& noise,
                                                     const ConjugatedCyclicAction& action,
                                                     std::size_t count, std::uint64_t seed) {
  require(sigma >= 0.0, "sigma must be >= 0");
  require(count >= 1, "need at least one observation");
  const RandomStream phi = RandomStream::derive(seed, "phi");
  const RandomStream eps = RandomStream::derive(seed, "eps");
  const std::size_t n = action.order();
  std::vector<TemplateVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(
                                                    phi.uniform01(i) * static_cast<double>(n)));
    TemplateVector y = action.apply(k, t0);
    if (sigma > 0.0) {
      const TemplateVector e = draw_noise(noise, eps, i);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += sigma * e[j];
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace qmean
