#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qmean/actions.hpp"
#include "qmean/core.hpp"
#include "qmean/model.hpp"

namespace qmean {

/// sup_g <v, g.y> over the acting group (isometric actions only; the affine
/// translation group makes this supremum infinite).
inline double sup_inner_over_orbit(const TemplateVector& v, const TemplateVector& y,
                                   const ActionDescriptor& action) {
  require_same_dimension(v, y);
  switch (action.kind) {
    case ActionKind::cyclic_shift: {
      std::vector<double> corr;
      detail::circular_correlation(v, y, corr);
      double best = corr[0];
      for (double c : corr) best = std::max(best, c);
      return best;
    }
    case ActionKind::rotation:
      return norm(v) * norm(y);
    case ActionKind::trivial:
      return inner(v, y);
    case ActionKind::affine_translation:
      throw UnsupportedAction("sup of inner products is unbounded for affine translations");
  }
  throw Error("unreachable");
}

struct QuotientDistanceResult {
  double distance = 0.0;
  GroupElement registering_element;
  std::optional<double> sup_inner;  // isometric actions only
};

/// d_Q([a],[b]) = inf_g ||a - g.b||.
inline QuotientDistanceResult quotient_distance(const TemplateVector& a,
                                                const TemplateVector& b,
                                                const ActionDescriptor& action) {
  const RegistrationResult reg = registration(a, b, action);
  QuotientDistanceResult out;
  out.distance = reg.distance;
  out.registering_element = reg.element;
  if (action.isometric()) out.sup_inner = inner(a, qmean::apply(reg.element, b));
  return out;
}

/// Residual of the polarization identity
/// sup_g <a, g.b> = (|a|^2 + |b|^2 - d_Q^2([a],[b])) / 2.
inline double polarization_check(const TemplateVector& a, const TemplateVector& b,
                                 const ActionDescriptor& action) {
  if (!action.isometric())
    throw UnsupportedAction("polarization identity needs an isometric action");
  const QuotientDistanceResult q = quotient_distance(a, b, action);
  const double rhs =
      0.5 * (norm_squared(a) + norm_squared(b) - q.distance * q.distance);
  return std::abs(*q.sup_inner - rhs);
}

// ---------------------------------------------------------------------------
// Registration scores
// ---------------------------------------------------------------------------

/// Monte-Carlo (or empirical) estimate of a registration score along a unit
/// direction: theta(v) against the noise, lambda(v) against observations.
struct RegistrationScore {
  TemplateVector direction;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;

  double positive_part() const { return value > 0.0 ? value : 0.0; }
};

namespace detail {

inline void require_unit(const TemplateVector& v) {
  require(std::abs(norm(v) - 1.0) <= 1e-9, "direction must be a unit vector");
}

inline RegistrationScore score_from_terms(TemplateVector direction,
                                          const std::vector<double>& terms) {
  RegistrationScore score;
  score.direction = std::move(direction);
  score.n_samples = terms.size();
  double sum = 0.0;
  for (double t : terms) sum += t;
  score.value = sum / static_cast<double>(terms.size());
  if (terms.size() > 1) {
    double ss = 0.0;
    for (double t : terms) {
      const double d = t - score.value;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(terms.size() - 1);
    score.std_error = std::sqrt(var / static_cast<double>(terms.size()));
  }
  return score;
}

}  // namespace detail

/// theta(v) = E(sup_g <v, g.eps>), estimated with n_mc fresh noise draws.
inline RegistrationScore theta(const TemplateVector& v, const NoiseSpec& noise,
                               const ActionDescriptor& action, std::size_t n_mc,
                               std::uint64_t seed) {
  detail::require_unit(v);
  require(n_mc >= 1, "n_mc must be >= 1");
  require(noise.dimension == v.size(), "noise dimension mismatch");
  const RandomStream stream = RandomStream::derive(seed, "theta_eps");
  std::vector<double> terms(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i)
    terms[i] = sup_inner_over_orbit(v, draw_noise(noise, stream, i), action);
  return detail::score_from_terms(v, terms);
}

/// lambda(v) = empirical mean of sup_g <v, g.Y_i>; lambda-tilde is its
/// positive part (RegistrationScore::positive_part).
inline RegistrationScore lambda_score(const TemplateVector& v, const ObservationSample& sample,
                                      const ActionDescriptor& action) {
  detail::require_unit(v);
  require(!sample.observations.empty(), "empty sample");
  std::vector<double> terms(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i)
    terms[i] = sup_inner_over_orbit(v, sample.observations[i], action);
  return detail::score_from_terms(v, terms);
}

// ---------------------------------------------------------------------------
// Congruent sections
// ---------------------------------------------------------------------------

struct CongruentTripleResult {
  bool exists = false;
  std::array<TemplateVector, 3> witness;  // valid when exists
};

/// Searches for representatives x in [p1], y in [p2], z in [p3] whose pairwise
/// ambient distances all equal the corresponding quotient distances. The
/// representative of p1 is fixed (any common transform of a valid triple is
/// again valid under an isometric action), so the search is over G^2.
inline CongruentTripleResult congruent_triple_exists(const TemplateVector& p1,
                                                     const TemplateVector& p2,
                                                     const TemplateVector& p3,
                                                     const ActionDescriptor& action) {
  if (!action.finite_group())
    throw UnsupportedAction("congruent-triple search needs a finite group");
  require_same_dimension(p1, p2);
  require_same_dimension(p1, p3);

  const double d12 = quotient_distance(p1, p2, action).distance;
  const double d13 = quotient_distance(p1, p3, action).distance;
  const double d23 = quotient_distance(p2, p3, action).distance;
  const double scale = std::max({1.0, norm(p1), norm(p2), norm(p3)});
  const double tol = 1e-9 * scale;

  const std::vector<GroupElement> elements = group_elements(action);
  CongruentTripleResult out;
  for (const GroupElement& g2 : elements) {
    const TemplateVector y = qmean::apply(g2, p2);
    if (std::abs(distance(p1, y) - d12) > tol) continue;
    for (const GroupElement& g3 : elements) {
      const TemplateVector z = qmean::apply(g3, p3);
      if (std::abs(distance(p1, z) - d13) > tol) continue;
      if (std::abs(distance(y, z) - d23) > tol) continue;
      out.exists = true;
      out.witness = {p1, y, z};
      return out;
    }
  }
  return out;
}

}  // namespace qmean
