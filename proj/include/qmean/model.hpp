#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qmean/actions.hpp"
#include "qmean/core.hpp"
#include "qmean/rng.hpp"

namespace qmean {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { gaussian_iid, finite_support };

/// Standardized noise distribution: E(eps) = 0 and E(|eps|^2) = 1.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian_iid;
  std::size_t dimension = 0;
  double per_coordinate_std = 0.0;          // gaussian_iid: 1/sqrt(N)
  std::vector<TemplateVector> atoms;        // finite_support
  std::vector<double> probabilities;        // finite_support
};

inline NoiseSpec gaussian_noise(std::size_t n) {
  require(n >= 1, "noise dimension must be >= 1");
  return {NoiseKind::gaussian_iid, n, 1.0 / std::sqrt(static_cast<double>(n)), {}, {}};
}

namespace detail {

inline void check_standardized(const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::gaussian_iid) {
    const double second =
        static_cast<double>(spec.dimension) * spec.per_coordinate_std * spec.per_coordinate_std;
    require(std::abs(second - 1.0) <= 1e-12, "gaussian noise is not standardized");
    return;
  }
  require(!spec.atoms.empty(), "finite-support noise needs atoms");
  require(spec.atoms.size() == spec.probabilities.size(), "atoms/probabilities size mismatch");
  double psum = 0.0, second = 0.0;
  TemplateVector mean(spec.dimension, 0.0);
  for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
    require(spec.atoms[i].size() == spec.dimension, "atom dimension mismatch");
    require(spec.probabilities[i] >= 0.0, "negative probability");
    psum += spec.probabilities[i];
    second += spec.probabilities[i] * norm_squared(spec.atoms[i]);
    for (std::size_t j = 0; j < spec.dimension; ++j)
      mean[j] += spec.probabilities[i] * spec.atoms[i][j];
  }
  require(std::abs(psum - 1.0) <= 1e-12, "probabilities must sum to 1");
  require(norm(mean) <= 1e-12, "finite-support noise is not centered");
  require(std::abs(second - 1.0) <= 1e-12, "finite-support noise second moment != 1");
}

}  // namespace detail

inline NoiseSpec finite_support_noise(std::vector<TemplateVector> atoms,
                                      std::vector<double> probabilities) {
  require(!atoms.empty(), "finite-support noise needs atoms");
  NoiseSpec spec{NoiseKind::finite_support, atoms.front().size(), 0.0, std::move(atoms),
                 std::move(probabilities)};
  detail::check_standardized(spec);
  return spec;
}

/// Recenter and rescale to exact standardization. Gaussian specs come back
/// with per-coordinate std 1/sqrt(N); already-standard specs are unchanged.
inline NoiseSpec standardize_noise(const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::gaussian_iid) {
    NoiseSpec out = spec;
    out.per_coordinate_std = 1.0 / std::sqrt(static_cast<double>(spec.dimension));
    return out;
  }
  require(!spec.atoms.empty(), "finite-support noise needs atoms");
  require(spec.atoms.size() == spec.probabilities.size(), "atoms/probabilities size mismatch");
  double psum = 0.0;
  for (double p : spec.probabilities) {
    require(p >= 0.0, "negative probability");
    psum += p;
  }
  require(psum > 0.0, "probabilities sum to 0");

  NoiseSpec out = spec;
  for (double& p : out.probabilities) p /= psum;

  TemplateVector mean(spec.dimension, 0.0);
  for (std::size_t i = 0; i < out.atoms.size(); ++i)
    for (std::size_t j = 0; j < spec.dimension; ++j)
      mean[j] += out.probabilities[i] * out.atoms[i][j];
  double second = 0.0;
  for (std::size_t i = 0; i < out.atoms.size(); ++i) {
    out.atoms[i] = out.atoms[i] - mean;
    second += out.probabilities[i] * norm_squared(out.atoms[i]);
  }
  require(second > 0.0, "degenerate noise: zero variance after centering");
  const double scale = 1.0 / std::sqrt(second);
  for (auto& a : out.atoms) a = scale * a;

  // Make the second moment exactly 1 (idempotent on already-standard input).
  double check = 0.0;
  for (std::size_t i = 0; i < out.atoms.size(); ++i)
    check += out.probabilities[i] * norm_squared(out.atoms[i]);
  if (check != 1.0 && check > 0.0) {
    const double fix = 1.0 / std::sqrt(check);
    for (auto& a : out.atoms) a = fix * a;
  }
  return out;
}

/// One noise realization, addressed by draw index so streams stay stable when
/// the sample size changes.
inline TemplateVector draw_noise(const NoiseSpec& spec, const RandomStream& stream,
                                 std::uint64_t index) {
  const std::size_t n = spec.dimension;
  if (spec.kind == NoiseKind::gaussian_iid) {
    TemplateVector eps(n);
    for (std::size_t j = 0; j < n; ++j)
      eps[j] = spec.per_coordinate_std * stream.gaussian(index * n + j);
    return eps;
  }
  const double u = stream.uniform01(index);
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
    acc += spec.probabilities[i];
    if (u <= acc || i + 1 == spec.atoms.size()) return spec.atoms[i];
  }
  return spec.atoms.back();
}

// ---------------------------------------------------------------------------
// Transformation law
// ---------------------------------------------------------------------------

enum class LawKind { uniform_finite, fixed_element, custom_discrete };

/// Discrete distribution of the random group element Phi.
struct TransformationLaw {
  LawKind kind = LawKind::fixed_element;
  std::vector<GroupElement> elements;
  std::vector<double> weights;
};

inline TransformationLaw fixed_law(GroupElement g) {
  return {LawKind::fixed_element, {std::move(g)}, {1.0}};
}

inline TransformationLaw uniform_cyclic_law(std::size_t n) {
  TransformationLaw law;
  law.kind = LawKind::uniform_finite;
  law.elements.reserve(n);
  for (std::size_t k = 0; k < n; ++k) law.elements.emplace_back(CyclicShift(k, n));
  law.weights.assign(n, 1.0 / static_cast<double>(n));
  return law;
}

inline TransformationLaw discrete_law(std::vector<GroupElement> elements,
                                      std::vector<double> weights) {
  require(!elements.empty(), "law needs at least one element");
  require(elements.size() == weights.size(), "elements/weights size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "negative weight");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "weights must sum to 1");
  return {LawKind::custom_discrete, std::move(elements), std::move(weights)};
}

inline const GroupElement& draw_transform(const TransformationLaw& law,
                                          const RandomStream& stream, std::uint64_t index) {
  if (law.elements.size() == 1) return law.elements.front();
  const double u = stream.uniform01(index);
  double acc = 0.0;
  for (std::size_t i = 0; i < law.elements.size(); ++i) {
    acc += law.weights[i];
    if (u <= acc || i + 1 == law.elements.size()) return law.elements[i];
  }
  return law.elements.back();
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

struct SampleMeta {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  ActionDescriptor action;
  NoiseSpec noise;
  TransformationLaw law;
  std::string template_id;
  std::size_t count = 0;
};

/// I i.i.d. draws of Y = Phi.t0 + sigma*eps, plus generation metadata.
/// The drawn transforms are kept so simulation-only oracles can undo them.
struct ObservationSample {
  std::vector<TemplateVector> observations;
  std::vector<GroupElement> transforms;
  SampleMeta meta;

  std::size_t size() const { return observations.size(); }
  std::size_t dimension() const {
    return observations.empty() ? 0 : observations.front().size();
  }
};

/// Generates the sample. "phi" and "eps" substreams are independent, and each
/// observation's draws depend only on its index, so growing I extends a sample
/// without changing earlier observations.
inline ObservationSample sample_observations(const TemplateVector& t0, double sigma,
                                             const TransformationLaw& law,
                                             const NoiseSpec& noise, std::size_t count,
                                             std::uint64_t seed,
                                             const ActionDescriptor& action,
                                             std::string template_id = "") {
  validate_vector(t0);
  require(sigma >= 0.0, "sigma must be >= 0");
  require(count >= 1, "need at least one observation");
  require(noise.dimension == t0.size(), "noise dimension mismatch");
  detail::check_standardized(noise);

  const RandomStream phi_stream = RandomStream::derive(seed, "phi");
  const RandomStream eps_stream = RandomStream::derive(seed, "eps");

  ObservationSample sample;
  sample.observations.reserve(count);
  sample.transforms.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const GroupElement& g = draw_transform(law, phi_stream, i);
    TemplateVector y = qmean::apply(g, t0);
    if (sigma > 0.0) {
      const TemplateVector eps = draw_noise(noise, eps_stream, i);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += sigma * eps[j];
    }
    sample.observations.push_back(std::move(y));
    sample.transforms.push_back(g);
  }
  sample.meta = SampleMeta{sigma, seed, action, noise, law, std::move(template_id), count};
  return sample;
}

}  // namespace qmean
