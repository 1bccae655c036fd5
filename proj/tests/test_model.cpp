#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qmean/model.hpp"
#include "test_helpers.hpp"

using namespace qmean;
using qmean::testkit::basis_vector;
using qmean::testkit::random_vector;

TEST_CASE("gaussian noise is standardized by construction") {
  CHECK(gaussian_noise(4).per_coordinate_std == 0.5);
  CHECK(gaussian_noise(64).per_coordinate_std == 0.125);
  const NoiseSpec again = standardize_noise(gaussian_noise(4));
  CHECK(again.per_coordinate_std == 0.5);
}

TEST_CASE("finite-support standardization recenters and rescales") {
  NoiseSpec raw;
  raw.kind = NoiseKind::finite_support;
  raw.dimension = 2;
  raw.atoms = {TemplateVector{2, 0}, TemplateVector{-2, 0}};
  raw.probabilities = {0.5, 0.5};
  const NoiseSpec spec = standardize_noise(raw);
  CHECK(spec.atoms[0] == TemplateVector{1, 0});
  CHECK(spec.atoms[1] == TemplateVector{-1, 0});

  // Idempotence: an already-standard spec comes back unchanged.
  const NoiseSpec twice = standardize_noise(spec);
  CHECK(twice.atoms == spec.atoms);
  CHECK(twice.probabilities == spec.probabilities);
}

TEST_CASE("degenerate finite-support noise is rejected") {
  NoiseSpec raw;
  raw.kind = NoiseKind::finite_support;
  raw.dimension = 2;
  raw.atoms = {TemplateVector{3, 3}};
  raw.probabilities = {1.0};
  CHECK_THROWS_AS(standardize_noise(raw), ContractViolation);  // zero variance
}

TEST_CASE("noiseless fixed-identity sampling reproduces the template") {
  const TemplateVector t0 = random_vector(8, 5);
  const ObservationSample sample =
      sample_observations(t0, 0.0, fixed_law(Identity{}), gaussian_noise(8), 10, 3,
                          ActionDescriptor::cyclic(8));
  for (const auto& y : sample.observations) CHECK(y == t0);
}

TEST_CASE("noiseless uniform sampling stays on the orbit") {
  const TemplateVector t0 = random_vector(8, 6);
  const ActionDescriptor action = ActionDescriptor::cyclic(8);
  const ObservationSample sample =
      sample_observations(t0, 0.0, uniform_cyclic_law(8), gaussian_noise(8), 64, 3, action);
  const auto orb = orbit(t0, action);
  for (const auto& y : sample.observations)
    CHECK(std::find(orb.begin(), orb.end(), y) != orb.end());
}

TEST_CASE("per-coordinate noise scale is sigma over sqrt(N)") {
  const std::size_t n = 64;
  const double sigma = 10.0;
  const TemplateVector t0(n, 0.0);
  const ObservationSample sample = sample_observations(
      t0, sigma, fixed_law(Identity{}), gaussian_noise(n), 2000, 17,
      ActionDescriptor::cyclic(n));
  double ss = 0.0;
  std::size_t count = 0;
  for (const auto& y : sample.observations)
    for (double v : y.values) {
      ss += v * v;
      ++count;
    }
  const double sd = std::sqrt(ss / static_cast<double>(count));
  // Per-coordinate std 10/8 = 1.25; the MC error of sd is ~ sd/sqrt(2*count).
  const double tol = 4.0 * 1.25 / std::sqrt(2.0 * static_cast<double>(count));
  CHECK(std::abs(sd - 1.25) <= tol);
}

TEST_CASE("identical seeds give bit-identical samples") {
  const TemplateVector t0 = random_vector(16, 9);
  const auto make = [&] {
    return sample_observations(t0, 3.0, uniform_cyclic_law(16), gaussian_noise(16), 50, 1234,
                               ActionDescriptor::cyclic(16));
  };
  const ObservationSample a = make();
  const ObservationSample b = make();
  CHECK(a.observations == b.observations);
  CHECK(a.transforms == b.transforms);
}

TEST_CASE("growing the sample does not perturb earlier draws") {
  const TemplateVector t0 = random_vector(16, 10);
  const auto small = sample_observations(t0, 2.0, uniform_cyclic_law(16), gaussian_noise(16),
                                         50, 777, ActionDescriptor::cyclic(16));
  const auto large = sample_observations(t0, 2.0, uniform_cyclic_law(16), gaussian_noise(16),
                                         100, 777, ActionDescriptor::cyclic(16));
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(small.observations[i] == large.observations[i]);
    CHECK(small.transforms[i] == large.transforms[i]);
  }
}

TEST_CASE("noise moments match the standardization") {
  const std::size_t n = 16;
  const std::size_t draws = 20000;
  const NoiseSpec noise = gaussian_noise(n);
  const RandomStream stream = RandomStream::derive(4242, "eps");
  TemplateVector mean(n, 0.0);
  double second = 0.0;
  std::vector<double> norms2(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const TemplateVector eps = draw_noise(noise, stream, i);
    for (std::size_t j = 0; j < n; ++j) mean[j] += eps[j];
    norms2[i] = norm_squared(eps);
    second += norms2[i];
  }
  mean = (1.0 / static_cast<double>(draws)) * mean;
  second /= static_cast<double>(draws);
  // E(eps) = 0: each coordinate has std 1/(sqrt(n) sqrt(draws)).
  const double coord_se = 1.0 / std::sqrt(static_cast<double>(n * draws));
  for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(mean[j]) <= 4.0 * coord_se);
  double var2 = 0.0;
  for (double v : norms2) var2 += (v - second) * (v - second);
  const double se2 = std::sqrt(var2 / static_cast<double>(draws - 1) /
                               static_cast<double>(draws));
  CHECK(std::abs(second - 1.0) <= 4.0 * se2);
}

TEST_CASE("fixed transformation laws always draw their element") {
  const TransformationLaw law = fixed_law(CyclicShift(3, 8));
  const RandomStream stream = RandomStream::derive(1, "phi");
  for (std::uint64_t i = 0; i < 10; ++i)
    CHECK(draw_transform(law, stream, i) == GroupElement{CyclicShift(3, 8)});
}

TEST_CASE("discrete laws validate their weights") {
  CHECK_THROWS_AS(discrete_law({Identity{}}, {0.5}), ContractViolation);
  CHECK_THROWS_AS(discrete_law({Identity{}, Identity{}}, {1.5, -0.5}), ContractViolation);
}

TEST_CASE("sampling validates its inputs") {
  const TemplateVector t0 = random_vector(4, 2);
  NoiseSpec bad = gaussian_noise(4);
  bad.per_coordinate_std = 1.0;  // not standardized
  CHECK_THROWS_AS(sample_observations(t0, 1.0, fixed_law(Identity{}), bad, 5, 1,
                                      ActionDescriptor::cyclic(4)),
                  ContractViolation);
  CHECK_THROWS_AS(sample_observations(t0, -1.0, fixed_law(Identity{}), gaussian_noise(4), 5,
                                      1, ActionDescriptor::cyclic(4)),
                  ContractViolation);
  CHECK_THROWS_AS(sample_observations(t0, 1.0, fixed_law(Identity{}), gaussian_noise(4), 0,
                                      1, ActionDescriptor::cyclic(4)),
                  ContractViolation);
}

TEST_CASE("random streams are label-independent and addressable") {
  const RandomStream phi = RandomStream::derive(42, "phi");
  const RandomStream eps = RandomStream::derive(42, "eps");
  CHECK(phi.key() != eps.key());
  CHECK(phi.bits(0) != phi.bits(1));
  // Counter addressing is stateless: same counter, same value.
  CHECK(phi.bits(17) == phi.bits(17));
  const double u = phi.uniform01(3);
  CHECK(u > 0.0);
  CHECK(u <= 1.0);
}
