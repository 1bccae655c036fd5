#include <catch2/catch_amalgamated.hpp>

#include "qmean/model.hpp"
#include "qmean/quotient.hpp"
#include "test_helpers.hpp"

using namespace qmean;
using qmean::testkit::basis_vector;
using qmean::testkit::random_vector;
using qmean::testkit::unit_vector;

TEST_CASE("quotient distance matches the rotation picture") {
  const auto q = quotient_distance({0, 1}, {-2, 0}, ActionDescriptor::rotation(2));
  CHECK_THAT(q.distance, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(*q.sup_inner, Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("quotient distance vanishes on the diagonal and on orbits") {
  const TemplateVector a = random_vector(8, 1);
  CHECK(quotient_distance(a, a, ActionDescriptor::cyclic(8)).distance <= 1e-12);
  const TemplateVector moved = apply(GroupElement{CyclicShift(3, 8)}, a);
  CHECK(quotient_distance(a, moved, ActionDescriptor::cyclic(8)).distance <= 1e-12);
}

TEST_CASE("cyclic quotient distance equals the explicit shift minimum") {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const TemplateVector a = random_vector(8, 2 * trial + 500);
    const TemplateVector b = random_vector(8, 2 * trial + 501);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 8; ++k)
      best = std::min(best, distance(a, apply(CyclicShift(k, 8), b)));
    CHECK_THAT(quotient_distance(a, b, ActionDescriptor::cyclic(8)).distance,
               Catch::Matchers::WithinRel(best, 1e-12));
  }
}

TEST_CASE("pseudo-distance axioms") {
  const ActionDescriptor action = ActionDescriptor::cyclic(16);
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    const TemplateVector a = random_vector(16, 3 * trial);
    const TemplateVector b = random_vector(16, 3 * trial + 1);
    const double d = quotient_distance(a, b, action).distance;
    CHECK(d >= 0.0);
    CHECK(d <= distance(a, b) + 1e-12);
    // Symmetry for an invariant action.
    CHECK(std::abs(d - quotient_distance(b, a, action).distance) <= 1e-9);
    // Invariance of the first argument under the group.
    const TemplateVector ga = apply(GroupElement{CyclicShift(trial % 16, 16)}, a);
    CHECK(std::abs(d - quotient_distance(ga, b, action).distance) <= 1e-9);
  }
}

TEST_CASE("affine quotient distance is the orthogonal-complement gap") {
  const std::vector<TemplateVector> basis{basis_vector(3, 0)};
  const ActionDescriptor action = ActionDescriptor::affine(3, basis);
  const TemplateVector a{10, 1, 0};
  const TemplateVector b{-7, 0, 2};
  const auto q = quotient_distance(a, b, action);
  CHECK_THAT(q.distance, Catch::Matchers::WithinRel(std::sqrt(5.0), 1e-12));
  CHECK_FALSE(q.sup_inner.has_value());
  CHECK(std::abs(q.distance - quotient_distance(b, a, action).distance) <= 1e-12);
}

TEST_CASE("polarization identity holds to rounding error") {
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    const TemplateVector a = random_vector(16, 7 * trial);
    const TemplateVector b = random_vector(16, 7 * trial + 3);
    const double scale = std::max(1.0, norm_squared(a) + norm_squared(b));
    CHECK(polarization_check(a, b, ActionDescriptor::cyclic(16)) <= 1e-9 * scale);
    CHECK(polarization_check(a, b, ActionDescriptor::rotation(16)) <= 1e-9 * scale);
  }
  const TemplateVector zero(4, 0.0);
  CHECK(polarization_check(zero, random_vector(4, 2), ActionDescriptor::cyclic(4)) == 0.0);
  CHECK_THROWS_AS(polarization_check(random_vector(4, 1), random_vector(4, 2),
                                     ActionDescriptor::affine(4, {basis_vector(4, 0)})),
                  UnsupportedAction);
}

TEST_CASE("theta of the trivial action is centered at zero") {
  const TemplateVector v = unit_vector(16, 42);
  const RegistrationScore score =
      theta(v, gaussian_noise(16), ActionDescriptor::trivial(16), 4000, 9);
  CHECK(std::abs(score.value) <= 4.0 * score.std_error);
  CHECK(score.n_samples == 4000);
}

TEST_CASE("theta of the rotation action estimates the mean noise norm") {
  const std::size_t n = 16;
  const TemplateVector v = unit_vector(n, 5);
  const RegistrationScore score =
      theta(v, gaussian_noise(n), ActionDescriptor::rotation(n), 20000, 11);
  const double chi_mean = std::sqrt(2.0 / static_cast<double>(n)) *
                          std::exp(std::lgamma((n + 1.0) / 2.0) - std::lgamma(n / 2.0));
  CHECK(std::abs(score.value - chi_mean) <= 4.0 * score.std_error);
}

TEST_CASE("theta matches the finite-support enumeration oracle") {
  // eps uniform on {+e1, -e1} in R^4; theta(e1) enumerates to
  // 0.5 * (max_k <e1, shift_k e1> + max_k <e1, -shift_k e1>) = 0.5.
  const std::size_t n = 4;
  const NoiseSpec noise =
      finite_support_noise({basis_vector(n, 0), -1.0 * basis_vector(n, 0)}, {0.5, 0.5});
  const TemplateVector v = basis_vector(n, 0);
  double exact = 0.0;
  for (std::size_t atom = 0; atom < noise.atoms.size(); ++atom) {
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      sup = std::max(sup, inner(v, apply(CyclicShift(k, n), noise.atoms[atom])));
    exact += noise.probabilities[atom] * sup;
  }
  CHECK_THAT(exact, Catch::Matchers::WithinAbs(0.5, 1e-15));
  const RegistrationScore score =
      theta(v, noise, ActionDescriptor::cyclic(n), 4000, 77);
  CHECK(std::abs(score.value - exact) <= 4.0 * score.std_error);
}

TEST_CASE("theta stays within the unit bound for standardized noise") {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const TemplateVector v = unit_vector(8, 100 + trial);
    const RegistrationScore score =
        theta(v, gaussian_noise(8), ActionDescriptor::cyclic(8), 3000, trial);
    CHECK(score.value >= -4.0 * score.std_error);
    CHECK(score.value <= 1.0 + 4.0 * score.std_error);
  }
}

TEST_CASE("theta rejects non-unit directions") {
  CHECK_THROWS_AS(
      theta(random_vector(8, 1), gaussian_noise(8), ActionDescriptor::cyclic(8), 10, 1),
      ContractViolation);
}

TEST_CASE("lambda score of an all-zero sample is zero") {
  ObservationSample sample;
  sample.observations.assign(5, TemplateVector(4, 0.0));
  sample.meta.action = ActionDescriptor::cyclic(4);
  const RegistrationScore s =
      lambda_score(basis_vector(4, 0), sample, sample.meta.action);
  CHECK(s.value == 0.0);
  CHECK(s.positive_part() == 0.0);
}

TEST_CASE("lambda score under the trivial action is the inner product with the mean") {
  const std::size_t n = 6;
  const ActionDescriptor action = ActionDescriptor::trivial(n);
  const TemplateVector t0 = random_vector(n, 3);
  const ObservationSample sample = sample_observations(
      t0, 1.0, fixed_law(Identity{}), gaussian_noise(n), 50, 12, action);
  TemplateVector mean(n, 0.0);
  for (const auto& y : sample.observations)
    for (std::size_t j = 0; j < n; ++j) mean[j] += y[j];
  mean = (1.0 / 50.0) * mean;
  const TemplateVector v = unit_vector(n, 8);
  const RegistrationScore s = lambda_score(v, sample, action);
  CHECK_THAT(s.value, Catch::Matchers::WithinAbs(inner(v, mean), 1e-12));
}

TEST_CASE("lambda score of a noiseless orbit sample enumerates exactly") {
  const std::size_t n = 8;
  const ActionDescriptor action = ActionDescriptor::cyclic(n);
  const TemplateVector t0 = random_vector(n, 21);
  const ObservationSample sample = sample_observations(
      t0, 0.0, uniform_cyclic_law(n), gaussian_noise(n), 40, 5, action);
  const TemplateVector v = unit_vector(n, 30);
  // Every observation lies on the orbit of t0, so each term is the same sup.
  const double expected = sup_inner_over_orbit(v, t0, action);
  const RegistrationScore s = lambda_score(v, sample, action);
  CHECK_THAT(s.value, Catch::Matchers::WithinAbs(expected, 1e-9));
}

TEST_CASE("the counterexample points admit no congruent triple") {
  const TemplateVector p1{0, 5, 0, 0, 0};
  const TemplateVector p2{0, 3, 2, 0, 0};
  const TemplateVector p3{2, 3, 0, 0, 0};
  const auto result = congruent_triple_exists(p1, p2, p3, ActionDescriptor::cyclic(5));
  CHECK_FALSE(result.exists);
}

TEST_CASE("three points of a single orbit form a congruent triple") {
  const TemplateVector p = random_vector(6, 77);
  const ActionDescriptor action = ActionDescriptor::cyclic(6);
  const auto orb = orbit(p, action);
  REQUIRE(orb.size() >= 3);
  const auto result = congruent_triple_exists(orb[0], orb[1], orb[2], action);
  CHECK(result.exists);
  const double d01 = quotient_distance(orb[0], orb[1], action).distance;
  CHECK(std::abs(distance(result.witness[0], result.witness[1]) - d01) <= 1e-9);
}

TEST_CASE("a fixed-point third point reduces the triple condition") {
  const TemplateVector p1{0, 5, 0, 0, 0};
  const TemplateVector p2{0, 3, 2, 0, 0};
  const TemplateVector p3(5, 1.5);  // constant: fixed point of the shift
  const auto result = congruent_triple_exists(p1, p2, p3, ActionDescriptor::cyclic(5));
  CHECK(result.exists);
}

TEST_CASE("congruent triple search needs a finite group") {
  CHECK_THROWS_AS(congruent_triple_exists(random_vector(4, 1), random_vector(4, 2),
                                          random_vector(4, 3), ActionDescriptor::rotation(4)),
                  UnsupportedAction);
}
