#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qmean/experiments.hpp"
#include "qmean/maxmax.hpp"
#include "qmean/model.hpp"
#include "test_helpers.hpp"

using namespace qmean;
using qmean::testkit::basis_vector;
using qmean::testkit::random_vector;

namespace {

ObservationSample manual_sample(std::vector<TemplateVector> observations, std::size_t n) {
  ObservationSample s;
  s.observations = std::move(observations);
  s.meta.action = ActionDescriptor::cyclic(n);
  s.meta.count = s.observations.size();
  return s;
}

ObservationSample gaussian_cyclic_sample(const TemplateVector& t0, double sigma,
                                         std::size_t count, std::uint64_t seed) {
  const std::size_t n = t0.size();
  return sample_observations(t0, sigma, uniform_cyclic_law(n), gaussian_noise(n), count,
                             seed, ActionDescriptor::cyclic(n));
}

}  // namespace

TEST_CASE("empirical variance of a singleton at its own point is zero") {
  const TemplateVector x = random_vector(8, 1);
  const auto sample = manual_sample({x}, 8);
  CHECK(empirical_variance(x, sample) == 0.0);
}

TEST_CASE("empirical variance vanishes on orbit samples") {
  const TemplateVector t0 = random_vector(8, 2);
  const auto sample = gaussian_cyclic_sample(t0, 0.0, 30, 3);
  CHECK(empirical_variance(t0, sample) <= 1e-18);
}

TEST_CASE("empirical variance matches full enumeration on a tiny instance") {
  const std::size_t n = 4;
  const auto sample = manual_sample(
      {TemplateVector{1, 2, 0, 0}, TemplateVector{0, 3, 1, 0}, TemplateVector{2, 0, 0, 5}},
      n);
  const TemplateVector x{1, 0, 2, 1};
  double expected = 0.0;
  for (const auto& y : sample.observations) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const double d = distance(x, apply(CyclicShift(k, n), y));
      best = std::min(best, d * d);
    }
    expected += best;
  }
  expected /= 3.0;
  CHECK_THAT(empirical_variance(x, sample), Catch::Matchers::WithinRel(expected, 1e-12));
  CHECK_THROWS_AS(empirical_variance(x, manual_sample({}, n)), ContractViolation);
}

TEST_CASE("max-max on a noiseless orbit converges immediately") {
  const std::size_t n = 16;
  const TemplateVector t0 = builtin_template("step", n);  // dyadic entries: exact means
  const auto sample = gaussian_cyclic_sample(t0, 0.0, 32, 4);
  const MaxMaxReport rep = max_max(sample, t0);
  CHECK(rep.iterations == 1);
  CHECK(rep.estimate == t0);
  CHECK(rep.variance_trajectory.back() == 0.0);
}

TEST_CASE("a focal start stays put and fails the karcher check") {
  const std::size_t n = 4;
  const auto sample =
      manual_sample({TemplateVector{1, 0, -1, 0}, TemplateVector{-1, 0, 1, 0}}, n);
  const MaxMaxReport rep = max_max(sample, TemplateVector(n, 0.0));
  CHECK(norm(rep.estimate) == 0.0);
  CHECK_FALSE(rep.karcher_verified);
}

TEST_CASE("max-max terminates with a non-increasing trajectory") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TemplateVector t0 = random_vector(16, 90 + seed, 2.0);
    const auto sample = gaussian_cyclic_sample(t0, 5.0, 300, seed);
    const MaxMaxReport rep = max_max(sample, sample.observations.front());
    for (std::size_t i = 1; i < rep.variance_trajectory.size(); ++i)
      CHECK(rep.variance_trajectory[i] <= rep.variance_trajectory[i - 1] + 1e-9);
    // Termination is an assignment fixed point.
    const auto regs = per_observation_registration(rep.estimate, sample);
    for (std::size_t i = 0; i < regs.size(); ++i)
      CHECK(regs[i].element == rep.assignments_final[i]);
  }
}

TEST_CASE("the iteration cap raises a nontermination error") {
  const TemplateVector t0 = random_vector(8, 200, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 8.0, 100, 6);
  MaxMaxOptions options;
  options.iteration_cap = 1;
  CHECK_THROWS_AS(max_max(sample, sample.observations.front(), options),
                  NonterminationError);
}

TEST_CASE("max-max needs a finite group") {
  ObservationSample sample;
  sample.observations = {random_vector(4, 1)};
  sample.meta.action = ActionDescriptor::rotation(4);
  CHECK_THROWS_AS(max_max(sample, random_vector(4, 2)), UnsupportedAction);
}

TEST_CASE("karcher check on a generic run passes and on ties fails") {
  const TemplateVector t0 = random_vector(16, 300, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 2.0, 200, 7);
  const MaxMaxReport rep = max_max(sample, sample.observations.front());
  CHECK(rep.karcher_verified);

  // Zero reference against non-fixed observations: every shift ties.
  CHECK_FALSE(karcher_check(TemplateVector(16, 0.0), sample));

  // Crafted exact tie: reference (2,1,2,1) sees shifts 0 and 2 of e1 equally.
  const auto tie_sample = manual_sample({TemplateVector{1, 0, 0, 0}}, 4);
  CHECK_FALSE(karcher_check(TemplateVector{2, 1, 2, 1}, tie_sample));
}

TEST_CASE("karcher-verified estimates are local minima under perturbation") {
  const TemplateVector t0 = random_vector(8, 400, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 3.0, 100, 8);
  const MaxMaxReport rep = max_max(sample, sample.observations.front());
  REQUIRE(rep.karcher_verified);
  const double f_hat = empirical_variance(rep.estimate, sample);
  const double radius = 1e-4 * norm(rep.estimate);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    TemplateVector delta = random_vector(8, 5000 + trial);
    delta = (radius / norm(delta)) * delta;
    CHECK(empirical_variance(rep.estimate + delta, sample) >= f_hat - 1e-12);
  }
}

TEST_CASE("one max-max step is the gradient-descent step with rho one half") {
  const TemplateVector t0 = random_vector(16, 500, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 4.0, 150, 9);
  const TemplateVector m = sample.observations.front();
  const auto regs = per_observation_registration(m, sample);
  bool all_unique = true;
  std::vector<GroupElement> assignments;
  for (const auto& r : regs) {
    all_unique = all_unique && r.unique;
    assignments.push_back(r.element);
  }
  REQUIRE(all_unique);
  const TemplateVector average = assignment_mean(sample, assignments);
  // m - 2*rho*(m - average) with rho = 1/2 collapses to the average.
  const double rho = 0.5;
  TemplateVector gradient_step(m.size());
  for (std::size_t j = 0; j < m.size(); ++j)
    gradient_step[j] = m[j] - 2.0 * rho * (m[j] - average[j]);
  CHECK(distance(gradient_step, average) <= 1e-12 * std::max(1.0, norm(average)));
}

TEST_CASE("max-max is equivariant under shifting the start") {
  const TemplateVector t0 = random_vector(16, 600, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 2.0, 120, 10);
  const TemplateVector start = sample.observations.front();
  const MaxMaxReport base = max_max(sample, start);
  const MaxMaxReport moved = max_max(sample, apply(GroupElement{CyclicShift(5, 16)}, start));
  REQUIRE(base.variance_trajectory.size() == moved.variance_trajectory.size());
  for (std::size_t i = 0; i < base.variance_trajectory.size(); ++i)
    CHECK(std::abs(base.variance_trajectory[i] - moved.variance_trajectory[i]) <= 1e-9);
  const double gap =
      quotient_distance(base.estimate, moved.estimate, sample.meta.action).distance;
  CHECK(gap <= 1e-9);
}

TEST_CASE("multi-start outputs are sorted and orbit starts coincide") {
  const TemplateVector t0 = random_vector(8, 700, 2.0);
  const auto sample = gaussian_cyclic_sample(t0, 3.0, 80, 11);

  const TemplateVector start = sample.observations.front();
  std::vector<std::pair<std::string, TemplateVector>> orbit_starts;
  for (std::size_t k = 0; k < 4; ++k)
    orbit_starts.emplace_back("g" + std::to_string(k),
                              apply(GroupElement{CyclicShift(k, 8)}, start));
  const auto rows = multi_start(sample, orbit_starts);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r - 1].variance <= rows[r].variance + 1e-12);
    CHECK(std::abs(rows[r].variance - rows[0].variance) <= 1e-9);
  }
}

TEST_CASE("multi-start never beats the brute-force oracle") {
  const TemplateVector t0 = random_vector(4, 800);
  const auto sample = gaussian_cyclic_sample(t0, 1.0, 3, 12);
  const TemplateVector oracle = brute_force_frechet(sample);
  const double f_oracle = empirical_variance(oracle, sample);
  const auto rows = multi_start(sample, default_starts(sample, 2));
  for (const auto& row : rows) CHECK(f_oracle <= row.variance + 1e-12);
}

TEST_CASE("variance curve is flat on a constant sample") {
  const TemplateVector y = random_vector(8, 900);
  const auto sample = manual_sample({y, y, y, y}, 8);
  const TemplateVector x = random_vector(8, 901);
  const double d = quotient_distance(x, y, sample.meta.action).distance;
  const VarianceCurve curve = variance_curve(x, sample, {1, 2, 4});
  for (const auto& [i, f] : curve.checkpoints)
    CHECK_THAT(f, Catch::Matchers::WithinRel(d * d, 1e-12));
}

TEST_CASE("variance curve prefixes average by hand") {
  const std::size_t n = 4;
  const auto sample = manual_sample(
      {TemplateVector{1, 0, 0, 0}, TemplateVector{0, 2, 0, 0}, TemplateVector{0, 0, 0, 3}},
      n);
  const TemplateVector x(n, 0.0);
  // d^2 to the zero point is the squared norm, shift-independent.
  const VarianceCurve curve = variance_curve(x, sample, {1, 2, 3});
  CHECK_THAT(curve.checkpoints[0].second, Catch::Matchers::WithinRel(1.0, 1e-12));
  CHECK_THAT(curve.checkpoints[1].second, Catch::Matchers::WithinRel((1.0 + 4.0) / 2.0, 1e-12));
  CHECK_THAT(curve.checkpoints[2].second,
             Catch::Matchers::WithinRel((1.0 + 4.0 + 9.0) / 3.0, 1e-12));
  CHECK_THROWS_AS(variance_curve(x, sample, {2, 1}), ContractViolation);
  CHECK_THROWS_AS(variance_curve(x, sample, {4}), ContractViolation);
}

TEST_CASE("brute force returns an orbit point on noiseless samples") {
  const TemplateVector t0 = random_vector(4, 1000);
  const auto sample = gaussian_cyclic_sample(t0, 0.0, 5, 13);
  const TemplateVector best = brute_force_frechet(sample);
  CHECK(quotient_distance(t0, best, sample.meta.action).distance <= 1e-9);
}

TEST_CASE("brute force refuses oversized instances") {
  const TemplateVector t0 = random_vector(16, 1100);
  const auto sample = gaussian_cyclic_sample(t0, 1.0, 16, 14);
  CHECK_THROWS_AS(brute_force_frechet(sample), CapacityError);
}
