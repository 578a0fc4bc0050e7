#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "phs/smoothstep.hpp"

using namespace phs;

namespace {

double forward_difference(int k, double s0, double h, const StepParams& p) {
  // k-th forward difference divided by h^k
  double sum = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) binom = binom * (k - j + 1) / j;
    const double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
    sum += sign * binom * step(s0 + j * h, p);
  }
  return sum / std::pow(h, k);
}

}  // namespace

TEST_CASE("step params are validated") {
  CHECK_THROWS_AS(StepParams(-1, 1.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(StepParams(11, 1.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(StepParams(2, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(StepParams(2, 1.0, 0.0), std::invalid_argument);
  const StepParams p(2, 1.0, 0.01);
  CHECK(p.sigma_b() == doctest::Approx(std::sqrt(1.0001) - 0.01).epsilon(1e-15));
  CHECK_THROWS_AS(sigma(-0.1, p), std::domain_error);
}

TEST_CASE("step values at the documented points") {
  const StepParams p(2, 1.0, 0.01);
  CHECK(step(-0.3, p) == 0.0);
  CHECK(step(p.sigma_b(), p) == 1.0);
  CHECK(step(p.sigma_b() * 2.0, p) == 1.0);
  CHECK(step(0.5 * p.sigma_b(), p) == doctest::Approx(0.5).epsilon(1e-15));
  // 10 t^3 - 15 t^4 + 6 t^5 at t = 0.3
  CHECK(step(0.3 * p.sigma_b(), p) == doctest::Approx(0.16308).epsilon(1e-13));
  // t^2 (3 - 2t) at t = 0.25 for the order-1 gate
  const StepParams p1(1, 1.0, 0.01);
  CHECK(step(0.25 * p1.sigma_b(), p1) == doctest::Approx(0.15625).epsilon(1e-13));
}

TEST_CASE("step derivative branches and finite-difference oracle") {
  for (int d = 1; d <= 4; ++d) {
    const StepParams p(d, 0.7, 0.02);
    CHECK(step_prime(p.sigma_b(), p) == 0.0);
    CHECK(step_prime(-1.0, p) == 0.0);
    CHECK(step_prime(2.0 * p.sigma_b(), p) == 0.0);
    const double h = 1e-6 * p.sigma_b();
    for (int i = 1; i <= 50; ++i) {
      const double s = p.sigma_b() * (0.02 + 0.96 * i / 51.0);
      const double fd = (step(s + h, p) - step(s - h, p)) / (2.0 * h);
      CAPTURE(d);
      CAPTURE(s);
      CHECK(std::abs(step_prime(s, p) - fd) <= 1e-6 * std::abs(fd));
      const double fd2 = (step_prime(s + h, p) - step_prime(s - h, p)) / (2.0 * h);
      CHECK(std::abs(step_second(s, p) - fd2) <= 1e-5 * std::max(std::abs(fd2), 1.0));
    }
  }
}

TEST_CASE("g ratio limits and identity") {
  for (int d = 1; d <= 6; ++d) {
    const StepParams p(d, 1.3, 0.01);
    CAPTURE(d);
    CHECK(g_at_zero(p) == d + 1);
    CHECK(g_func(1e-8 * p.sigma_b(), p) == doctest::Approx(d + 1.0).epsilon(1e-6));
    CHECK(std::abs(g_at_sigma_b(p)) <= 1e-12);
    CHECK_THROWS_AS(g_func(0.0, p), std::domain_error);
    CHECK_THROWS_AS(g_func(p.sigma_b(), p), std::domain_error);
    for (int i = 1; i <= 100; ++i) {
      const double s = p.sigma_b() * i / 101.0;
      const double lhs = step_prime(s, p);
      const double rhs = g_func(s, p) * step(s, p) / s;
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(lhs));
      CHECK(g_func(s, p) >= 0.0);
    }
  }
  const StepParams p1(1, 1.0, 0.01);
  CHECK(g_at_sigma_b(p1) == 0.0);
}

TEST_CASE("range, monotonicity and symmetry") {
  for (int d = 0; d <= 10; ++d) {
    const StepParams p(d, 1.0, 0.01);
    CAPTURE(d);
    double previous = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double s = -0.1 + 1.2 * p.sigma_b() * i / 1000.0;
      const double v = step(s, p);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v >= previous);
      previous = v;
      CHECK(step_prime(s, p) >= 0.0);
    }
    for (int i = 0; i <= 200; ++i) {
      const double s = p.sigma_b() * i / 200.0;
      CHECK(std::abs(step(p.sigma_b() - s, p) - (1.0 - step(s, p))) <= 1e-12);
    }
  }
}

TEST_CASE("knot smoothness from divided differences") {
  // The k-th divided difference at a knot behaves like h^(d+1-k). At step
  // 1e-4 the orders below d fall under 1e-5 for d <= 3; beyond that the
  // constants grow past the bound even in exact arithmetic.
  const double h = 1e-4;
  for (int d = 1; d <= 3; ++d) {
    const StepParams p(d, 1.0, 0.01);
    CAPTURE(d);
    for (int k = 1; k < d; ++k) {
      CHECK(std::abs(forward_difference(k, 0.0, h, p)) <= 1e-5);
      CHECK(std::abs(forward_difference(k, p.sigma_b() - k * h, h, p)) <= 1e-5);
    }
  }
  // Halving the step scales every order by 2^-(d+1-k); order d shrinking
  // linearly is d-fold continuity. A coarser step keeps the top knot above
  // rounding, where the step is within 1e-16 of one.
  const double coarse = 1e-3;
  for (int d = 1; d <= 4; ++d) {
    const StepParams p(d, 1.0, 0.01);
    CAPTURE(d);
    for (int k = 1; k <= d; ++k) {
      CAPTURE(k);
      const double want = std::ldexp(1.0, -(d + 1 - k));
      const double bottom = forward_difference(k, 0.0, coarse / 2.0, p) / forward_difference(k, 0.0, coarse, p);
      const double top = forward_difference(k, p.sigma_b() - k * coarse / 2.0, coarse / 2.0, p) /
                         forward_difference(k, p.sigma_b() - k * coarse, coarse, p);
      CHECK(std::abs(bottom / want - 1.0) < 0.03);
      CHECK(std::abs(top / want - 1.0) < 0.03);
    }
  }
}

TEST_CASE("sigma derivative") {
  const StepParams p(2, 1.0, 0.05);
  for (double r : {0.0, 0.01, 0.3, 2.0}) {
    const double h = 1e-7;
    const double fd = (sigma(r + h, p) - sigma(std::max(r - h, 0.0), p)) / (r > h ? 2.0 * h : h);
    CHECK(dsigma_dr(r, p) == doctest::Approx(fd).epsilon(1e-5));
    CHECK(dsigma_dr(r, p) < 1.0);
  }
  CHECK(sigma(0.0, p) == 0.0);
}
