#pragma once

#include <array>

namespace phs {

/// Parameters of the d-times differentiable step gate.
///
/// The gate is applied to the regularized radius
///   sigma(r) = sqrt(r^2 + delta^2) - delta,
/// and switches from 0 at sigma = 0 to 1 at sigma_b = sigma(b). In between
/// it is the degree 2d+1 polynomial with d vanishing derivatives at both
/// knots, evaluated in Bernstein form from exact integer binomials.
class StepParams {
 public:
  static constexpr int kMaxOrder = 10;

  /// Throws std::invalid_argument unless 0 <= order <= kMaxOrder, radius > 0
  /// and delta > 0.
  StepParams(int order, double radius, double delta);

  int order() const noexcept { return order_; }
  double radius() const noexcept { return radius_; }
  double delta() const noexcept { return delta_; }
  double sigma_b() const noexcept { return sigma_b_; }

 private:
  friend double step(double, const StepParams&);
  friend double step_prime(double, const StepParams&);
  friend double step_second(double, const StepParams&);
  friend double g_func(double, const StepParams&);
  friend double g_at_sigma_b(const StepParams&);

  int order_;
  double radius_;
  double delta_;
  double sigma_b_;
  std::array<double, 2 * kMaxOrder + 2> binom_{};  // C(2d+1, k)
  double peak_ = 1.0;  // (2d+1) C(2d, d), so h'(t) = peak t^d (1-t)^d
};

/// sqrt(r^2 + delta^2) - delta. Throws std::domain_error for r < 0.
double sigma(double r, const StepParams& params);

/// d sigma / dr = r / sqrt(r^2 + delta^2), always in [0, 1).
double dsigma_dr(double r, const StepParams& params);

/// The step h(s): 0 for s <= 0, 1 for s >= sigma_b, polynomial in between.
double step(double s, const StepParams& params);

/// h'(s); zero outside (0, sigma_b).
double step_prime(double s, const StepParams& params);

/// h''(s); zero outside (0, sigma_b).
double step_second(double s, const StepParams& params);

/// Ratio g(s) with h'(s) = g(s) h(s) / s. Defined on the open interval
/// (0, sigma_b); throws std::domain_error elsewhere. Use the limit helpers
/// at the end points.
double g_func(double s, const StepParams& params);

/// lim_{s -> 0+} g(s) = d + 1.
double g_at_zero(const StepParams& params);

/// g(sigma_b), which is 0 because h'(sigma_b) = 0.
double g_at_sigma_b(const StepParams& params);

}  // namespace phs
