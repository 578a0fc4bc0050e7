#include "phs/smoothstep.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace phs {
namespace {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    // Exact at every step: result * (n - k + i) is divisible by i.
    result = result * (n - k + i) / i;
  }
  return result;
}

double int_pow(double t, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= t;
  return r;
}

// h(t) / t^(d+1) for t in [0, 1/2]. Every Bernstein term is positive, so no
// cancellation occurs; the upper half is taken from h(t) = 1 - h(1 - t).
double lower_tail_ratio(const std::array<double, 2 * StepParams::kMaxOrder + 2>& binom, int d, double t) {
  const double u = 1.0 - t;
  double acc = 0.0;
  for (int j = d; j >= 0; --j) acc = acc * t + binom[d + 1 + j] * int_pow(u, d - j);
  return acc;
}

}  // namespace

StepParams::StepParams(int order, double radius, double delta)
    : order_(order), radius_(radius), delta_(delta) {
  if (order < 0 || order > kMaxOrder) {
    throw std::invalid_argument("step order must lie in [0, " +
                                std::to_string(kMaxOrder) + "]");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("step radius b must be positive");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("sigma regularizer delta must be positive");
  }
  sigma_b_ = std::sqrt(radius * radius + delta * delta) - delta;

  const int d = order;
  for (int k = 0; k <= 2 * d + 1; ++k) binom_[k] = static_cast<double>(binomial(2 * d + 1, k));
  peak_ = static_cast<double>((2 * d + 1) * binomial(2 * d, d));
}

double sigma(double r, const StepParams& params) {
  if (!(r >= 0.0)) throw std::domain_error("sigma: radius must be nonnegative");
  const double delta = params.delta();
  return std::sqrt(r * r + delta * delta) - delta;
}

double dsigma_dr(double r, const StepParams& params) {
  if (!(r >= 0.0)) throw std::domain_error("dsigma_dr: radius must be nonnegative");
  const double delta = params.delta();
  return r / std::sqrt(r * r + delta * delta);
}

double step(double s, const StepParams& params) {
  if (s <= 0.0) return 0.0;
  if (s >= params.sigma_b_) return 1.0;
  const double t = s / params.sigma_b_;
  const int d = params.order_;
  if (t <= 0.5) return int_pow(t, d + 1) * lower_tail_ratio(params.binom_, d, t);
  const double u = 1.0 - t;
  return 1.0 - int_pow(u, d + 1) * lower_tail_ratio(params.binom_, d, u);
}

double step_prime(double s, const StepParams& params) {
  if (s <= 0.0 || s >= params.sigma_b_) return 0.0;
  const double t = s / params.sigma_b_;
  const int d = params.order_;
  return params.peak_ * int_pow(t * (1.0 - t), d) / params.sigma_b_;
}

double step_second(double s, const StepParams& params) {
  const int d = params.order_;
  if (d == 0 || s <= 0.0 || s >= params.sigma_b_) return 0.0;
  const double t = s / params.sigma_b_;
  return params.peak_ * d * int_pow(t * (1.0 - t), d - 1) * (1.0 - 2.0 * t) /
         (params.sigma_b_ * params.sigma_b_);
}

double g_func(double s, const StepParams& params) {
  if (!(s > 0.0 && s < params.sigma_b_)) {
    throw std::domain_error("g_func: argument must lie in (0, sigma_b)");
  }
  const double t = s / params.sigma_b_;
  const int d = params.order_;
  // g = t h'(t) / h(t); below the midpoint t^(d+1) cancels analytically
  if (t <= 0.5) return params.peak_ * int_pow(1.0 - t, d) / lower_tail_ratio(params.binom_, d, t);
  return t * params.peak_ * int_pow(t * (1.0 - t), d) / step(s, params);
}

double g_at_zero(const StepParams& params) { return params.order() + 1.0; }

double g_at_sigma_b(const StepParams& params) { return params.order_ == 0 ? 1.0 : 0.0; }

}  // namespace phs
