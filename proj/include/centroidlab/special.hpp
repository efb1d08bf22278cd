#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace centroidlab {

// Neumaier variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double term) {
    const double t = sum_ + term;
    if (std::fabs(sum_) >= std::fabs(term)) {
      carry_ += (sum_ - t) + term;
    } else {
      carry_ += (term - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double term) {
    add(term);
    return *this;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

namespace detail {

// Stirling series, valid for z >= 10 to full double precision.
inline double log_gamma_stirling(double z) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  // Bernoulli terms B_{2k} / (2k (2k-1)), k = 8 down to 1 (Horner in 1/z^2).
  double series = -3617.0 / 122400.0;
  series = series * inv2 + 1.0 / 156.0;
  series = series * inv2 - 691.0 / 360360.0;
  series = series * inv2 + 1.0 / 1188.0;
  series = series * inv2 - 1.0 / 1680.0;
  series = series * inv2 + 1.0 / 1260.0;
  series = series * inv2 - 1.0 / 360.0;
  series = series * inv2 + 1.0 / 12.0;
  return (z - 0.5) * std::log(z) - z + kHalfLog2Pi + series * inv;
}

}  // namespace detail

/// Natural log of Gamma(x) for x > 0.
///
/// Reentrant (unlike std::lgamma, which writes the global signgam).
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("log_gamma: argument must be positive and finite");
  }
  if (x >= 10.0) return detail::log_gamma_stirling(x);
  if (x == std::floor(x)) {
    // (x-1)! is exact in double for x <= 10.
    double factorial = 1.0;
    for (double i = 2.0; i < x; i += 1.0) factorial *= i;
    return std::log(factorial);
  }
  // Shift up with Gamma(x) = Gamma(x + s) / (x (x+1) ... (x+s-1)).
  double shifted = x;
  double product = 1.0;
  while (shifted < 10.0) {
    product *= shifted;
    shifted += 1.0;
  }
  return detail::log_gamma_stirling(shifted) - std::log(product);
}

/// log of x^(m) = x (x+1) ... (x+m-1) for x > 0.
inline double log_rising_factorial(double x, std::uint64_t m) {
  if (!(x > 0.0)) throw std::domain_error("log_rising_factorial: x must be positive");
  if (m == 0) return 0.0;
  if (m <= 32) {
    double product = 1.0;
    for (std::uint64_t i = 0; i < m; ++i) product *= x + static_cast<double>(i);
    return std::log(product);
  }
  return log_gamma(x + static_cast<double>(m)) - log_gamma(x);
}

/// Rising factorial x (x+1) ... (x+m-1); m = 0 gives 1.
inline double rising_factorial(double x, std::uint64_t m) {
  if (m <= 64) {
    double product = 1.0;
    for (std::uint64_t i = 0; i < m; ++i) product *= x + static_cast<double>(i);
    return product;
  }
  if (x > 0.0) return std::exp(log_rising_factorial(x, m));
  // Sign-tracked log-space product for the general case.
  double log_abs = 0.0;
  bool negative = false;
  for (std::uint64_t i = 0; i < m; ++i) {
    const double factor = x + static_cast<double>(i);
    if (factor == 0.0) return 0.0;
    negative ^= factor < 0.0;
    log_abs += std::log(std::fabs(factor));
  }
  const double magnitude = std::exp(log_abs);
  return negative ? -magnitude : magnitude;
}

/// Generalised binomial coefficient a (a-1) ... (a-k+1) / k! for real a.
inline double gen_binomial(double a, std::uint64_t k) {
  if (k == 0) return 1.0;
  if (k <= 48) {
    double value = 1.0;
    for (std::uint64_t i = 0; i < k; ++i) {
      value *= (a - static_cast<double>(i)) / static_cast<double>(i + 1);
    }
    return value;
  }
  const double kd = static_cast<double>(k);
  if (a - kd + 1.0 > 0.0) {
    return std::exp(log_gamma(a + 1.0) - log_gamma(kd + 1.0) - log_gamma(a - kd + 1.0));
  }
  double log_abs = 0.0;
  bool negative = false;
  for (std::uint64_t i = 0; i < k; ++i) {
    const double factor = a - static_cast<double>(i);
    if (factor == 0.0) return 0.0;
    negative ^= factor < 0.0;
    log_abs += std::log(std::fabs(factor)) - std::log(static_cast<double>(i + 1));
  }
  const double magnitude = std::exp(log_abs);
  return negative ? -magnitude : magnitude;
}

/// Regularised incomplete beta I_x(a, b) for integer a >= 1 and real b > 0.
///
/// For integer a, I_x(a, b) = P(K >= a) where K is negative binomial with
/// P(K = k) = (1-x)^b b^(k) x^k / k!. The smaller side of the split at a is
/// summed term by term, so there is no cancellation.
inline double reg_inc_beta(double x, int a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("reg_inc_beta: x must lie in [0, 1]");
  if (a < 1) throw std::domain_error("reg_inc_beta: a must be a positive integer");
  if (!(b > 0.0) || !std::isfinite(b)) throw std::domain_error("reg_inc_beta: b must be positive");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_x = std::log(x);
  const double log_base = b * std::log1p(-x);
  auto log_term = [&](std::uint64_t k) {
    return log_base + static_cast<double>(k) * log_x + log_rising_factorial(b, k) - log_rising_factorial(1.0, k);
  };
  const double mean = b * x / (1.0 - x);
  const auto ua = static_cast<std::uint64_t>(a);

  if (static_cast<double>(a) - 1.0 >= mean) {
    // Upper tail: terms decrease geometrically beyond the mean.
    CompensatedSum tail;
    double term = std::exp(log_term(ua));
    for (std::uint64_t k = ua; term > 0.0; ++k) {
      tail.add(term);
      if (term <= 1e-17 * tail.value()) break;
      term *= x * (b + static_cast<double>(k)) / (static_cast<double>(k) + 1.0);
    }
    return std::min(1.0, tail.value());
  }
  // Lower head, walked down from a - 1.
  CompensatedSum head;
  double term = std::exp(log_term(ua - 1));
  for (std::uint64_t k = ua - 1;; --k) {
    head.add(term);
    if (k == 0) break;
    term *= static_cast<double>(k) / (x * (b + static_cast<double>(k) - 1.0));
  }
  return std::max(0.0, 1.0 - head.value());
}

namespace detail {

// phi(s, x) = integral_0^x e^{s t} dt = expm1(s x) / s, entire in s.
inline double exp_integral(double s, double x) {
  if (s == 0.0) return x;
  return std::expm1(s * x) / s;
}

// Divided difference (phi(a, x) - phi(b, x)) / (a - b), with the derivative
// in s when a == b. Power series in s near coincidence.
inline double exp_integral_dd(double a, double b, double x) {
  if (std::fabs(a - b) > 0.25) return (exp_integral(a, x) - exp_integral(b, x)) / (a - b);
  // phi(s, x) = sum_p s^p x^(p+1) / ((p+1) p!); (a^p - b^p)/(a - b) = h_{p-1}(a, b).
  CompensatedSum sum;
  double h = 1.0;          // h_{p-1}(a, b), complete homogeneous polynomial
  double b_power = 1.0;    // b^(p-1)
  double coeff = x * x / 2.0;  // x^(p+1) / ((p+1) p!) at p = 1
  for (int p = 1; p < 400; ++p) {
    const double term = coeff * h;
    sum.add(term);
    if (p > 4 && std::fabs(term) <= 1e-18 * std::fabs(sum.value())) break;
    b_power *= b;
    h = a * h + b_power;
    coeff *= x / (p + 2.0);
  }
  return sum.value();
}

}  // namespace detail

}  // namespace centroidlab
