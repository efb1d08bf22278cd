#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "centroidlab/core.hpp"
#include "centroidlab/special.hpp"

namespace centroidlab {

/// Below this distance from 1 the recursive-tree closed forms are used.
inline constexpr double kRecursiveAlphaWindow = 1e-8;

namespace detail {

inline constexpr double kLn2 = std::numbers::ln2;

inline void require_positive_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::domain_error("alpha must be positive");
}

inline bool near_recursive(double alpha) { return std::fabs(alpha - 1.0) <= kRecursiveAlphaWindow; }

// x^h / h!
inline double power_over_factorial(double x, std::uint64_t h) {
  if (h <= 160) {
    double value = 1.0;
    for (std::uint64_t i = 1; i <= h; ++i) value *= x / static_cast<double>(i);
    return value;
  }
  return std::exp(static_cast<double>(h) * std::log(x) - log_gamma(static_cast<double>(h) + 1.0));
}

// sum_{j >= h} s^(j-h) L^j / j!
inline double shifted_exp_tail(double s, std::uint64_t h) {
  double term = power_over_factorial(kLn2, h);
  CompensatedSum sum;
  for (std::uint64_t j = h;; ++j) {
    sum.add(term);
    term *= s * kLn2 / static_cast<double>(j + 1);
    if (std::fabs(term) <= 1e-18 * std::fabs(sum.value()) || term == 0.0) break;
  }
  return sum.value();
}

}  // namespace detail

/// lim P_n(Lambda_k(1/2)) = I_{1/2}(k-1, alpha).
inline double lim_p_lambda(double alpha, std::uint64_t k) {
  detail::require_positive_alpha(alpha);
  if (k < 1) throw std::invalid_argument("lim_p_lambda: k must be at least 1");
  if (k == 1) return 1.0;
  return reg_inc_beta(0.5, static_cast<int>(k - 1), alpha);
}

struct DepthLimit {
  double ccdf = 0.0;  // P(D >= h)
  double pmf = 0.0;   // P(D = h)
};

/// Limit law of the centroid depth.
///
/// P(D >= h) = (alpha/(alpha-1))^h (1 - 2^(1-alpha) sum_{j<h} ((alpha-1) ln 2)^j / j!),
/// evaluated as alpha^h 2^(1-alpha) sum_{j>=h} (alpha-1)^(j-h) (ln 2)^j / j!,
/// which has no cancellation and no singularity at alpha = 1.
inline DepthLimit depth_limit_dist(double alpha, std::uint64_t h) {
  detail::require_positive_alpha(alpha);
  const double lead = detail::power_over_factorial(detail::kLn2, h);
  if (detail::near_recursive(alpha)) {
    return {lead, lead - detail::power_over_factorial(detail::kLn2, h + 1)};
  }
  const double scale = std::pow(alpha, static_cast<double>(h)) * std::exp2(1.0 - alpha);
  const double tail_next = detail::shifted_exp_tail(alpha - 1.0, h + 1);
  // sum_{j>=h} = L^h/h! + (alpha-1) sum_{j>=h+1}
  return {scale * (lead + (alpha - 1.0) * tail_next), scale * (lead - tail_next)};
}

struct DepthGf {
  double C = 0.0;  // sum_h P(D >= h) v^h
  double A = 0.0;  // sum_h P(D = h) v^h
};

/// C(v) = 1 + alpha v (2^u - 1)/u and A(v) = 1 + alpha (v-1)(2^u - 1)/u, u = alpha(v-1)+1.
inline DepthGf eval_depth_gf(double alpha, double v) {
  detail::require_positive_alpha(alpha);
  const double u = alpha * (v - 1.0) + 1.0;
  const double g = detail::exp_integral(u, detail::kLn2);
  return {1.0 + alpha * v * g, 1.0 + alpha * (v - 1.0) * g};
}

/// lim E(D^(m)), the falling factorial moment of order m.
inline double depth_limit_factorial_moment(double alpha, std::uint64_t m) {
  detail::require_positive_alpha(alpha);
  if (m < 1) throw std::invalid_argument("depth_limit_factorial_moment: m must be at least 1");
  // 2 sum_{j=0}^{m-2} C(m-1, j) (-1)^j j! L^(m-1-j) + (-1)^(m-1) (m-1)!
  CompensatedSum sum;
  double falling = 1.0;  // (m-1)! / (m-1-j)! = C(m-1, j) j!
  for (std::uint64_t j = 0; j + 2 <= m; ++j) {
    const double term = 2.0 * falling * std::pow(detail::kLn2, static_cast<double>(m - 1 - j));
    sum.add(j % 2 == 0 ? term : -term);
    falling *= static_cast<double>(m - 1 - j);
  }
  sum.add((m - 1) % 2 == 0 ? falling : -falling);
  return static_cast<double>(m) * std::pow(alpha, static_cast<double>(m)) * sum.value();
}

inline double depth_limit_mean(double alpha) { return depth_limit_factorial_moment(alpha, 1); }

inline double depth_limit_variance(double alpha) {
  detail::require_positive_alpha(alpha);
  return alpha * alpha * (4.0 * detail::kLn2 - 3.0) + alpha;
}

/// Limit law of the centroid label, P(L = k).
inline double label_limit_pmf(double alpha, std::uint64_t k) {
  detail::require_positive_alpha(alpha);
  if (k < 1) throw std::invalid_argument("label_limit_pmf: k must be at least 1");
  if (k == 1) return 1.0 - alpha * detail::exp_integral(1.0 - alpha, detail::kLn2);
  if (detail::near_recursive(alpha)) {
    // 2^-(k-1) - sum_{j>=k} 2^-j / j
    CompensatedSum tail;
    double power = std::ldexp(1.0, -static_cast<int>(k));
    for (std::uint64_t j = k;; ++j) {
      const double term = power / static_cast<double>(j);
      tail.add(term);
      if (term < 1e-16 * tail.value() * 1e-2) break;
      power *= 0.5;
    }
    return std::ldexp(1.0, -static_cast<int>(k - 1)) - tail.value();
  }
  // I_{1/2}(k-1, alpha) - alpha C(alpha+k-2, k-1) sum_i (2-alpha)^(i)/i! 2^-(k+i)/(k+i)
  CompensatedSum series;
  double coeff = std::ldexp(1.0, -static_cast<int>(k));  // (2-alpha)^(i)/i! 2^-(k+i)
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double term = coeff / static_cast<double>(k + i);
    series.add(term);
    if (std::fabs(term) <= 1e-18 * std::fabs(series.value()) || coeff == 0.0) break;
    coeff *= (2.0 - alpha + static_cast<double>(i)) / (2.0 * static_cast<double>(i + 1));
  }
  const double value =
      lim_p_lambda(alpha, k) - alpha * gen_binomial(alpha + static_cast<double>(k) - 2.0, k - 1) * series.value();
  return value < 0.0 ? 0.0 : value;
}

/// lim E(L^(m)) = (4m^2 + 2 alpha m + alpha - 2)/(m+1) alpha^(m-1 rising).
inline double label_limit_factorial_moment(double alpha, std::uint64_t m) {
  detail::require_positive_alpha(alpha);
  if (m < 1) throw std::invalid_argument("label_limit_factorial_moment: m must be at least 1");
  const double md = static_cast<double>(m);
  return (4.0 * md * md + 2.0 * alpha * md + alpha - 2.0) / (md + 1.0) * rising_factorial(alpha, m - 1);
}

inline double label_limit_mean(double alpha) { return label_limit_factorial_moment(alpha, 1); }

inline double label_limit_variance(double alpha) {
  detail::require_positive_alpha(alpha);
  return -7.0 * alpha * alpha / 12.0 + 19.0 * alpha / 6.0;
}

/// Limit of A_m(n/2m) with theta = m/n: (alpha/(alpha-1))(1 - (2 theta)^(1-alpha)).
inline double not_centroid_asym(double alpha, double theta) {
  detail::require_positive_alpha(alpha);
  if (!(theta >= 0.5 && theta <= 1.0)) throw std::domain_error("not_centroid_asym: theta must lie in [1/2, 1]");
  return alpha * detail::exp_integral(1.0 - alpha, std::log(2.0 * theta));
}

/// Leading-order P_n(S = m), n/2 <= m < n.
inline double asym_p_subtree(double alpha, std::uint64_t n, std::uint64_t m) {
  detail::require_positive_alpha(alpha);
  if (2 * m < n || m >= n) throw std::domain_error("asym_p_subtree: m must lie in [n/2, n)");
  const double rho = static_cast<double>(n) / (2.0 * static_cast<double>(m));
  const double bracket = 1.0 + alpha * detail::exp_integral(alpha - 1.0, std::log(rho));
  return 4.0 / static_cast<double>(n) * rho * rho * alpha * bracket;
}

/// Density of the continuous part of the limiting S/n on [1/2, 1).
inline double subtree_limit_density(double alpha, double theta) {
  detail::require_positive_alpha(alpha);
  if (!(theta >= 0.5 && theta < 1.0)) throw std::domain_error("subtree_limit_density: theta must lie in [1/2, 1)");
  const double rho = 1.0 / (2.0 * theta);
  const double value = 4.0 * alpha * rho * rho * (1.0 + alpha * detail::exp_integral(alpha - 1.0, std::log(rho)));
  return value < 0.0 ? 0.0 : value;
}

/// Mass of the limiting S/n at 1; the same expression as P(L = 1).
inline double point_mass(double alpha) { return label_limit_pmf(alpha, 1); }

/// Integral of the density over [1/2, theta].
inline double subtree_limit_cdf(double alpha, double theta) {
  detail::require_positive_alpha(alpha);
  if (!(theta >= 0.5 && theta <= 1.0)) throw std::domain_error("subtree_limit_cdf: theta must lie in [1/2, 1]");
  const double x = std::log(2.0 * theta);
  return 2.0 * alpha *
         (detail::exp_integral(-1.0, x) - alpha * detail::exp_integral_dd(-alpha, -1.0, x));
}

/// E(S^r) for the limiting proportion S, r a positive integer.
///
/// Written with divided differences, the expression is regular at alpha = 1
/// and alpha = r, so those cases need no separate branch.
inline double subtree_limit_moment(double alpha, std::uint64_t r) {
  detail::require_positive_alpha(alpha);
  if (r < 1) throw std::invalid_argument("subtree_limit_moment: r must be a positive integer");
  const double rd = static_cast<double>(r);
  const double continuous =
      std::exp2(1.0 - rd) * alpha *
      (detail::exp_integral(rd - 1.0, detail::kLn2) -
       alpha * detail::exp_integral_dd(rd - alpha, rd - 1.0, detail::kLn2));
  return point_mass(alpha) + continuous;
}

/// P(D = h) for h = 0..h_max; the tail carries P(D > h_max).
inline DistributionTable depth_limit_table(double alpha, std::uint64_t h_max) {
  DistributionTable table;
  table.provenance = Provenance::Asymptotic;
  for (std::uint64_t h = 0; h <= h_max; ++h) {
    table.support.push_back(static_cast<double>(h));
    table.mass.push_back(depth_limit_dist(alpha, h).pmf);
  }
  table.truncation_tail_bound = depth_limit_dist(alpha, h_max + 1).ccdf;
  return table;
}

/// Upper bound on P(L > k_max) from the path-probability bound.
inline double label_tail_bound(double alpha, std::uint64_t k_max) {
  detail::require_positive_alpha(alpha);
  CompensatedSum sum;
  // alpha^(k-1)/(k-1)! 2^-(k-2) at k = k_max + 1
  double term = 2.0;
  for (std::uint64_t i = 0; i < k_max; ++i) term *= (alpha + static_cast<double>(i)) / (2.0 * (i + 1.0));
  for (std::uint64_t k = k_max + 1; k < k_max + 100000; ++k) {
    sum.add(term);
    term *= (alpha + static_cast<double>(k - 1)) / (2.0 * static_cast<double>(k));
    if (term <= 1e-18 * sum.value() || term == 0.0) break;
  }
  return sum.value();
}

/// P(L = k) for k = 1..k_max; the tail bound sums alpha^(k-1)/(k-1)! 2^-(k-2) over k > k_max.
inline DistributionTable label_limit_table(double alpha, std::uint64_t k_max) {
  DistributionTable table;
  table.provenance = Provenance::Asymptotic;
  for (std::uint64_t k = 1; k <= k_max; ++k) {
    table.support.push_back(static_cast<double>(k));
    table.mass.push_back(label_limit_pmf(alpha, k));
  }
  table.truncation_tail_bound = label_tail_bound(alpha, k_max);
  return table;
}

/// Mass of the limiting S/n on right-closed bins of width 1/(2 bins) over
/// [1/2, 1), keyed by left edge, plus the atom at 1.
inline DistributionTable subtree_limit_table(double alpha, std::uint64_t bins) {
  if (bins < 2) throw std::invalid_argument("subtree_limit_table: at least two bins required");
  DistributionTable table;
  table.kind = SupportKind::Binned;
  table.provenance = Provenance::Asymptotic;
  table.bin_width = 0.5 / static_cast<double>(bins);
  double previous = 0.0;
  for (std::uint64_t b = 0; b < bins; ++b) {
    const double right = 0.5 + 0.5 * static_cast<double>(b + 1) / static_cast<double>(bins);
    const double cdf = subtree_limit_cdf(alpha, right);
    table.support.push_back(0.5 + 0.5 * static_cast<double>(b) / static_cast<double>(bins));
    table.mass.push_back(cdf - previous);
    previous = cdf;
  }
  table.support.push_back(1.0);
  table.mass.push_back(point_mass(alpha));
  return table;
}

}  // namespace centroidlab
