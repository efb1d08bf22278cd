#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "centroidlab/core.hpp"

namespace centroidlab {

/// Parameters of the event "node k has at least floor(sigma n) descendants".
struct PathProbQuery {
  FamilyParams family;
  std::uint64_t n;
  std::uint64_t k;
  double sigma = 0.5;

  void validate() const {
    if (n < 2) throw std::invalid_argument("path probability: n must be at least 2");
    if (k < 1 || k > n) throw std::invalid_argument("path probability: k must lie in 1..n");
    if (!(sigma >= 0.5 && sigma < 1.0)) {
      throw std::invalid_argument("path probability: sigma must lie in [1/2, 1)");
    }
  }
};

namespace detail {

// P(node k has >= threshold descendants) in a tree of size n, k >= 2.
//
// Term m (descendant count, 0..n-k) is C(alpha+m-1, m) C(n-m-2, k-2) over
// C(alpha+n-2, n-k). Terms are built by their ratio and the denominator is
// taken as the full sum, which it equals identically. Relative to the first
// term they grow at most like m^(alpha-1), so plain products stay in range.
inline double descendant_tail(double alpha, std::uint64_t n, std::uint64_t k,
                              std::uint64_t threshold) {
  if (k == 1) return n - 1 >= threshold ? 1.0 : 0.0;
  if (threshold > n - k) return 0.0;
  const std::uint64_t last = n - k;
  CompensatedSum head;  // m < threshold
  CompensatedSum tail;
  double t = 1.0;
  for (std::uint64_t m = 0;; ++m) {
    (m < threshold ? head : tail).add(t);
    if (m == last) break;
    const double md = static_cast<double>(m);
    t *= (alpha + md) / (md + 1.0) * static_cast<double>(n - m - k) / static_cast<double>(n - m - 2);
  }
  const double total = head.value() + tail.value();
  return std::min(1.0, tail.value() / total);
}

}  // namespace detail

/// Exact P_n(node k has at least floor(sigma n) descendants).
inline double p_lambda_exact(const PathProbQuery& q) {
  q.validate();
  return detail::descendant_tail(q.family.alpha(), q.n, q.k, descendant_threshold(q.sigma, q.n));
}

struct PathBound {
  double general = 0.0;           // (3/sigma) alpha^(k-1)/(k-1)! (1-sigma)^(k-1)
  std::optional<double> sharp;    // sigma = 1/2 only: alpha^(k-1)/(k-1)! 2^-(k-2)

  double best() const { return sharp ? std::min(general, *sharp) : general; }
};

/// Upper bounds on p_lambda_exact valid uniformly in n >= 3.
inline PathBound p_lambda_upper_bound(double alpha, std::uint64_t k, double sigma) {
  if (k < 1) throw std::invalid_argument("path bound: k must be at least 1");
  if (!(sigma >= 0.5 && sigma < 1.0)) throw std::invalid_argument("path bound: sigma must lie in [1/2, 1)");
  // alpha^(k-1) / (k-1)! = prod_{i<k-1} (alpha+i)/(i+1)
  double ratio = 1.0;
  for (std::uint64_t i = 0; i + 1 < k; ++i) ratio *= (alpha + static_cast<double>(i)) / (i + 1.0);
  PathBound bound;
  bound.general = 3.0 / sigma * ratio * std::pow(1.0 - sigma, static_cast<double>(k - 1));
  if (sigma == 0.5) bound.sharp = ratio * std::ldexp(1.0, -static_cast<int>(k) + 2);
  return bound;
}

/// Law of the depth of node k: coefficients of prod_{j<k-1} (alpha v + j)/(alpha + j).
inline DistributionTable node_depth_pmf(double alpha, std::uint64_t k) {
  if (k < 1) throw std::invalid_argument("node_depth_pmf: k must be at least 1");
  std::vector<double> coeff{1.0};
  for (std::uint64_t j = 0; j + 1 < k; ++j) {
    const double jd = static_cast<double>(j);
    std::vector<double> next(coeff.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      next[i] += jd * coeff[i];
      next[i + 1] += alpha * coeff[i];
    }
    for (double& c : next) c /= alpha + jd;
    coeff = std::move(next);
  }
  DistributionTable table;
  table.provenance = Provenance::Exact;
  table.mass = std::move(coeff);
  for (std::size_t h = 0; h < table.mass.size(); ++h) table.support.push_back(static_cast<double>(h));
  return table;
}

/// Exact P_n(D >= h) for the depth D of the nearest centroid.
inline double p_depth_ge_exact(const FamilyParams& family, std::uint64_t n, std::uint64_t h) {
  if (n < 1) throw std::invalid_argument("p_depth_ge_exact: n must be at least 1");
  if (h == 0) return 1.0;
  if (h >= n) return 0.0;
  const double alpha = family.alpha();
  const std::uint64_t half = n / 2;
  const std::uint64_t k_max = n - half;  // node k can hold floor(n/2) descendants only for k <= n - floor(n/2)
  // Depth polynomial of node k, advanced incrementally.
  std::vector<double> depth_poly{1.0};
  double bound_ratio = 1.0;  // alpha^(k-1) / (k-1)!
  CompensatedSum sum;
  for (std::uint64_t k = 2; k <= k_max; ++k) {
    const double j = static_cast<double>(k - 2);
    std::vector<double> next(depth_poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < depth_poly.size(); ++i) {
      next[i] += j * depth_poly[i];
      next[i + 1] += alpha * depth_poly[i];
    }
    for (double& c : next) c /= alpha + j;
    depth_poly = std::move(next);
    bound_ratio *= (alpha + j) / (j + 1.0);

    // The path probability is bounded by alpha^(k-1)/(k-1)! 2^-(k-2); the
    // remaining terms are geometrically smaller.
    const double bound = bound_ratio * std::ldexp(1.0, -static_cast<int>(k) + 2);
    if (k > 8 && bound < 1e-18 * std::max(sum.value(), 1e-300)) break;
    if (h >= depth_poly.size()) continue;
    const double depth_mass = depth_poly[h];
    if (depth_mass == 0.0) continue;
    sum.add(depth_mass * detail::descendant_tail(alpha, n, k, half));
  }
  return std::clamp(sum.value(), 0.0, 1.0);
}

/// P(parent of node k + j is k) = alpha k^(j-1) / (alpha + k - 1)^(j); independent of n.
inline double parent_prob(double alpha, std::uint64_t k, std::uint64_t j) {
  if (k < 1 || j < 1) throw std::invalid_argument("parent_prob: k and j must be at least 1");
  const double base = alpha + static_cast<double>(k) - 1.0;
  double value = alpha / (base + static_cast<double>(j - 1));
  for (std::uint64_t i = 0; i + 1 < j; ++i) {
    value *= (static_cast<double>(k + i)) / (base + static_cast<double>(i));
  }
  return value;
}

/// E_n(U_m), the expected number of subtrees of size m, 1 <= m < n.
inline double expected_subtree_count(double alpha, std::uint64_t n, std::uint64_t m) {
  if (m < 1 || m >= n) throw std::invalid_argument("expected_subtree_count: m must lie in 1..n-1");
  const double md = static_cast<double>(m);
  return alpha * (alpha + static_cast<double>(n) - 1.0) / ((alpha + md) * (alpha + md - 1.0));
}

/// Probability of two centroids, i.e. of a subtree of exactly n/2 nodes.
inline double prob_two_centroids(const FamilyParams& family, std::uint64_t n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("prob_two_centroids: n must be even and >= 2");
  return expected_subtree_count(family.alpha(), n, n / 2);
}

/// Exact P_n(S = m) for the size S of the nearest centroid's subtree,
/// ceil(n/2) <= m < n.
///
/// A subtree of size m > n/2 is rooted at the nearest centroid unless one of its
/// root's children has at least floor(n/2) descendants. When m = n/2 the
/// subtree root is the farther of two centroids, so the mass is 0.
inline double p_centroid_subtree_exact(const FamilyParams& family, std::uint64_t n, std::uint64_t m) {
  if (n < 2 || 2 * m < n || m >= n) {
    throw std::invalid_argument("p_centroid_subtree_exact: m must lie in ceil(n/2)..n-1");
  }
  if (2 * m == n) return 0.0;
  const double alpha = family.alpha();
  const std::uint64_t half = n / 2;
  const double sigma = static_cast<double>(n) / (2.0 * static_cast<double>(m));

  CompensatedSum displaced;  // A_m: some child j of the subtree root heads > n/2 nodes
  double root_child = 1.0;   // P(F_j = 1), starting at j = 2
  for (std::uint64_t j = 2; j + half <= m; ++j) {
    if (j > 2) root_child *= static_cast<double>(j - 2) / (alpha + static_cast<double>(j) - 2.0);
    displaced.add(root_child * detail::descendant_tail(alpha, m, j, half));
    // Remaining terms are bounded by (3/sigma) alpha/(j-1) (1-sigma)^(j-1) each.
    if (m >= 3) {
      const double next_bound =
          3.0 / sigma * alpha / static_cast<double>(j) * std::pow(1.0 - sigma, static_cast<double>(j));
      if (next_bound / sigma < 1e-16 * displaced.value()) break;
    }
  }
  const double p_subtree = expected_subtree_count(alpha, n, m);
  return std::max(0.0, p_subtree * (1.0 - displaced.value()));
}

/// Full law of S over ceil(n/2)..n; the m = n mass is the complement.
///
/// Same decomposition as p_centroid_subtree_exact, but each tail
/// P_m(node j has >= n/2 descendants) is advanced from m to m + 1 by the urn
/// step instead of being summed afresh, so the table costs O(n) per child j.
inline DistributionTable centroid_subtree_pmf_exact(const FamilyParams& family, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("centroid_subtree_pmf_exact: n must be at least 1");
  DistributionTable table;
  table.provenance = Provenance::Exact;
  const std::uint64_t first = (n + 1) / 2;
  if (n >= 2) {
    const double alpha = family.alpha();
    const std::uint64_t half = n / 2;
    // Children beyond j_max contribute below 1e-17 for every m (path bound at sigma ~ 1/2).
    std::uint64_t j_max = 2;
    for (double bound = 1.0; j_max + half < n && bound >= 1e-17; ++j_max) {
      bound = 12.0 * alpha / static_cast<double>(j_max) * std::pow(0.5, static_cast<double>(j_max));
    }
    std::vector<CompensatedSum> displaced(n - first);
    double root_child = 1.0;  // P(F_j = 1)
    for (std::uint64_t j = 2; j <= j_max && j + half < n; ++j) {
      if (j > 2) root_child *= static_cast<double>(j - 2) / (alpha + static_cast<double>(j) - 2.0);
      // In a subtree of size m, node j has D ~ urn(alpha | j - 1) after N = m - j steps.
      // Start at N = half, where D >= half means every step joined j's subtree.
      const double jd = static_cast<double>(j);
      const auto t = static_cast<double>(half);
      double log_all = 0.0;  // log P(D = N) at N = half
      for (std::uint64_t i = 0; i < half; ++i) {
        log_all += std::log1p(-(jd - 1.0) / (jd - 1.0 + alpha + static_cast<double>(i)));
      }
      double tail = std::exp(log_all);
      // log P(D = t - 1) at N = half
      double log_edge = log_all + std::log(t * (jd - 1.0) / (t - 1.0 + alpha));
      for (std::uint64_t m = j + half; m < n; ++m) {
        if (m >= first) displaced[m - first].add(root_child * tail);
        const double big_n = static_cast<double>(m - j);
        tail += std::exp(log_edge) * (t - 1.0 + alpha) / (big_n + jd - 1.0 + alpha);
        log_edge += std::log((big_n + 1.0) / (big_n + 2.0 - t) * (big_n - t + jd) / (big_n + jd - 1.0 + alpha));
      }
    }
    CompensatedSum below;
    for (std::uint64_t m = first; m < n; ++m) {
      double p = 0.0;
      if (2 * m != n) p = std::max(0.0, expected_subtree_count(alpha, n, m) * (1.0 - displaced[m - first].value()));
      table.support.push_back(static_cast<double>(m));
      table.mass.push_back(p);
      below.add(p);
    }
    table.support.push_back(static_cast<double>(n));
    table.mass.push_back(std::max(0.0, 1.0 - below.value()));
    return table;
  }
  table.support.push_back(1.0);
  table.mass.push_back(1.0);
  return table;
}

/// Moon's exact results for recursive trees.
struct MoonStats {
  double expected_depth = 0.0;
  double expected_label = 0.0;
  /// Index B = 0..floor(n/2): probability that the nearest centroid's
  /// ancestral branch has B nodes.
  std::vector<double> ancestral_branch_pmf;
};

inline MoonStats moon_recursive_stats(const FamilyParams& family, std::uint64_t n) {
  if (family.alpha() != 1.0) throw std::invalid_argument("moon_recursive_stats: recursive family only");
  if (n < 2) throw std::invalid_argument("moon_recursive_stats: n must be at least 2");
  const double nd = static_cast<double>(n);
  const std::uint64_t big_m = (n - 1) / 2;
  const double md = static_cast<double>(big_m);
  MoonStats stats;
  stats.expected_depth = md / (nd - md);
  stats.expected_label = 0.5 + nd * (nd + 1.0) / (2.0 * (nd - md) * (nd + 1.0 - md));
  stats.ancestral_branch_pmf.assign(n / 2 + 1, 0.0);
  // B in 1..M by the harmonic-sum formula; B = n/2 (n even) only arises for the
  // farther of two centroids; B = 0 takes the remaining mass.
  // The harmonic sum runs over ceil((n+1)/2) <= b <= n - B - 1, which is empty
  // at B = M and gains the term 1/(n - B) at each step down.
  CompensatedSum positive;
  CompensatedSum harmonic;
  for (std::uint64_t branch = big_m; branch >= 1; --branch) {
    const double bd = static_cast<double>(branch);
    const double p = nd / ((nd - bd) * (nd - bd + 1.0)) * (1.0 - harmonic.value());
    stats.ancestral_branch_pmf[branch] = p;
    positive.add(p);
    harmonic.add(1.0 / (nd - bd));
  }
  stats.ancestral_branch_pmf[0] = std::max(0.0, 1.0 - positive.value());
  return stats;
}

}  // namespace centroidlab
