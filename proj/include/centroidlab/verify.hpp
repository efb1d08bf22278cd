#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "centroidlab/analysis.hpp"
#include "centroidlab/core.hpp"
#include "centroidlab/exact.hpp"
#include "centroidlab/treegen.hpp"

namespace centroidlab {

/// One line of the enumeration-equivalence table.
struct OracleCheck {
  std::string name;
  std::size_t comparisons = 0;
  double max_abs_error = 0.0;
  bool pass = true;
};

struct OracleReport {
  FamilyParams family = FamilyParams::recursive();
  std::size_t n_max = 0;
  std::vector<OracleCheck> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
  }
};

namespace detail {

// Exact laws of one size, aggregated over every growth history.
struct EnumeratedLaws {
  std::size_t n = 0;
  std::vector<ExactRational> lambda_half;     // [k]: P(size[k] - 1 >= floor(n/2))
  std::vector<ExactRational> lambda_sixtenth; // [k]: P(size[k] - 1 >= floor(3n/5))
  std::vector<ExactRational> depth;           // [h]: P(D = h)
  std::vector<ExactRational> subtree_count;   // [m]: E(U_m)
  std::vector<ExactRational> subtree;         // [m]: P(S = m)
  std::vector<ExactRational> branch;          // [b]: P(n - S = b)
  std::vector<std::vector<ExactRational>> node_depth;  // [k][h]
  ExactRational two_centroids;
  ExactRational mean_depth;
  ExactRational mean_label;
  std::size_t trees = 0;
  std::size_t centroid_mismatches = 0;  // branch rule versus distance argmin
};

inline EnumeratedLaws enumerate_laws(const FamilyParams& family, std::size_t n) {
  EnumeratedLaws laws;
  laws.n = n;
  laws.lambda_half.assign(n + 1, 0);
  laws.lambda_sixtenth.assign(n + 1, 0);
  laws.depth.assign(n, 0);
  laws.subtree_count.assign(n + 1, 0);
  laws.subtree.assign(n + 1, 0);
  laws.branch.assign(n + 1, 0);
  laws.node_depth.assign(n + 1, std::vector<ExactRational>(n, 0));
  const std::size_t half = n / 2;
  const std::size_t sixtenth = 3 * n / 5;

  for (const auto& [tree, prob] : enumerate_histories(family, n)) {
    ++laws.trees;
    const auto sizes = subtree_sizes(tree);
    for (std::size_t k = 1; k <= n; ++k) {
      if (sizes[k] - 1 >= half) laws.lambda_half[k] += prob;
      if (sizes[k] - 1 >= sixtenth) laws.lambda_sixtenth[k] += prob;
      if (k >= 2) laws.subtree_count[sizes[k]] += prob;
      laws.node_depth[k][depth_of(tree, static_cast<Label>(k))] += prob;
    }
    const auto report = find_centroids(tree);
    laws.depth[report.nearest_depth] += prob;
    laws.subtree[report.subtree_size] += prob;
    laws.branch[report.ancestral_branch_size] += prob;
    laws.mean_depth += prob * report.nearest_depth;
    laws.mean_label += prob * report.nearest_label;
    if (report.centroid_labels.size() == 2) laws.two_centroids += prob;

    // Independent definition: the minimisers of the total distance.
    const auto totals = node_total_distances(tree);
    const auto best = *std::min_element(totals.begin() + 1, totals.end());
    std::vector<Label> argmin;
    for (std::size_t v = 1; v <= n; ++v) {
      if (totals[v] == best) argmin.push_back(static_cast<Label>(v));
    }
    auto labels = report.centroid_labels;
    std::sort(labels.begin(), labels.end());
    if (labels != argmin) ++laws.centroid_mismatches;
  }
  return laws;
}

class CheckAccumulator {
 public:
  CheckAccumulator(std::string name, double tolerance) : tolerance_(tolerance) { check_.name = std::move(name); }

  void compare(const ExactRational& expected, double actual) {
    const double error = std::fabs(expected.convert_to<double>() - actual);
    ++check_.comparisons;
    if (!(error <= check_.max_abs_error)) check_.max_abs_error = std::isnan(error) ? INFINITY : error;
    if (!(error <= tolerance_)) check_.pass = false;
  }

  void require(bool ok) {
    ++check_.comparisons;
    if (!ok) check_.pass = false;
  }

  OracleCheck result() const { return check_; }

 private:
  double tolerance_;
  OracleCheck check_;
};

}  // namespace detail

/// Compares every exact formula with exhaustive enumeration for sizes 2..n_max.
inline OracleReport run_oracle_suite(const FamilyParams& family, std::size_t n_max, double tolerance = 1e-12) {
  if (n_max < 2 || n_max > 9) throw std::invalid_argument("oracle: n must lie in 2..9");
  detail::require_realizable(family);
  const double alpha = family.alpha();
  const bool recursive = alpha == 1.0;

  detail::CheckAccumulator lambda("p_lambda_exact", tolerance);
  detail::CheckAccumulator depth("p_depth_ge_exact", tolerance);
  detail::CheckAccumulator node_depth("node_depth_pmf", tolerance);
  detail::CheckAccumulator counts("expected_subtree_count", tolerance);
  detail::CheckAccumulator twins("prob_two_centroids", tolerance);
  detail::CheckAccumulator subtree("p_centroid_subtree_exact", tolerance);
  detail::CheckAccumulator moon("moon_recursive_stats", tolerance);
  detail::CheckAccumulator definition("centroid_definition", tolerance);

  for (std::size_t n = 2; n <= n_max; ++n) {
    const auto laws = detail::enumerate_laws(family, n);
    definition.require(laws.centroid_mismatches == 0);
    for (std::size_t k = 1; k <= n; ++k) {
      lambda.compare(laws.lambda_half[k], p_lambda_exact({family, n, k, 0.5}));
      lambda.compare(laws.lambda_sixtenth[k], p_lambda_exact({family, n, k, 0.6}));
      const auto pmf = node_depth_pmf(alpha, k);
      for (std::size_t h = 0; h < n; ++h) node_depth.compare(laws.node_depth[k][h], h < pmf.mass.size() ? pmf.mass[h] : 0.0);
    }
    ExactRational tail = 0;
    for (std::size_t h = n; h-- > 0;) {
      tail += laws.depth[h];
      depth.compare(tail, p_depth_ge_exact(family, n, h));
    }
    depth.compare(ExactRational(0), p_depth_ge_exact(family, n, n));
    for (std::size_t m = 1; m < n; ++m) counts.compare(laws.subtree_count[m], expected_subtree_count(alpha, n, m));
    if (n % 2 == 0) twins.compare(laws.two_centroids, prob_two_centroids(family, n));
    const auto table = centroid_subtree_pmf_exact(family, n);
    for (std::size_t m = (n + 1) / 2; m < n; ++m) {
      subtree.compare(laws.subtree[m], p_centroid_subtree_exact(family, n, m));
    }
    for (std::size_t i = 0; i < table.support.size(); ++i) {
      subtree.compare(laws.subtree[static_cast<std::size_t>(table.support[i])], table.mass[i]);
    }
    if (recursive) {
      const auto stats = moon_recursive_stats(family, n);
      moon.compare(laws.mean_depth, stats.expected_depth);
      moon.compare(laws.mean_label, stats.expected_label);
      for (std::size_t b = 0; b < stats.ancestral_branch_pmf.size(); ++b) {
        moon.compare(laws.branch[b], stats.ancestral_branch_pmf[b]);
      }
    }
  }

  OracleReport report;
  report.family = family;
  report.n_max = n_max;
  for (auto* acc : {&lambda, &depth, &node_depth, &counts, &twins, &subtree, &definition}) {
    report.checks.push_back(acc->result());
  }
  if (recursive) report.checks.push_back(moon.result());
  return report;
}

}  // namespace centroidlab
