#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "centroidlab/core.hpp"
#include "centroidlab/treegen.hpp"

namespace centroidlab {

/// Centroid statistics of one tree. With two centroids the nearer one (the
/// parent of the other) is reported as nearest.
struct CentroidReport {
  std::vector<Label> centroid_labels;
  Label nearest_label = 1;
  std::uint32_t nearest_depth = 0;
  std::uint32_t subtree_size = 1;
  std::uint32_t ancestral_branch_size = 0;

  friend bool operator==(const CentroidReport&, const CentroidReport&) = default;
};

namespace detail {

// Works on parent arrays indexed by label (entries 0 and 1 unused).
inline void fill_subtree_sizes(std::span<const Label> parent, std::vector<std::uint32_t>& sizes) {
  const std::size_t n = parent.size() - 1;
  sizes.assign(n + 1, 1);
  sizes[0] = 0;
  for (std::size_t k = n; k >= 2; --k) sizes[parent[k]] += sizes[k];
}

inline std::uint32_t depth_in(std::span<const Label> parent, Label k) {
  std::uint32_t depth = 0;
  for (; k > 1; k = parent[k]) ++depth;
  return depth;
}

inline CentroidReport centroid_report(std::span<const Label> parent,
                                      std::span<const std::uint32_t> sizes) {
  const std::size_t n = parent.size() - 1;
  // Nodes whose subtree holds more than half the tree form the root-to-centroid
  // path; labels increase along it, so the nearest centroid is the largest.
  Label nearest = 1;
  for (std::size_t k = n; k >= 2; --k) {
    if (2ull * sizes[k] > n) {
      nearest = static_cast<Label>(k);
      break;
    }
  }
  CentroidReport report;
  report.centroid_labels.push_back(nearest);
  report.nearest_label = nearest;
  report.nearest_depth = depth_in(parent, nearest);
  report.subtree_size = sizes[nearest];
  report.ancestral_branch_size = static_cast<std::uint32_t>(n - sizes[nearest]);
  if (n % 2 == 0) {
    for (std::size_t k = nearest + 1; k <= n; ++k) {
      if (parent[k] == nearest && 2ull * sizes[k] == n) {
        report.centroid_labels.push_back(static_cast<Label>(k));
        break;
      }
    }
  }
  return report;
}

}  // namespace detail

/// sizes[k] = 1 + number of descendants of k, indexed by label (sizes[0] = 0).
inline std::vector<std::uint32_t> subtree_sizes(const IncreasingTree& tree) {
  std::vector<std::uint32_t> sizes;
  detail::fill_subtree_sizes(tree.parents(), sizes);
  return sizes;
}

inline CentroidReport find_centroids(const IncreasingTree& tree) {
  const auto sizes = subtree_sizes(tree);
  return detail::centroid_report(tree.parents(), sizes);
}

/// result[v] = sum over u of dist(v, u), indexed by label (result[0] = 0).
inline std::vector<std::uint64_t> node_total_distances(const IncreasingTree& tree) {
  const auto parent = tree.parents();
  const std::size_t n = tree.size();
  const auto sizes = subtree_sizes(tree);
  std::vector<std::uint64_t> depth(n + 1, 0);
  std::uint64_t root_total = 0;
  for (std::size_t k = 2; k <= n; ++k) {
    depth[k] = depth[parent[k]] + 1;
    root_total += depth[k];
  }
  // Moving from a parent to child c brings sizes[c] nodes one step closer and
  // the remaining n - sizes[c] one step further.
  std::vector<std::uint64_t> total(n + 1, 0);
  total[1] = root_total;
  for (std::size_t k = 2; k <= n; ++k) total[k] = total[parent[k]] + n - 2ull * sizes[k];
  return total;
}

inline std::uint32_t depth_of(const IncreasingTree& tree, Label k) {
  if (k < 1 || k > tree.size()) throw std::out_of_range("depth_of: label out of range");
  return detail::depth_in(tree.parents(), k);
}

/// True iff node k has at least floor(sigma n) descendants. With sigma = 1/2
/// this is membership of the root-to-nearest-centroid path.
inline bool on_centroid_path(std::span<const std::uint32_t> sizes, Label k, double sigma) {
  const std::size_t n = sizes.size() - 1;
  if (k < 1 || k > n) throw std::out_of_range("on_centroid_path: label out of range");
  return sizes[k] - 1 >= descendant_threshold(sigma, n);
}

inline bool on_centroid_path(const IncreasingTree& tree, Label k, double sigma) {
  return on_centroid_path(subtree_sizes(tree), k, sigma);
}

}  // namespace centroidlab
