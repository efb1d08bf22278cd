#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "centroidlab/core.hpp"
#include "centroidlab/fenwick.hpp"
#include "centroidlab/rng.hpp"

namespace centroidlab {

/// Canonical arbitrary-precision rational; used only by the enumeration oracle.
using ExactRational = boost::multiprecision::cpp_rational;

/// How each parent is drawn. Both methods realise the same law.
///
/// Direct: constant time per node. A weight a + b k with b >= 0 splits into a
/// uniform node (mass a per node) or the parent of a uniform non-root node
/// (mass b per child); a capped weight d - k is drawn as a uniform
/// (node, slot) pair, redrawn while the slot is occupied.
/// Fenwick: a prefix-sum tree over the current weights, O(log n) per node.
enum class SamplingMethod { Direct, Fenwick };

class IncreasingTree;

template <class Urbg>
IncreasingTree sample_tree_with(const FamilyParams& family, std::size_t n, Urbg& gen,
                                SamplingMethod method = SamplingMethod::Direct);

/// A labelled increasing tree stored as a parent array. Node 1 is the root and
/// parent(k) < k for every k >= 2.
class IncreasingTree {
 public:
  /// Size-1 tree of the given family.
  explicit IncreasingTree(FamilyParams family) : family_(family), parent_(2, 0) {}

  std::size_t size() const { return parent_.size() - 1; }
  Label parent(Label k) const { return parent_.at(k); }
  const FamilyParams& family() const { return family_; }

  /// Indexed by label; entries 0 and 1 are 0.
  std::span<const Label> parents() const { return parent_; }

  /// parent[2..n], the serialised form.
  std::vector<Label> parent_list() const { return {parent_.begin() + 2, parent_.end()}; }

  friend bool operator==(const IncreasingTree& a, const IncreasingTree& b) {
    return a.parent_ == b.parent_ && a.family_ == b.family_;
  }

 private:
  IncreasingTree(FamilyParams family, std::vector<Label> parent)
      : family_(family), parent_(std::move(parent)) {}

  friend IncreasingTree tree_from_parents(std::span<const Label>, const FamilyParams&);
  template <class Urbg>
  friend IncreasingTree sample_tree_with(const FamilyParams&, std::size_t, Urbg&, SamplingMethod);
  friend std::vector<std::pair<IncreasingTree, ExactRational>> enumerate_histories(
      const FamilyParams&, std::size_t);

  FamilyParams family_;
  std::vector<Label> parent_;
};

/// Validates parent[2..n] and builds the tree.
inline IncreasingTree tree_from_parents(std::span<const Label> parents, const FamilyParams& family) {
  std::vector<Label> parent(parents.size() + 2, 0);
  std::vector<std::uint32_t> outdeg(parents.size() + 2, 0);
  const auto cap = family.degree_cap();
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const Label k = static_cast<Label>(i + 2);
    const Label p = parents[i];
    if (p < 1) {
      throw std::invalid_argument("node " + std::to_string(k) + " has parent label below 1");
    }
    if (p > k) {
      throw std::invalid_argument("node " + std::to_string(k) + ": parent exceeds label");
    }
    if (p == k) {
      throw std::invalid_argument("node " + std::to_string(k) + ": increasing property violated");
    }
    if (cap && ++outdeg[p] > static_cast<std::uint32_t>(*cap)) {
      throw std::invalid_argument("node " + std::to_string(p) + " exceeds the out-degree cap");
    }
    parent[k] = p;
  }
  return IncreasingTree(family, std::move(parent));
}

namespace detail {

inline void require_realizable(const FamilyParams& family) {
  if (!family.realizable()) {
    throw std::domain_error("family with alpha=" + std::to_string(family.alpha()) +
                            " has no growth process (alpha > 1 requires alpha = d/(d-1))");
  }
}

// Attachment weights proportional to c1 + c2 - c2 k, scaled to integers when
// the family allows it.
enum class SamplerKind { Uniform, PlaneIntegral, CappedIntegral, Real };

inline SamplerKind sampler_kind(const FamilyParams& family) {
  if (family.c2() == 0.0) return SamplerKind::Uniform;
  if (family.variant() == Variant::PlaneOriented) return SamplerKind::PlaneIntegral;
  if (family.degree_cap()) return SamplerKind::CappedIntegral;
  return SamplerKind::Real;
}


/// Reusable buffers for repeated sampling. parent[k] for k in 2..n.
class TreeSampler {
 public:
  template <class Urbg>
  void sample(const FamilyParams& family, std::size_t n, Urbg& gen, std::vector<Label>& parent,
              SamplingMethod method = SamplingMethod::Direct) {
    require_realizable(family);
    parent.assign(n + 1, 0);
    if (n < 2) return;
    const auto kind = sampler_kind(family);
    if (kind == SamplerKind::Uniform) {
      for (std::size_t m = 2; m <= n; ++m) parent[m] = static_cast<Label>(1 + uniform_below(gen, m - 1));
      return;
    }
    if (method == SamplingMethod::Direct) {
      switch (kind) {
        case SamplerKind::PlaneIntegral:
          sample_plane_direct(n, gen, parent);
          return;
        case SamplerKind::CappedIntegral:
          sample_capped_direct(*family.degree_cap(), n, gen, parent);
          return;
        default:
          sample_real_direct(family, n, gen, parent);
          return;
      }
    }
    switch (kind) {
      case SamplerKind::PlaneIntegral:
        // weight k + 1; new node 1, parent +1; total 2(m-1) - 1
        sample_integral(n, gen, parent, 1, +1);
        return;
      case SamplerKind::CappedIntegral: {
        // weight d - k; new node d, parent -1; total (d-1)(m-1) + 1
        const auto d = static_cast<std::int64_t>(*family.degree_cap());
        sample_integral(n, gen, parent, d, -1);
        return;
      }
      default:
        sample_real(family, n, gen, parent);
        return;
    }
  }

 private:
  // weight k + 1 over m - 1 nodes: m - 1 unit masses plus one per edge
  template <class Urbg>
  static void sample_plane_direct(std::size_t n, Urbg& gen, std::vector<Label>& parent) {
    for (std::size_t m = 2; m <= n; ++m) {
      const std::uint64_t r = uniform_below(gen, 2 * m - 3);
      parent[m] = static_cast<Label>(r < m - 1 ? r + 1 : parent[r - (m - 1) + 2]);
    }
  }

  template <class Urbg>
  void sample_capped_direct(std::uint32_t d, std::size_t n, Urbg& gen, std::vector<Label>& parent) {
    outdeg_.assign(n + 1, 0);
    for (std::size_t m = 2; m <= n; ++m) {
      for (;;) {
        const std::uint64_t r = uniform_below(gen, static_cast<std::uint64_t>(m - 1) * d);
        const std::size_t v = r / d + 1;
        if (r % d >= outdeg_[v]) {
          parent[m] = static_cast<Label>(v);
          ++outdeg_[v];
          break;
        }
      }
    }
  }

  // weight a + b k with a = c1 + c2 > 0 and b = -c2 > 0
  template <class Urbg>
  static void sample_real_direct(const FamilyParams& family, std::size_t n, Urbg& gen, std::vector<Label>& parent) {
    const double a = family.c1() + family.c2();
    const double b = -family.c2();
    for (std::size_t m = 2; m <= n; ++m) {
      const double fresh_mass = a * static_cast<double>(m - 1);
      const double u = uniform_unit(gen) * (fresh_mass + b * static_cast<double>(m - 2));
      if (u < fresh_mass) {
        parent[m] = static_cast<Label>(std::min<std::size_t>(m - 2, static_cast<std::size_t>(u / a)) + 1);
      } else {
        const auto j = std::min<std::size_t>(m - 3, static_cast<std::size_t>((u - fresh_mass) / b)) + 2;
        parent[m] = parent[j];
      }
    }
  }

  template <class Urbg>
  void sample_integral(std::size_t n, Urbg& gen, std::vector<Label>& parent, std::int64_t fresh,
                       std::int64_t step) {
    int_tree_.reset(n);
    int_tree_.add(1, fresh);
    std::int64_t total = fresh;
    for (std::size_t m = 2; m <= n; ++m) {
      const auto draw = static_cast<std::int64_t>(uniform_below(gen, static_cast<std::uint64_t>(total)));
      const std::size_t chosen = int_tree_.find(draw);
      parent[m] = static_cast<Label>(chosen);
      int_tree_.add(chosen, step);
      int_tree_.add(m, fresh);
      total += step + fresh;
    }
  }

  template <class Urbg>
  void sample_real(const FamilyParams& family, std::size_t n, Urbg& gen, std::vector<Label>& parent) {
    const double fresh = family.c1() + family.c2();
    const double step = -family.c2();
    real_tree_.reset(n);
    real_tree_.add(1, fresh);
    for (std::size_t m = 2; m <= n; ++m) {
      // Exact total (m-1) c1 + c2 rather than the accumulated one.
      const double total = static_cast<double>(m - 1) * family.c1() + family.c2();
      std::size_t chosen = real_tree_.find(uniform_unit(gen) * total);
      if (chosen > m - 1) chosen = m - 1;
      parent[m] = static_cast<Label>(chosen);
      real_tree_.add(chosen, step);
      real_tree_.add(m, fresh);
    }
  }

  FenwickTree<std::int64_t> int_tree_;
  FenwickTree<double> real_tree_;
  std::vector<std::uint32_t> outdeg_;
};

}  // namespace detail

/// Samples a tree of size n from the family's growth process using `gen`.
template <class Urbg>
IncreasingTree sample_tree_with(const FamilyParams& family, std::size_t n, Urbg& gen, SamplingMethod method) {
  if (n < 1) throw std::invalid_argument("sample_tree: n must be at least 1");
  detail::TreeSampler sampler;
  std::vector<Label> parent;
  sampler.sample(family, n, gen, parent, method);
  if (n == 1) parent.assign(2, 0);
  return IncreasingTree(family, std::move(parent));
}

/// Deterministic in (family, n, rng).
inline IncreasingTree sample_tree(const FamilyParams& family, std::size_t n, const RngStream& rng,
                                  SamplingMethod method = SamplingMethod::Direct) {
  auto gen = rng.engine();
  return sample_tree_with(family, n, gen, method);
}

namespace detail {

inline ExactRational exact_value(double x) { return ExactRational(x); }

}  // namespace detail

/// Every growth history of size n with its exact probability, for n <= 9.
inline std::vector<std::pair<IncreasingTree, ExactRational>> enumerate_histories(
    const FamilyParams& family, std::size_t n) {
  if (n < 1 || n > 9) throw std::invalid_argument("enumerate_histories: n must lie in 1..9");
  detail::require_realizable(family);

  // Exact weights: c1, c2 are integers for the named families; a general
  // alpha is taken at its exact binary value.
  const ExactRational c1 = detail::exact_value(family.c1());
  const ExactRational c2 = detail::exact_value(family.c2());
  const auto cap = family.degree_cap();

  std::vector<std::pair<IncreasingTree, ExactRational>> out;
  std::vector<Label> parent(n + 1, 0);
  std::vector<std::uint32_t> outdeg(n + 1, 0);

  auto recurse = [&](auto&& self, std::size_t m, const ExactRational& prob) -> void {
    if (m > n) {
      out.emplace_back(IncreasingTree(family, parent), prob);
      return;
    }
    const ExactRational total = c1 * static_cast<long>(m - 1) + c2;
    for (Label v = 1; v < m; ++v) {
      if (cap && outdeg[v] >= static_cast<std::uint32_t>(*cap)) continue;
      const ExactRational weight = c1 + c2 - c2 * static_cast<long>(outdeg[v]);
      if (weight == 0) continue;
      parent[m] = v;
      ++outdeg[v];
      self(self, m + 1, prob * weight / total);
      --outdeg[v];
    }
    parent[m] = 0;
  };
  if (n == 1) parent.assign(2, 0);
  recurse(recurse, 2, ExactRational(1));
  return out;
}

/// Header line `#family=<tag>,n=<n>,seed=<seed>`, then one tree per line as
/// comma-separated parent[2..n].
inline void write_trees(std::ostream& os, const FamilyParams& family, std::size_t n,
                        std::uint64_t seed, std::span<const IncreasingTree> trees) {
  os << "#family=" << family.tag() << ",n=" << n << ",seed=" << seed << '\n';
  for (const auto& tree : trees) {
    const auto parents = tree.parent_list();
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (i) os << ',';
      os << parents[i];
    }
    os << '\n';
  }
}

struct TreeFile {
  FamilyParams family = FamilyParams::recursive();
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<IncreasingTree> trees;
};

inline TreeFile read_trees(std::istream& is) {
  TreeFile file;
  std::string line;
  if (!std::getline(is, line) || line.rfind("#family=", 0) != 0) {
    throw std::invalid_argument("tree file: missing '#family=' header");
  }
  {
    std::istringstream header(line.substr(1));
    std::string field;
    bool have_family = false;
    bool have_n = false;
    while (std::getline(header, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("tree file: malformed header field");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "family") {
        file.family = family_from_tag(value);
        have_family = true;
      } else if (key == "n") {
        file.n = std::stoull(value);
        have_n = true;
      } else if (key == "seed") {
        file.seed = std::stoull(value);
      }
    }
    if (!have_family || !have_n) throw std::invalid_argument("tree file: header lacks family or n");
  }
  while (std::getline(is, line)) {
    std::vector<Label> parents;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) parents.push_back(static_cast<Label>(std::stoul(cell)));
    if (parents.size() + 1 != file.n) {
      throw std::invalid_argument("tree file: row length does not match n");
    }
    file.trees.push_back(tree_from_parents(parents, file.family));
  }
  return file;
}

}  // namespace centroidlab
