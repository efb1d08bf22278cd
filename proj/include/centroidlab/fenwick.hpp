#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <vector>

namespace centroidlab {

/// Binary-indexed prefix-sum tree over non-negative weights, positions 1..size.
template <class Weight>
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(std::size_t size) { reset(size); }

  // Storage is padded to a power of two so that the descent in find() needs
  // no bounds test; padded slots only ever hold partial sums.
  void reset(std::size_t size) {
    size_ = size;
    top_bit_ = size == 0 ? 0 : std::bit_floor(size);
    tree_.assign(size == 0 ? 1 : 2 * top_bit_, Weight{});
  }

  std::size_t size() const { return size_; }

  void add(std::size_t position, Weight delta) {
    for (; position < tree_.size(); position += position & (~position + 1)) tree_[position] += delta;
  }

  Weight prefix(std::size_t position) const {
    Weight sum{};
    for (; position > 0; position &= position - 1) sum += tree_[position];
    return sum;
  }

  /// Smallest position whose prefix sum exceeds `target`; size() + 1 if none.
  std::size_t find(Weight target) const {
    std::size_t position = 0;
    // Branch-free descent: the comparison outcome is random, so selects beat jumps.
    for (std::size_t step = top_bit_; step > 0; step >>= 1) {
      const Weight w = tree_[position + step];
      const bool right = !(target < w);
      position += right ? step : 0;
      target -= right ? w : Weight{};
    }
    return std::min(position + 1, size_ + 1);
  }

 private:
  std::vector<Weight> tree_{Weight{}};
  std::size_t size_ = 0;
  std::size_t top_bit_ = 0;
};

}  // namespace centroidlab
