#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "divsample/error.hpp"

namespace divsample {

/// A fixed-cardinality selection of instance indices, stored sorted and distinct.
class Subset {
public:
  Subset() = default;

  explicit Subset(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
      throw ValidationError("subset indices must be distinct");
  }

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  bool contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }

  /// Throws unless every index lies in [0, n).
  void check_bounds(std::size_t n) const {
    if (!indices_.empty() && indices_.back() >= n)
      throw ValidationError("subset index " + std::to_string(indices_.back()) +
                            " out of range for " + std::to_string(n) + " instances");
  }

  friend bool operator==(const Subset&, const Subset&) = default;
  friend auto operator<=>(const Subset&, const Subset&) = default;

private:
  std::vector<std::size_t> indices_;
};

}  // namespace divsample
