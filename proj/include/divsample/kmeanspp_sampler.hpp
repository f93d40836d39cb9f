#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/random.hpp"
#include "divsample/subset.hpp"

namespace divsample {

/// Running state of weighted k-means++ seeding: the chosen points and, for
/// every point, the squared distance to its nearest chosen point.
class KppState {
public:
  explicit KppState(const FeatureMatrix& x)
      : x_(&x),
        d2_(static_cast<std::size_t>(x.rows()), std::numeric_limits<double>::infinity()),
        is_chosen_(static_cast<std::size_t>(x.rows()), false) {}

  void add(std::size_t index) {
    if (index >= d2_.size()) throw ValidationError("k-means++ index out of range");
    if (is_chosen_[index]) throw ValidationError("k-means++ point chosen twice");
    is_chosen_[index] = true;
    chosen_.push_back(index);
    const auto c = static_cast<Eigen::Index>(index);
    for (Eigen::Index i = 0; i < x_->rows(); ++i) {
      const double d2 = (x_->row(i) - x_->row(c)).squaredNorm();
      auto& slot = d2_[static_cast<std::size_t>(i)];
      if (d2 < slot) slot = d2;
    }
  }

  /// Squared distance of each point to its closest chosen point (inf before the first pick).
  const std::vector<double>& d2() const noexcept { return d2_; }
  const std::vector<std::size_t>& chosen() const noexcept { return chosen_; }
  bool is_chosen(std::size_t i) const { return is_chosen_[i]; }

private:
  const FeatureMatrix* x_;
  std::vector<double> d2_;
  std::vector<bool> is_chosen_;
  std::vector<std::size_t> chosen_;
};

/// Weighted k-means++ subset selection.
///
/// The first point is drawn proportionally to w; every later point is drawn
/// among the unchosen ones with probability proportional to w_i * D(x_i)^2.
/// If all such masses vanish before k points are chosen (duplicated points),
/// the remaining picks fall back to weighted random sampling.
template <typename Urbg>
Subset kmeanspp_sample(const FeatureMatrix& x, std::span<const double> weights, std::size_t k,
                       Urbg& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (weights.size() != n) throw ValidationError("one weight per instance required");
  std::size_t positive = 0;
  for (double w : weights) positive += w > 0.0 ? 1 : 0;
  if (k > positive)
    throw InsufficientSupportError("k = " + std::to_string(k) + " exceeds the " +
                                   std::to_string(positive) + " positive-weight instances");
  if (k == 0) return Subset{};

  KppState state(x);
  std::vector<double> mass(weights.begin(), weights.end());
  state.add(draw_categorical(std::span<const double>(mass), rng));

  while (state.chosen().size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass[i] = state.is_chosen(i) ? 0.0 : weights[i] * state.d2()[i];
      total += mass[i];
    }
    if (!(total > 0.0)) {
      for (std::size_t i = 0; i < n; ++i) mass[i] = state.is_chosen(i) ? 0.0 : weights[i];
      total = 0.0;
      for (double m : mass) total += m;
      if (!(total > 0.0)) throw InsufficientSupportError("no selectable instances remain");
    }
    state.add(draw_categorical(std::span<const double>(mass), rng));
  }
  return Subset(state.chosen());
}

template <typename Urbg>
Subset kmeanspp_sample(const FeatureTable& table, std::size_t k, Urbg& rng) {
  return kmeanspp_sample(table.features(), std::span<const double>(table.weights()), k, rng);
}

}  // namespace divsample
