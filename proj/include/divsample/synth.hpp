#pragma once

// Synthetic multi-domain feature sets: Gaussian subgroups shared by all
// domains, with per-domain subgroup proportions and a per-domain mean offset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/random.hpp"

namespace divsample {

struct SynthSpec {
  std::size_t num_domains = 4;
  std::size_t per_domain = 2000;
  std::size_t dim = 16;
  std::size_t subgroups = 8;
  /// Norm of each domain's mean offset.
  double shift_scale = 1.0;
  /// 0 gives uniform subgroup proportions; towards 1 the proportions follow a
  /// flat Dirichlet draw per domain.
  double imbalance = 0.3;
  /// Within-subgroup standard deviation.
  double cluster_spread = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_domains < 2) throw ValidationError("need at least 2 domains");
    if (subgroups < 1) throw ValidationError("need at least 1 subgroup");
    if (per_domain < subgroups) throw ValidationError("per_domain must be >= subgroups");
    if (dim < 1) throw ValidationError("dim must be >= 1");
    if (!(cluster_spread > 0.0)) throw ValidationError("cluster_spread must be positive");
    if (!(shift_scale >= 0.0) || !std::isfinite(shift_scale))
      throw ValidationError("shift_scale must be finite and non-negative");
    if (!(imbalance >= 0.0 && imbalance < 1.0))
      throw ValidationError("imbalance must lie in [0, 1)");
  }
};

/// p = (1 - imbalance) / G + imbalance * q with q ~ Dirichlet(1, ..., 1).
template <typename Urbg>
std::vector<double> subgroup_proportions(std::size_t subgroups, double imbalance, Urbg& rng) {
  std::vector<double> q(subgroups);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (auto& v : q) v = gamma(rng);
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  std::vector<double> p(subgroups);
  for (std::size_t g = 0; g < subgroups; ++g)
    p[g] = (1.0 - imbalance) / static_cast<double>(subgroups) + imbalance * q[g] / total;
  return p;
}

/// Largest-remainder rounding of n * p to integers summing to n.
inline std::vector<std::size_t> allocate_counts(std::size_t n, const std::vector<double>& p) {
  std::vector<std::size_t> counts(p.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    const double exact = static_cast<double>(n) * p[g];
    counts[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r % p.size()].second];
  return counts;
}

inline DomainCollection generate_domains(const SynthSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Rng center_rng = substream(spec.seed, hash_tag("centers"));
  std::normal_distribution<double> center_normal(0.0, 1.0);
  FeatureMatrix centers(static_cast<Eigen::Index>(spec.subgroups), d);
  for (Eigen::Index g = 0; g < centers.rows(); ++g)
    for (Eigen::Index j = 0; j < d; ++j) centers(g, j) = center_normal(center_rng);

  std::vector<FeatureTable> tables;
  for (std::size_t dom = 0; dom < spec.num_domains; ++dom) {
    Rng rng = substream(spec.seed, hash_tag("domain"), dom);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::RowVectorXd offset = Eigen::RowVectorXd::Zero(d);
    if (spec.shift_scale > 0.0) {
      for (Eigen::Index j = 0; j < d; ++j) offset[j] = normal(rng);
      offset *= spec.shift_scale / offset.norm();
    }

    const auto p = spec.imbalance > 0.0
                       ? subgroup_proportions(spec.subgroups, spec.imbalance, rng)
                       : std::vector<double>(spec.subgroups, 1.0 / static_cast<double>(spec.subgroups));
    const auto counts = allocate_counts(spec.per_domain, p);

    const std::string tag = "d" + std::to_string(dom);
    FeatureMatrix x(static_cast<Eigen::Index>(spec.per_domain), d);
    std::vector<std::string> ids, labels;
    Eigen::Index row = 0;
    for (std::size_t g = 0; g < spec.subgroups; ++g)
      for (std::size_t c = 0; c < counts[g]; ++c, ++row) {
        for (Eigen::Index j = 0; j < d; ++j)
          x(row, j) = centers(static_cast<Eigen::Index>(g), j) + offset[j] +
                      spec.cluster_spread * normal(rng);
        ids.push_back(tag + "-" + std::to_string(row));
        labels.push_back("g" + std::to_string(g));
      }
    tables.emplace_back(tag, std::move(x), std::move(ids), std::move(labels),
                        std::vector<double>(spec.per_domain, 1.0));
  }
  return DomainCollection(std::move(tables));
}

}  // namespace divsample
