#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/kernels.hpp"
#include "divsample/numeric.hpp"
#include "divsample/sampler_engine.hpp"
#include "divsample/subset.hpp"

namespace divsample {

/// Sum over all points of the squared distance to the nearest subset member.
inline double quantisation_error(const FeatureMatrix& x, const Subset& subset) {
  if (subset.empty()) throw ValidationError("quantisation error of an empty subset");
  subset.check_bounds(static_cast<std::size_t>(x.rows()));
  CompensatedSum total;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : subset) {
      const double d2 = (x.row(i) - x.row(static_cast<Eigen::Index>(c))).squaredNorm();
      if (d2 < best) best = d2;
    }
    total.add(best);
  }
  return total.value();
}

inline double quantisation_error(const FeatureTable& table, const Subset& subset) {
  return quantisation_error(table.features(), subset);
}

struct MmdEstimate {
  double value = 0.0;
  std::pair<std::size_t, std::size_t> sample_sizes{0, 0};
};

namespace detail {

inline double matrix_mean(const Matrix& m) {
  CompensatedSum s;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) s.add(m(i, j));
  return s.value() / static_cast<double>(m.size());
}

inline double mmd_from_means(double aa, double bb, double ab) {
  return std::sqrt(std::max(0.0, aa + bb - 2.0 * ab));
}

}  // namespace detail

/// Plug-in kernel MMD between two samples:
/// sqrt(mean(K_aa) + mean(K_bb) - 2 mean(K_ab)), negative round-off clamped.
inline MmdEstimate mmd(const FeatureMatrix& a, const FeatureMatrix& b, const GammaSet& gammas) {
  if (a.cols() != b.cols()) throw ValidationError("feature dimension mismatch");
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError("MMD needs non-empty samples");
  const double aa = detail::matrix_mean(rbf_mixture_gram(a, gammas).matrix());
  const double bb = detail::matrix_mean(rbf_mixture_gram(b, gammas).matrix());
  const double ab = detail::matrix_mean(cross_gram(a, b, gammas));
  return {detail::mmd_from_means(aa, bb, ab),
          {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows())}};
}

inline MmdEstimate mmd(const FeatureTable& a, const FeatureTable& b, const GammaSet& gammas) {
  return mmd(a.features(), b.features(), gammas);
}

/// 100 * (1 / (R * D)) * sum_r |D - D_r|.
inline double mape(double ground_truth, std::span<const double> estimates) {
  if (!(ground_truth > 0.0)) throw ValidationError("MAPE needs a positive ground truth");
  if (estimates.empty()) throw ValidationError("MAPE needs at least one estimate");
  CompensatedSum s;
  for (double e : estimates) s.add(std::abs(ground_truth - e));
  return 100.0 * s.value() / (static_cast<double>(estimates.size()) * ground_truth);
}

/// Squared Frobenius distance between the unbiased feature covariances,
/// scaled by 1 / (4 d^2).
inline double coral_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.cols() != b.cols()) throw ValidationError("feature dimension mismatch");
  if (a.rows() < 2 || b.rows() < 2) throw ValidationError("covariance needs at least 2 rows");
  auto cov = [](const FeatureMatrix& x) {
    const Matrix centered = x.rowwise() - x.colwise().mean();
    return Matrix(centered.transpose() * centered / static_cast<double>(x.rows() - 1));
  };
  const double d = static_cast<double>(a.cols());
  return (cov(a) - cov(b)).squaredNorm() / (4.0 * d * d);
}

inline double coral_distance(const FeatureTable& a, const FeatureTable& b) {
  return coral_distance(a.features(), b.features());
}

struct MapeReport {
  double ground_truth = 0.0;
  std::vector<double> estimates;
  double mape = 0.0;
  /// Standard error of the per-draw absolute percentage errors.
  double std_error = 0.0;

  static MapeReport from(double ground_truth, std::vector<double> estimates) {
    MapeReport r;
    r.ground_truth = ground_truth;
    r.mape = divsample::mape(ground_truth, estimates);
    std::vector<double> ape;
    ape.reserve(estimates.size());
    for (double e : estimates) ape.push_back(100.0 * std::abs(ground_truth - e) / ground_truth);
    r.std_error = mean_stderr(ape).std_error;
    r.estimates = std::move(estimates);
    return r;
  }
};

struct QeReport {
  std::vector<double> values;
  double mean = 0.0;
  double std_error = 0.0;

  static QeReport from(std::vector<double> values) {
    QeReport r;
    const auto ms = mean_stderr(values);
    r.mean = ms.mean;
    r.std_error = ms.std_error;
    r.values = std::move(values);
    return r;
  }
};

struct BenchConfig {
  SamplerKind kind = SamplerKind::WeightedRandom;
  std::size_t k = 32;
  std::size_t draws = 1000;
  GammaSet gammas = GammaSet::defaults();
  std::uint64_t seed = 0;
};

struct QeBenchReport {
  std::vector<std::string> domains;
  std::vector<QeReport> per_domain;
  QeReport pooled;
};

struct PairMape {
  std::string a, b;
  MapeReport report;
};

struct MmdBenchReport {
  std::vector<PairMape> pairs;
  /// MAPE of the pair-averaged MMD.
  MapeReport average;
};

namespace detail {

inline void require_bench_input(const DomainCollection& collection, const BenchConfig& cfg,
                                std::size_t min_domains) {
  if (collection.size() < min_domains)
    throw ValidationError("benchmark needs at least " + std::to_string(min_domains) + " domain(s)");
  if (cfg.draws == 0) throw ValidationError("benchmark needs at least one draw");
  if (cfg.k == 0) throw ValidationError("batch size k must be positive");
  for (const auto& t : collection)
    if (t.n() < cfg.k)
      throw ValidationError("domain '" + t.domain() + "' has fewer than k instances");
}

inline SamplerEngine bench_engine(const DomainCollection& collection, const BenchConfig& cfg) {
  EngineConfig ec;
  ec.kind = cfg.kind;
  ec.batch_size = cfg.k;
  ec.policy.warmup = false;
  ec.gammas = cfg.gammas;
  ec.seed = cfg.seed;
  return SamplerEngine(ec, collection);
}

}  // namespace detail

/// Quantisation error of `draws` independent subsets per domain.
inline QeBenchReport qe_bench(const DomainCollection& collection, const BenchConfig& cfg) {
  detail::require_bench_input(collection, cfg, 1);
  const SamplerEngine engine = detail::bench_engine(collection, cfg);
  QeBenchReport out;
  std::vector<double> pooled;
  for (std::size_t d = 0; d < collection.size(); ++d) {
    std::vector<double> values;
    values.reserve(cfg.draws);
    for (std::uint64_t r = 0; r < cfg.draws; ++r)
      values.push_back(quantisation_error(collection[d], engine.draw(d, r)));
    pooled.insert(pooled.end(), values.begin(), values.end());
    out.domains.push_back(collection[d].domain());
    out.per_domain.push_back(QeReport::from(std::move(values)));
  }
  out.pooled = QeReport::from(std::move(pooled));
  return out;
}

/// MMD of every unordered domain pair on the full tables.
inline std::vector<double> pairwise_mmd(const DomainCollection& collection, const GammaSet& gammas) {
  std::vector<double> self(collection.size());
  for (std::size_t d = 0; d < collection.size(); ++d)
    self[d] = detail::matrix_mean(rbf_mixture_gram(collection[d], gammas).matrix());
  std::vector<double> out;
  for (std::size_t a = 0; a < collection.size(); ++a)
    for (std::size_t b = a + 1; b < collection.size(); ++b)
      out.push_back(detail::mmd_from_means(
          self[a], self[b], detail::matrix_mean(cross_gram(collection[a], collection[b], gammas))));
  return out;
}

inline double mean_of(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

/// MAPE of small-sample pairwise MMDs against the full-data ground truth.
/// Draw r takes one independent size-k subset per domain.
inline MmdBenchReport mmd_mape_bench(const DomainCollection& collection, const BenchConfig& cfg) {
  detail::require_bench_input(collection, cfg, 2);
  const std::size_t num_domains = collection.size();
  const auto truth = pairwise_mmd(collection, cfg.gammas);
  const SamplerEngine engine = detail::bench_engine(collection, cfg);

  std::vector<std::vector<double>> per_pair(truth.size());
  std::vector<double> averaged;
  averaged.reserve(cfg.draws);
  for (std::uint64_t r = 0; r < cfg.draws; ++r) {
    std::vector<FeatureTable> batches;
    for (std::size_t d = 0; d < num_domains; ++d)
      batches.push_back(collection[d].select(engine.draw(d, r)));
    const auto est = pairwise_mmd(DomainCollection(std::move(batches)), cfg.gammas);
    for (std::size_t p = 0; p < est.size(); ++p) per_pair[p].push_back(est[p]);
    averaged.push_back(mean_of(est));
  }

  MmdBenchReport out;
  std::size_t p = 0;
  for (std::size_t a = 0; a < num_domains; ++a)
    for (std::size_t b = a + 1; b < num_domains; ++b, ++p)
      out.pairs.push_back({collection[a].domain(), collection[b].domain(),
                           MapeReport::from(truth[p], std::move(per_pair[p]))});
  out.average = MapeReport::from(mean_of(truth), std::move(averaged));
  return out;
}

}  // namespace divsample
