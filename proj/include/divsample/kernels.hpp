#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"

namespace divsample {

using Matrix = Eigen::MatrixXd;

/// Bandwidths of the RBF mixture, in inverse squared feature units.
class GammaSet {
public:
  explicit GammaSet(std::vector<double> gammas) : gammas_(std::move(gammas)) {
    if (gammas_.empty()) throw ValidationError("gamma set must be non-empty");
    for (double g : gammas_)
      if (!(g > 0.0) || !std::isfinite(g))
        throw ValidationError("every gamma must be a finite positive real");
  }

  /// {0.001, 0.01, 0.1, 1, 10}
  static GammaSet defaults() { return GammaSet({0.001, 0.01, 0.1, 1.0, 10.0}); }

  /// Parses a comma-separated list such as "0.1,1,10".
  static GammaSet parse(std::string_view list) {
    std::vector<double> out;
    for (auto field : detail::split_csv_line(list)) {
      auto v = detail::parse_double(field);
      if (!v) throw ValidationError("bad gamma '" + std::string(field) + "'");
      out.push_back(*v);
    }
    return GammaSet(std::move(out));
  }

  std::size_t size() const noexcept { return gammas_.size(); }
  const std::vector<double>& values() const noexcept { return gammas_; }

  /// Sum over gamma of exp(-gamma * sq_dist).
  double evaluate(double sq_dist) const noexcept {
    double s = 0.0;
    for (double g : gammas_) s += std::exp(-g * sq_dist);
    return s;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < gammas_.size(); ++i) {
      if (i) s += ',';
      s += detail::format_double(gammas_[i]);
    }
    return s;
  }

private:
  std::vector<double> gammas_;
};

namespace detail {

// Plain sequential dot product. Every kernel entry goes through this one
// routine, so equal rows give bit-identical norms and cross terms.
inline double dot(const double* a, const double* b, Eigen::Index d) noexcept {
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

inline std::vector<double> row_sq_norms(const FeatureMatrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<std::size_t>(i)] = dot(x.row(i).data(), x.row(i).data(), x.cols());
  return out;
}

inline void require_finite(const FeatureMatrix& x) {
  if (!x.allFinite()) throw NumericError("non-finite feature value");
}

}  // namespace detail

/// All pairwise squared distances ||a_i - b_j||^2 via the norm expansion,
/// clamped at zero.
inline Matrix pairwise_sq_distances(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.cols() != b.cols()) throw ValidationError("feature dimension mismatch");
  detail::require_finite(a);
  detail::require_finite(b);
  const auto na = detail::row_sq_norms(a);
  const auto nb = detail::row_sq_norms(b);
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double cross = detail::dot(a.row(i).data(), b.row(j).data(), a.cols());
      out(i, j) = std::max(0.0, na[static_cast<std::size_t>(i)] +
                                    nb[static_cast<std::size_t>(j)] - 2.0 * cross);
    }
  return out;
}

/// Similarity matrix S_ij = sum_gamma exp(-gamma ||x_i - x_j||^2).
class GramMatrix {
public:
  GramMatrix(Matrix s, GammaSet gammas) : s_(std::move(s)), gammas_(std::move(gammas)) {}

  const Matrix& matrix() const noexcept { return s_; }
  const GammaSet& gammas() const noexcept { return gammas_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(s_.rows()); }

private:
  Matrix s_;
  GammaSet gammas_;
};

/// DPP likelihood kernel L_ij = sqrt(w_i w_j) S_ij.
class LikelihoodKernel {
public:
  LikelihoodKernel(Matrix l, std::vector<double> weights)
      : l_(std::move(l)), weights_(std::move(weights)) {
    if (l_.rows() != l_.cols()) throw ValidationError("likelihood kernel must be square");
    if (weights_.size() != static_cast<std::size_t>(l_.rows()))
      throw ValidationError("one weight per kernel row required");
  }

  /// Kernel used as-is with unit source weights (tests, verification tools).
  static LikelihoodKernel from_matrix(Matrix l) {
    const auto n = static_cast<std::size_t>(l.rows());
    return LikelihoodKernel(std::move(l), std::vector<double>(n, 1.0));
  }

  const Matrix& matrix() const noexcept { return l_; }
  const std::vector<double>& source_weights() const noexcept { return weights_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(l_.rows()); }

private:
  Matrix l_;
  std::vector<double> weights_;
};

inline GramMatrix rbf_mixture_gram(const FeatureMatrix& x, const GammaSet& gammas) {
  if (x.rows() < 1) throw ValidationError("gram matrix needs at least one point");
  detail::require_finite(x);
  const auto norms = detail::row_sq_norms(x);
  const Eigen::Index n = x.rows();
  const double diag = gammas.evaluate(0.0);
  Matrix s(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    s(j, j) = diag;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double cross = detail::dot(x.row(i).data(), x.row(j).data(), x.cols());
      const double d2 = std::max(0.0, norms[static_cast<std::size_t>(i)] +
                                          norms[static_cast<std::size_t>(j)] - 2.0 * cross);
      s(i, j) = s(j, i) = gammas.evaluate(d2);
    }
  }
  return GramMatrix(std::move(s), gammas);
}

inline GramMatrix rbf_mixture_gram(const FeatureTable& table, const GammaSet& gammas) {
  return rbf_mixture_gram(table.features(), gammas);
}

inline LikelihoodKernel weighted_likelihood(const GramMatrix& gram, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(gram.n());
  if (weights.size() != gram.n()) throw ValidationError("one weight per gram row required");
  std::vector<double> root(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ValidationError("weights must be finite and non-negative");
    root[i] = std::sqrt(weights[i]);
  }
  const Matrix& s = gram.matrix();
  Matrix l(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      // sqrt(w_i w_j) as a product of roots keeps L exactly symmetric
      l(i, j) = root[static_cast<std::size_t>(i)] * root[static_cast<std::size_t>(j)] * s(i, j);
    }
  return LikelihoodKernel(std::move(l), std::vector<double>(weights.begin(), weights.end()));
}

/// Cross-domain block K_ij = sum_gamma exp(-gamma ||a_i - b_j||^2).
inline Matrix cross_gram(const FeatureMatrix& a, const FeatureMatrix& b, const GammaSet& gammas) {
  Matrix k = pairwise_sq_distances(a, b);
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = gammas.evaluate(k(i, j));
  return k;
}

inline Matrix cross_gram(const FeatureTable& a, const FeatureTable& b, const GammaSet& gammas) {
  return cross_gram(a.features(), b.features(), gammas);
}

}  // namespace divsample
