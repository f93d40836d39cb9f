#pragma once

// Exact spectral k-DPP sampling.
//
// A k-DPP with likelihood kernel L draws a size-k subset A with probability
// det(L_A) / e_k(lambda), where e_k is the k-th elementary symmetric
// polynomial of the eigenvalues of L. Sampling runs in two phases:
//
//   1. choose k eigenvectors, walking the spectrum from the last eigenvalue
//      to the first with inclusion odds taken from the ESP table;
//   2. sample the projection DPP spanned by the chosen eigenvectors, one
//      item at a time, conditioning the basis after every pick.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "divsample/error.hpp"
#include "divsample/kernels.hpp"
#include "divsample/random.hpp"
#include "divsample/subset.hpp"

namespace divsample {

struct SpectralDecomposition {
  /// Sorted descending, non-negative after clamping.
  Eigen::VectorXd eigenvalues;
  /// Orthonormal columns; column m pairs with eigenvalues[m].
  Matrix eigenvectors;
  std::size_t effective_rank = 0;

  std::size_t n() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Relative clamp applied to the spectrum: eigenvalues below
/// kClampFactor * lambda_max * n are set to exactly zero.
inline constexpr double kClampFactor = 1e-10;

inline SpectralDecomposition decompose(const Matrix& l) {
  if (l.rows() != l.cols()) throw ValidationError("kernel must be square");
  if (l.rows() == 0) throw ValidationError("kernel must be non-empty");
  if (!l.allFinite()) throw NumericError("kernel contains non-finite entries");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(l);
  if (solver.info() != Eigen::Success)
    throw NumericError("symmetric eigendecomposition did not converge");

  const Eigen::Index n = l.rows();
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();

  const double lmax = std::max(0.0, out.eigenvalues[0]);
  const double threshold = kClampFactor * lmax * static_cast<double>(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    if (out.eigenvalues[m] <= threshold || lmax == 0.0)
      out.eigenvalues[m] = 0.0;
    else
      ++out.effective_rank;
  }
  return out;
}

inline SpectralDecomposition decompose(const LikelihoodKernel& kernel) {
  return decompose(kernel.matrix());
}

/// Prefix elementary symmetric polynomials: at(j, m) = e_j(lambda_1..lambda_m).
class EspTable {
public:
  EspTable(const Eigen::VectorXd& eigenvalues, std::size_t k) {
    const auto n = static_cast<std::size_t>(eigenvalues.size());
    if (k > n) throw ValidationError("ESP order k exceeds the number of eigenvalues");
    e_ = Matrix::Zero(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(n + 1));
    e_.row(0).setOnes();
    for (Eigen::Index m = 1; m <= static_cast<Eigen::Index>(n); ++m)
      for (Eigen::Index j = 1; j <= static_cast<Eigen::Index>(k); ++j)
        e_(j, m) = e_(j, m - 1) + eigenvalues[m - 1] * e_(j - 1, m - 1);
    if (!std::isfinite(e_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n))))
      throw NumericError("elementary symmetric polynomial overflowed; rescale the kernel");
  }

  double at(std::size_t j, std::size_t m) const {
    return e_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
  }
  std::size_t k() const noexcept { return static_cast<std::size_t>(e_.rows() - 1); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(e_.cols() - 1); }
  /// e_k(lambda_1..lambda_n), the k-DPP normalizer.
  double normalizer() const { return at(k(), n()); }
  const Matrix& table() const noexcept { return e_; }

private:
  Matrix e_;
};

inline EspTable esp_table(const Eigen::VectorXd& eigenvalues, std::size_t k) {
  return EspTable(eigenvalues, k);
}

/// Phase 1: picks k eigen-indices (0-based, ascending).
template <typename Urbg>
std::vector<std::size_t> sample_eigenvector_subset(const SpectralDecomposition& decomp,
                                                   const EspTable& esp, std::size_t k,
                                                   Urbg& rng) {
  if (k > decomp.effective_rank)
    throw InsufficientRankError("k = " + std::to_string(k) + " exceeds effective rank " +
                                std::to_string(decomp.effective_rank));
  if (esp.n() != decomp.n() || esp.k() < k)
    throw ValidationError("ESP table does not match the decomposition");

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::size_t remaining = k;
  for (std::size_t m = decomp.n(); m >= 1 && remaining > 0; --m) {
    const double lambda = decomp.eigenvalues[static_cast<Eigen::Index>(m - 1)];
    bool take;
    if (remaining == m) {
      // every earlier index is needed to fill the remaining slots
      take = true;
    } else {
      const double denom = esp.at(remaining, m);
      const double p = denom > 0.0 ? lambda * esp.at(remaining - 1, m - 1) / denom : 0.0;
      take = uniform01(rng) < p;
    }
    if (take) {
      chosen.push_back(m - 1);
      --remaining;
    }
  }
  std::reverse(chosen.begin(), chosen.end());
  return chosen;
}

namespace detail {

inline double orthogonality_loss(const Matrix& v) {
  const Eigen::Index c = v.cols();
  return (v.transpose() * v - Matrix::Identity(c, c)).cwiseAbs().maxCoeff();
}

/// Modified Gram-Schmidt in place.
inline void modified_gram_schmidt(Matrix& v) {
  for (Eigen::Index a = 0; a < v.cols(); ++a) {
    for (Eigen::Index b = 0; b < a; ++b) v.col(a) -= v.col(b).dot(v.col(a)) * v.col(b);
    const double norm = v.col(a).norm();
    if (!(norm > 1e-300)) throw NumericError("projection basis lost rank");
    v.col(a) /= norm;
  }
}

}  // namespace detail

/// Orthonormality tolerance for projection bases.
inline constexpr double kOrthoTolerance = 1e-8;

/// Phase 2: samples the projection DPP whose kernel is V V^T.
template <typename Urbg>
Subset sample_projection_dpp(Matrix v, Urbg& rng) {
  const Eigen::Index n = v.rows();
  if (v.cols() == 0) return Subset{};
  if (v.cols() > n) throw ValidationError("projection basis has more columns than rows");
  if (detail::orthogonality_loss(v) > kOrthoTolerance)
    throw ValidationError("projection basis columns are not orthonormal");

  std::vector<std::size_t> items;
  items.reserve(static_cast<std::size_t>(v.cols()));
  std::vector<double> mass(static_cast<std::size_t>(n));

  while (v.cols() > 0) {
    double largest = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      mass[static_cast<std::size_t>(i)] = v.row(i).squaredNorm();
      largest = std::max(largest, mass[static_cast<std::size_t>(i)]);
    }
    if (largest < 1e-12) throw NumericError("degenerate projection basis");
    const auto pick = static_cast<Eigen::Index>(draw_categorical(std::span<const double>(mass), rng));
    items.push_back(static_cast<std::size_t>(pick));

    const Eigen::Index c = v.cols();
    if (c == 1) break;

    Eigen::Index pivot = 0;
    v.row(pick).cwiseAbs().maxCoeff(&pivot);
    const double pivot_value = v(pick, pivot);
    for (Eigen::Index col = 0; col < c; ++col) {
      if (col == pivot) continue;
      v.col(col) -= (v(pick, col) / pivot_value) * v.col(pivot);
      v(pick, col) = 0.0;
    }
    if (pivot != c - 1) v.col(pivot) = v.col(c - 1);
    v.conservativeResize(Eigen::NoChange, c - 1);

    detail::modified_gram_schmidt(v);
    if (detail::orthogonality_loss(v) > kOrthoTolerance) detail::modified_gram_schmidt(v);
  }
  return Subset(std::move(items));
}

/// Draws one size-k subset from the k-DPP described by (decomp, esp).
template <typename Urbg>
Subset kdpp_sample(const SpectralDecomposition& decomp, const EspTable& esp, std::size_t k,
                   Urbg& rng) {
  const auto eig = sample_eigenvector_subset(decomp, esp, k, rng);
  Matrix basis(decomp.eigenvectors.rows(), static_cast<Eigen::Index>(eig.size()));
  for (std::size_t c = 0; c < eig.size(); ++c)
    basis.col(static_cast<Eigen::Index>(c)) = decomp.eigenvectors.col(static_cast<Eigen::Index>(eig[c]));
  return sample_projection_dpp(std::move(basis), rng);
}

/// det(L_A) with the principal minor extracted from `l`.
inline double principal_minor_det(const Matrix& l, const Subset& subset) {
  subset.check_bounds(static_cast<std::size_t>(l.rows()));
  const auto k = static_cast<Eigen::Index>(subset.size());
  if (k == 0) return 1.0;
  Matrix minor(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      minor(a, b) = l(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(a)]),
                      static_cast<Eigen::Index>(subset[static_cast<std::size_t>(b)]));
  return std::max(0.0, minor.partialPivLu().determinant());
}

/// P(A) = det(L_A) / e_k(lambda) under the k-DPP, given the normalizer e_k.
inline double kdpp_subset_probability(const Matrix& l, const Subset& subset, double normalizer) {
  if (!(normalizer > 0.0)) throw InsufficientRankError("k-DPP normalizer is zero");
  return principal_minor_det(l, subset) / normalizer;
}

inline double kdpp_subset_probability(const LikelihoodKernel& kernel, const Subset& subset,
                                      std::size_t k) {
  if (subset.size() != k) throw ValidationError("subset size must equal k");
  const auto decomp = decompose(kernel);
  const EspTable esp(decomp.eigenvalues, k);
  return kdpp_subset_probability(kernel.matrix(), subset, esp.normalizer());
}

/// Precomputed spectral state for repeated k-DPP draws from one kernel.
class KdppSampler {
public:
  KdppSampler(const LikelihoodKernel& kernel, std::size_t k)
      : decomp_(decompose(kernel)), esp_(decomp_.eigenvalues, std::min(k, decomp_.n())), k_(k) {
    if (k > decomp_.effective_rank)
      throw InsufficientRankError("k = " + std::to_string(k) + " exceeds effective rank " +
                                  std::to_string(decomp_.effective_rank));
    // Zero-weight items have all-zero kernel rows; remove the round-off left
    // in their eigenvector rows so they carry exactly no selection mass.
    const auto& w = kernel.source_weights();
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] == 0.0) decomp_.eigenvectors.row(static_cast<Eigen::Index>(i)).setZero();
  }

  template <typename Urbg>
  Subset operator()(Urbg& rng) const {
    return kdpp_sample(decomp_, esp_, k_, rng);
  }

  const SpectralDecomposition& decomposition() const noexcept { return decomp_; }
  const EspTable& esp() const noexcept { return esp_; }
  std::size_t k() const noexcept { return k_; }

private:
  SpectralDecomposition decomp_;
  EspTable esp_;
  std::size_t k_;
};

}  // namespace divsample
