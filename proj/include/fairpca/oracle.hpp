#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fairpca/fnpm.hpp"
#include "fairpca/linalg.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/synthetic.hpp"
#include "fairpca/types.hpp"

// Exact in-memory counterparts of the streaming estimators. These routines
// may hold dense d x d matrices, so they are for verification and small
// problems, not for the streaming paths.
namespace fairpca::oracle {

struct OfflineStats {
  Index dim = 0;
  std::array<std::int64_t, 2> count{0, 0};
  std::array<Vector, 2> mean;            // per-group sample means
  std::array<Matrix, 2> second_moment;   // per-group E-hat[x x^T]
  Vector pooled_mean;
  Matrix pooled_second_moment;           // Sigma-hat over all samples

  Vector mean_gap() const { return mean[1] - mean[0]; }
  Matrix moment_gap() const { return second_moment[1] - second_moment[0]; }
};

// Accumulates exact moments over a finite sample set (binary attribute 0).
// center=true subtracts the pooled mean from every sample first, which turns
// the pooled second moment into the centered covariance. Raises
// GroupStarvation unless both groups appear.
OfflineStats offline_statistics(std::span<const stream::LabeledSample> samples,
                                bool center = false);

// Top-m eigenvectors of S by |eigenvalue|, plus the mean-gap residual
// column when it is not already inside that span. The ordering by magnitude
// matters: S is a difference of PSD matrices and its informative directions
// can carry either sign.
fnpm::UnfairSubspace unfair_subspace_from_moments(const Vector& f,
                                                  const Matrix& s, Index m,
                                                  double g_threshold = 1e-8);

fnpm::UnfairSubspace offline_unfair_subspace(const OfflineStats& stats,
                                             Index m,
                                             double g_threshold = 1e-8);

struct FairPcaSolution {
  fnpm::UnfairSubspace unfair;
  linalg::OrthonormalBasis loading;  // V*, d x k
  double objective = 0.0;            // tr(V*^T Sigma V*)
};

// Exact constrained solution: top-k eigenvectors (by value; the deflated
// matrix is PSD) of (I - U U^T) Sigma (I - U U^T). Raises DimensionBudget
// when k + m' > d.
FairPcaSolution fair_pca_given_unfair(fnpm::UnfairSubspace unfair,
                                      const Matrix& sigma, Index k);
FairPcaSolution fair_pca_from_moments(const Vector& f, const Matrix& s,
                                      const Matrix& sigma, Index m, Index k,
                                      double g_threshold = 1e-8);

FairPcaSolution offline_fair_pca(const OfflineStats& stats, Index m, Index k,
                                 double g_threshold = 1e-8);

// Unconstrained top-k PCA of Sigma-hat; returned as a FairPcaSolution with
// an empty unfair subspace so downstream tooling treats both uniformly.
FairPcaSolution vanilla_pca_from_moments(const Matrix& sigma, Index k);
FairPcaSolution vanilla_pca(const OfflineStats& stats, Index k);

// Multi-attribute one-vs-all construction: for every attribute r and group
// value a, the in-vs-rest mean gap and the top-m_r |eigenvalue| directions
// of the in-vs-rest second-moment gap, all concatenated and reduced by a QR
// that drops dependent columns (keeping earlier ones).
fnpm::UnfairSubspace offline_unfair_subspace_multi(
    std::span<const stream::LabeledSample> samples,
    const stream::AttributeSchema& schema, std::span<const Index> m_per_attr);

// Population moments implied by a synthetic spec; exact up to rounding.
struct SyntheticMoments {
  Vector mu0, mu1, f;
  Matrix second0, second1;  // per-group E[x x^T]
  Matrix s;                 // second1 - second0
  Matrix sigma;             // mixture E[x x^T] (mixture mean is zero)
};

SyntheticMoments synthetic_moments(const stream::SyntheticSpec& spec);

}  // namespace fairpca::oracle
