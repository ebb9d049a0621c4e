#pragma once

#include <vector>

#include "fairpca/error.hpp"
#include "fairpca/types.hpp"

namespace fairpca::linalg {

struct QrResult;

// Column-orthonormal frame with an explicit ambient dimension so that the
// rank-0 case (no columns) still knows which space it lives in. Construction
// through adopt() verifies ||Q^T Q - I||_max <= 1e-10.
class OrthonormalBasis {
 public:
  OrthonormalBasis() : q_(0, 0) {}  // empty frame in a 0-dimensional space
  explicit OrthonormalBasis(Index ambient_dim);

  static OrthonormalBasis adopt(Matrix q);

  const Matrix& columns() const noexcept { return q_; }
  Index ambient_dim() const noexcept { return q_.rows(); }
  Index rank() const noexcept { return q_.cols(); }
  bool empty() const noexcept { return q_.cols() == 0; }

 private:
  struct Unchecked {};
  OrthonormalBasis(Matrix q, Unchecked) : q_(std::move(q)) {}

  Matrix q_;

  friend struct QrResult;
  friend QrResult qr_factor(const Matrix& m);
};

// Relative rank tolerance: a column whose R-diagonal magnitude is at or
// below rank_tolerance * (largest input column norm) counts as deficient.
inline constexpr double kRankTolerance = 1e-12;

// QR factorization outcome with per-column deficiency information. Used by
// iterative solvers that repair deficient columns instead of failing.
struct QrResult {
  OrthonormalBasis basis;
  std::vector<Index> deficient_columns;  // empty means full rank
};

// Householder QR of a tall matrix (rows >= cols). The sign of each Q column
// is flipped so the R diagonal is nonnegative, making the output a
// deterministic function of the input. Never materializes anything larger
// than the input.
QrResult qr_factor(const Matrix& m);

// Same, but rank deficiency is an error (RankDeficient).
OrthonormalBasis qr_orthonormalize(const Matrix& m);

// m - q (q^T m), computed at O(d * cols) working memory.
Matrix project_out(const OrthonormalBasis& q, const Matrix& m);
Vector project_out(const OrthonormalBasis& q, const Vector& v);

enum class EigOrder {
  ByValueDescending,
  ByMagnitudeDescending,
};

struct SymmetricEig {
  Vector values;   // sorted per requested order
  Matrix vectors;  // matching columns, unit norm
};

// Dense symmetric eigendecomposition. Symmetry is required up to
// ||a - a^T||_max <= 1e-8 * ||a||_max, then (a + a^T)/2 is decomposed.
// Ties under the requested order keep a stable, deterministic ordering.
// This is the one routine in the library allowed to hold a d x d matrix;
// callers on streaming paths must not reach it.
SymmetricEig symmetric_eig(const Matrix& a, EigOrder order);

// Convenience: top-r eigenvector frame of a symmetric_eig result.
OrthonormalBasis top_eigenvectors(const SymmetricEig& eig, Index r);

// Orthonormalizes columns left to right, dropping (never repairing) any
// column whose residual against the columns already accepted falls at or
// below kRankTolerance times the largest input column norm. Earlier columns
// win ties, so callers order the concatenation by priority.
OrthonormalBasis qr_drop_dependent(const Matrix& m);

// Largest singular value by power iteration on the Gram matrix of the
// shorter side: tolerance 1e-10 on the iterate change, cap 10,000 sweeps.
double spectral_norm(const Matrix& m);

// ||(I - a a^T) b||_2: the sine of the largest principal angle between the
// two spans when ranks match, and 1 when b has directions outside a's reach.
double sin_distance(const OrthonormalBasis& a, const OrthonormalBasis& b);

void require_finite(const Matrix& m, const char* what);

}  // namespace fairpca::linalg
