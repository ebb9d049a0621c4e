#include "fairpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairpca/rng.hpp"

namespace fairpca::linalg {

namespace {

constexpr double kOrthonormalTolerance = 1e-10;
constexpr double kSymmetryTolerance = 1e-8;
constexpr double kPowerIterTolerance = 1e-10;
constexpr int kPowerIterCap = 10000;

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    raise(ErrorKind::NotFinite, std::string(what) + " has non-finite entries");
}

OrthonormalBasis::OrthonormalBasis(Index ambient_dim)
    : q_(Matrix(ambient_dim, 0)) {}

OrthonormalBasis OrthonormalBasis::adopt(Matrix q) {
  require_finite(q, "basis");
  if (q.cols() > q.rows())
    raise(ErrorKind::DimensionMismatch,
          "more columns than ambient dimension: " + std::to_string(q.cols()) +
              " > " + std::to_string(q.rows()));
  if (q.cols() > 0) {
    const Matrix gram = q.transpose() * q;
    const double err =
        (gram - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
    if (err > kOrthonormalTolerance)
      raise(ErrorKind::InvalidSpec,
            "columns are not orthonormal (gram deviation " +
                std::to_string(err) + ")");
  }
  return OrthonormalBasis(std::move(q), Unchecked{});
}

QrResult qr_factor(const Matrix& m) {
  require_finite(m, "qr input");
  if (m.rows() < m.cols())
    raise(ErrorKind::DimensionMismatch,
          "qr input must be tall: " + std::to_string(m.rows()) + "x" +
              std::to_string(m.cols()));
  const Index d = m.rows();
  const Index r = m.cols();
  if (r == 0) return QrResult{OrthonormalBasis(d), {}};

  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);

  const double max_col_norm = m.colwise().norm().maxCoeff();
  const double tol = kRankTolerance * max_col_norm;

  std::vector<Index> deficient;
  for (Index j = 0; j < r; ++j) {
    const double rjj = qr.matrixQR()(j, j);
    if (std::abs(rjj) <= tol) {
      deficient.push_back(j);
    } else if (rjj < 0.0) {
      q.col(j) = -q.col(j);
    }
  }
  if (!deficient.empty())
    return QrResult{OrthonormalBasis(std::move(q), OrthonormalBasis::Unchecked{}),
                    std::move(deficient)};
  return QrResult{OrthonormalBasis::adopt(std::move(q)), {}};
}

OrthonormalBasis qr_orthonormalize(const Matrix& m) {
  QrResult res = qr_factor(m);
  if (!res.deficient_columns.empty())
    raise(ErrorKind::RankDeficient,
          "column " + std::to_string(res.deficient_columns.front()) +
              " is linearly dependent within tolerance");
  return std::move(res.basis);
}

Matrix project_out(const OrthonormalBasis& q, const Matrix& m) {
  if (q.ambient_dim() != m.rows())
    raise(ErrorKind::DimensionMismatch,
          "projector ambient dim " + std::to_string(q.ambient_dim()) +
              " vs matrix rows " + std::to_string(m.rows()));
  if (q.empty()) return m;
  return m - q.columns() * (q.columns().transpose() * m);
}

Vector project_out(const OrthonormalBasis& q, const Vector& v) {
  if (q.ambient_dim() != v.size())
    raise(ErrorKind::DimensionMismatch,
          "projector ambient dim " + std::to_string(q.ambient_dim()) +
              " vs vector size " + std::to_string(v.size()));
  if (q.empty()) return v;
  return v - q.columns() * (q.columns().transpose() * v);
}

SymmetricEig symmetric_eig(const Matrix& a, EigOrder order) {
  require_finite(a, "eig input");
  if (a.rows() != a.cols())
    raise(ErrorKind::NotSymmetric, "matrix is not square: " +
                                       std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()));
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * std::max(scale, 1e-300))
    raise(ErrorKind::NotSymmetric,
          "asymmetry " + std::to_string(asym) + " exceeds tolerance");

  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    raise(ErrorKind::NoConvergence, "symmetric eigensolver failed");

  const Index n = a.rows();
  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  const Vector& vals = solver.eigenvalues();
  if (order == EigOrder::ByValueDescending) {
    std::stable_sort(perm.begin(), perm.end(),
                     [&](Index i, Index j) { return vals(i) > vals(j); });
  } else {
    std::stable_sort(perm.begin(), perm.end(), [&](Index i, Index j) {
      return std::abs(vals(i)) > std::abs(vals(j));
    });
  }

  SymmetricEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = vals(perm[static_cast<size_t>(k)]);
    Vector v = solver.eigenvectors().col(perm[static_cast<size_t>(k)]);
    // Deterministic sign: the largest-magnitude coordinate is positive.
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

OrthonormalBasis top_eigenvectors(const SymmetricEig& eig, Index r) {
  if (r < 0 || r > eig.vectors.cols())
    raise(ErrorKind::DimensionMismatch,
          "requested " + std::to_string(r) + " of " +
              std::to_string(eig.vectors.cols()) + " eigenvectors");
  return OrthonormalBasis::adopt(eig.vectors.leftCols(r));
}

OrthonormalBasis qr_drop_dependent(const Matrix& m) {
  require_finite(m, "qr input");
  const Index d = m.rows();
  if (m.cols() == 0) return OrthonormalBasis(d);
  const double tol = kRankTolerance * m.colwise().norm().maxCoeff();

  Matrix q(d, std::min(d, m.cols()));
  Index rank = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    Vector r = m.col(j);
    // Two orthogonalization passes keep the accepted frame orthonormal at
    // rounding level even for nearly dependent inputs.
    for (int pass = 0; pass < 2; ++pass)
      if (rank > 0)
        r -= q.leftCols(rank) * (q.leftCols(rank).transpose() * r);
    const double n = r.norm();
    if (n <= tol) continue;
    q.col(rank++) = r / n;
    if (rank == d) break;
  }
  return OrthonormalBasis::adopt(q.leftCols(rank));
}

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  require_finite(m, "spectral_norm input");
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // Power iteration on the Gram matrix of the shorter side; the iterate
  // lives in the smaller space so tall-skinny inputs stay O(d * cols).
  const bool tall = m.rows() >= m.cols();
  const Index n = tall ? m.cols() : m.rows();

  Rng rng(0x5eed5eed5eedULL);
  Vector v = rng.normal_vector(n);
  v.normalize();

  double sigma_prev = -1.0;
  int restarts = 0;
  for (int iter = 0; iter < kPowerIterCap; ++iter) {
    const Vector w = tall ? Vector(m * v) : Vector(m.transpose() * v);
    const double sigma = w.norm();
    const Vector y = tall ? Vector(m.transpose() * w) : Vector(m * w);
    const double ny = y.norm();
    if (ny == 0.0) {
      // Start vector fell in the null space; redraw deterministically.
      if (++restarts > 3) return 0.0;
      v = rng.normal_vector(n);
      v.normalize();
      sigma_prev = -1.0;
      continue;
    }
    v = y / ny;
    if (std::abs(sigma - sigma_prev) <= kPowerIterTolerance * std::max(sigma, 1.0))
      return sigma;
    sigma_prev = sigma;
  }
  raise(ErrorKind::NoConvergence,
        "power iteration did not stabilize within the sweep cap");
}

double sin_distance(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.ambient_dim() != b.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "ambient dims differ: " + std::to_string(a.ambient_dim()) + " vs " +
              std::to_string(b.ambient_dim()));
  if (b.empty()) return 0.0;
  return spectral_norm(project_out(a, b.columns()));
}

}  // namespace fairpca::linalg
