#include "fairpca/oracle.hpp"

#include <cmath>
#include <string>

namespace fairpca::oracle {

using linalg::EigOrder;
using linalg::OrthonormalBasis;

OfflineStats offline_statistics(std::span<const stream::LabeledSample> samples,
                                bool center) {
  if (samples.empty())
    raise(ErrorKind::InsufficientData, "no samples to accumulate");
  const Index d = samples.front().features.size();

  Vector pooled_sum = Vector::Zero(d);
  for (const auto& sample : samples) {
    if (sample.features.size() != d)
      raise(ErrorKind::DimensionMismatch, "inconsistent sample dimensions");
    pooled_sum += sample.features;
  }
  const Vector pooled_mean = pooled_sum / static_cast<double>(samples.size());
  const Vector offset = center ? pooled_mean : Vector(Vector::Zero(d));

  OfflineStats stats;
  stats.dim = d;
  for (int a = 0; a < 2; ++a) {
    stats.mean[a] = Vector::Zero(d);
    stats.second_moment[a] = Matrix::Zero(d, d);
  }
  stats.pooled_second_moment = Matrix::Zero(d, d);

  for (const auto& sample : samples) {
    const int a = sample.attributes.at(0) == 0 ? 0 : 1;
    const Vector x = sample.features - offset;
    ++stats.count[a];
    stats.mean[a] += x;
    stats.second_moment[a].noalias() += x * x.transpose();
  }
  if (stats.count[0] == 0 || stats.count[1] == 0)
    raise(ErrorKind::GroupStarvation,
          "group " + std::to_string(stats.count[0] == 0 ? 0 : 1) +
              " has no samples");

  stats.pooled_second_moment =
      (stats.second_moment[0] + stats.second_moment[1]) /
      static_cast<double>(samples.size());
  for (int a = 0; a < 2; ++a) {
    stats.mean[a] /= static_cast<double>(stats.count[a]);
    stats.second_moment[a] /= static_cast<double>(stats.count[a]);
  }
  stats.pooled_mean = pooled_mean - offset;
  return stats;
}

fnpm::UnfairSubspace unfair_subspace_from_moments(const Vector& f,
                                                  const Matrix& s, Index m,
                                                  double g_threshold) {
  if (f.size() != s.rows())
    raise(ErrorKind::DimensionMismatch,
          "mean gap size " + std::to_string(f.size()) + " vs moment gap " +
              std::to_string(s.rows()));
  if (m < 0 || m > s.rows())
    raise(ErrorKind::DimensionBudget,
          "rank " + std::to_string(m) + " out of range for dimension " +
              std::to_string(s.rows()));
  OrthonormalBasis p(f.size());
  if (m > 0) {
    const linalg::SymmetricEig eig =
        linalg::symmetric_eig(s, EigOrder::ByMagnitudeDescending);
    p = linalg::top_eigenvectors(eig, m);
  }
  return fnpm::assemble_unfair_subspace(std::move(p), f, g_threshold);
}

fnpm::UnfairSubspace offline_unfair_subspace(const OfflineStats& stats,
                                             Index m, double g_threshold) {
  return unfair_subspace_from_moments(stats.mean_gap(), stats.moment_gap(), m,
                                      g_threshold);
}

FairPcaSolution fair_pca_given_unfair(fnpm::UnfairSubspace unfair,
                                      const Matrix& sigma, Index k) {
  const Index d = sigma.rows();
  if (sigma.cols() != d || unfair.basis.ambient_dim() != d)
    raise(ErrorKind::DimensionMismatch, "sigma must be d x d");
  if (k < 1 || k + unfair.basis.rank() > d)
    raise(ErrorKind::DimensionBudget,
          "target_dim " + std::to_string(k) + " plus unfair rank " +
              std::to_string(unfair.basis.rank()) + " exceeds dimension " +
              std::to_string(d));

  // Offline path: the deflated matrix is materialized densely on purpose.
  const Matrix pi_sigma = linalg::project_out(unfair.basis, sigma);
  const Matrix deflated =
      linalg::project_out(unfair.basis, Matrix(pi_sigma.transpose()));
  // The deflated matrix is PSD, so value order and magnitude order agree.
  const linalg::SymmetricEig eig =
      linalg::symmetric_eig(deflated, EigOrder::ByValueDescending);
  OrthonormalBasis v = linalg::top_eigenvectors(eig, k);
  const double objective =
      (v.columns().transpose() * sigma * v.columns()).trace();
  return FairPcaSolution{std::move(unfair), std::move(v), objective};
}

FairPcaSolution fair_pca_from_moments(const Vector& f, const Matrix& s,
                                      const Matrix& sigma, Index m, Index k,
                                      double g_threshold) {
  if (f.size() != sigma.rows())
    raise(ErrorKind::DimensionMismatch, "mean gap length must match sigma");
  return fair_pca_given_unfair(unfair_subspace_from_moments(f, s, m, g_threshold),
                               sigma, k);
}

FairPcaSolution offline_fair_pca(const OfflineStats& stats, Index m, Index k,
                                 double g_threshold) {
  return fair_pca_from_moments(stats.mean_gap(), stats.moment_gap(),
                               stats.pooled_second_moment, m, k, g_threshold);
}

FairPcaSolution vanilla_pca_from_moments(const Matrix& sigma, Index k) {
  const Index d = sigma.rows();
  if (k < 1 || k > d)
    raise(ErrorKind::DimensionBudget,
          "target_dim " + std::to_string(k) + " out of range for dimension " +
              std::to_string(d));
  const linalg::SymmetricEig eig =
      linalg::symmetric_eig(sigma, EigOrder::ByValueDescending);
  OrthonormalBasis v = linalg::top_eigenvectors(eig, k);
  const double objective =
      (v.columns().transpose() * sigma * v.columns()).trace();
  return FairPcaSolution{fnpm::UnfairSubspace::none(d), std::move(v),
                         objective};
}

FairPcaSolution vanilla_pca(const OfflineStats& stats, Index k) {
  return vanilla_pca_from_moments(stats.pooled_second_moment, k);
}

fnpm::UnfairSubspace offline_unfair_subspace_multi(
    std::span<const stream::LabeledSample> samples,
    const stream::AttributeSchema& schema, std::span<const Index> m_per_attr) {
  schema.validate();
  if (samples.empty())
    raise(ErrorKind::InsufficientData, "no samples to accumulate");
  const std::size_t l = static_cast<std::size_t>(schema.attribute_count());
  if (m_per_attr.size() != l)
    raise(ErrorKind::InvalidSpec,
          "need one unfair rank per attribute: got " +
              std::to_string(m_per_attr.size()) + " for " + std::to_string(l) +
              " attributes");
  const Index d = samples.front().features.size();

  // One-vs-all cell moments, exact.
  Index concat_cols = 0;
  for (std::size_t r = 0; r < l; ++r)
    concat_cols += schema.group_counts[r] * (m_per_attr[r] + 1);

  Matrix concat(d, concat_cols);
  Index w_col = 0;
  std::vector<Vector> gaps;

  for (std::size_t r = 0; r < l; ++r) {
    for (int a = 0; a < schema.group_counts[r]; ++a) {
      std::int64_t n_in = 0, n_out = 0;
      Vector sum_in = Vector::Zero(d), sum_out = Vector::Zero(d);
      Matrix mom_in = Matrix::Zero(d, d), mom_out = Matrix::Zero(d, d);
      for (const auto& sample : samples) {
        const bool in_group = sample.attributes.at(r) == a;
        if (in_group) {
          ++n_in;
          sum_in += sample.features;
          mom_in.noalias() += sample.features * sample.features.transpose();
        } else {
          ++n_out;
          sum_out += sample.features;
          mom_out.noalias() += sample.features * sample.features.transpose();
        }
      }
      if (n_in == 0 || n_out == 0)
        raise(ErrorKind::GroupStarvation,
              "attribute " + std::to_string(r + 1) + " group " +
                  std::to_string(a) +
                  (n_in == 0 ? " has no samples" : " covers all samples"));
      const Matrix gap_matrix =
          mom_in / static_cast<double>(n_in) - mom_out / static_cast<double>(n_out);
      if (m_per_attr[r] > 0) {
        const linalg::SymmetricEig eig =
            linalg::symmetric_eig(gap_matrix, EigOrder::ByMagnitudeDescending);
        concat.middleCols(w_col, m_per_attr[r]) =
            eig.vectors.leftCols(m_per_attr[r]);
        w_col += m_per_attr[r];
      }
      gaps.push_back(sum_in / static_cast<double>(n_in) -
                     sum_out / static_cast<double>(n_out));
    }
  }
  for (const auto& gap : gaps) concat.col(w_col++) = gap;

  fnpm::UnfairSubspace out = fnpm::UnfairSubspace::none(d);
  out.basis = linalg::qr_drop_dependent(concat);
  out.second_moment_basis = out.basis;
  return out;
}

SyntheticMoments synthetic_moments(const stream::SyntheticSpec& spec) {
  stream::validate(spec);
  const Vector lambda = spec.eigenvalues();

  SyntheticMoments m;
  m.mu0 = spec.mu0();
  m.mu1 = spec.mu1;
  m.f = m.mu1 - m.mu0;

  Matrix covs[2];
  for (int a = 0; a < 2; ++a) {
    const Matrix r = stream::group_rotation(spec, a).dense();
    covs[a] = r * lambda.asDiagonal() * r.transpose();
  }
  m.second0 = covs[0] + m.mu0 * m.mu0.transpose();
  m.second1 = covs[1] + m.mu1 * m.mu1.transpose();
  m.s = m.second1 - m.second0;
  m.sigma = (1.0 - spec.p) * m.second0 + spec.p * m.second1;
  return m;
}

}  // namespace fairpca::oracle
