#include "fairpca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairpca/oracle.hpp"
#include "fairpca/rng.hpp"

namespace fairpca::metrics {

using linalg::OrthonormalBasis;

ExplainedVariance explained_variance(const OrthonormalBasis& v,
                                     const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != v.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "sigma must be d x d with d = " + std::to_string(v.ambient_dim()));
  ExplainedVariance out;
  out.absolute = (sigma * v.columns()).cwiseProduct(v.columns()).sum();
  const double total = sigma.trace();
  out.percent = total > 0.0 ? 100.0 * out.absolute / total : 0.0;
  return out;
}

ExplainedVariance explained_variance(
    const OrthonormalBasis& v, std::span<const stream::LabeledSample> samples) {
  if (samples.empty())
    raise(ErrorKind::InsufficientData, "no samples to evaluate");
  double captured = 0.0;
  double total = 0.0;
  for (const auto& sample : samples) {
    if (sample.features.size() != v.ambient_dim())
      raise(ErrorKind::DimensionMismatch,
            "sample dim " + std::to_string(sample.features.size()) +
                " vs basis ambient " + std::to_string(v.ambient_dim()));
    captured += (v.columns().transpose() * sample.features).squaredNorm();
    total += sample.features.squaredNorm();
  }
  const double n = static_cast<double>(samples.size());
  ExplainedVariance out;
  out.absolute = captured / n;
  out.percent = total > 0.0 ? 100.0 * captured / total : 0.0;
  return out;
}

double fairness_spectral_norm(const OrthonormalBasis& u,
                              const OrthonormalBasis& v) {
  if (u.ambient_dim() != v.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "ambient dims differ: " + std::to_string(u.ambient_dim()) + " vs " +
              std::to_string(v.ambient_dim()));
  if (u.empty() || v.empty()) return 0.0;
  return linalg::spectral_norm(u.columns().transpose() * v.columns());
}

namespace {

double median_pairwise_distance(const Matrix& pooled, std::int64_t cap,
                                std::uint64_t seed) {
  const Index n = pooled.rows();
  std::vector<Index> pick(static_cast<std::size_t>(n));
  std::iota(pick.begin(), pick.end(), Index{0});
  if (n > cap) {
    // Seeded partial Fisher-Yates: the first `cap` entries become a uniform
    // subsample without replacement.
    Rng rng(seed);
    for (std::int64_t i = 0; i < cap; ++i) {
      const auto j = i + static_cast<std::int64_t>(
                             rng.uniform01() * static_cast<double>(n - i));
      std::swap(pick[static_cast<std::size_t>(i)],
                pick[static_cast<std::size_t>(j)]);
    }
    pick.resize(static_cast<std::size_t>(cap));
  }

  const std::size_t m = pick.size();
  if (m < 2) return 0.0;
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      dist.push_back((pooled.row(pick[i]) - pooled.row(pick[j])).norm());
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid;
}

}  // namespace

double mmd_squared(const Matrix& group0, const Matrix& group1,
                   const MmdOptions& options) {
  const Index n0 = group0.rows();
  const Index n1 = group1.rows();
  if (n0 == 0 || n1 == 0)
    raise(ErrorKind::EmptyGroup,
          "both groups need samples: " + std::to_string(n0) + " vs " +
              std::to_string(n1));
  if (group0.cols() != group1.cols())
    raise(ErrorKind::DimensionMismatch,
          "projected dims differ: " + std::to_string(group0.cols()) + " vs " +
              std::to_string(group1.cols()));
  if (options.unbiased && (n0 < 2 || n1 < 2))
    raise(ErrorKind::EmptyGroup,
          "the unbiased estimator needs at least 2 samples per group");

  const double dn0 = static_cast<double>(n0);
  const double dn1 = static_cast<double>(n1);

  if (options.kernel == MmdKernel::Linear) {
    const Vector mean0 = group0.colwise().mean();
    const Vector mean1 = group1.colwise().mean();
    if (!options.unbiased) {
      // The biased V-statistic with a linear kernel collapses to the
      // squared distance of the two means.
      return (mean0 - mean1).squaredNorm();
    }
    const double self0 =
        (dn0 * dn0 * mean0.squaredNorm() - group0.rowwise().squaredNorm().sum()) /
        (dn0 * (dn0 - 1.0));
    const double self1 =
        (dn1 * dn1 * mean1.squaredNorm() - group1.rowwise().squaredNorm().sum()) /
        (dn1 * (dn1 - 1.0));
    return self0 + self1 - 2.0 * mean0.dot(mean1);
  }

  double h = options.bandwidth;
  if (h <= 0.0) {
    Matrix pooled(n0 + n1, group0.cols());
    pooled.topRows(n0) = group0;
    pooled.bottomRows(n1) = group1;
    h = median_pairwise_distance(pooled, options.median_cap,
                                 options.median_seed);
    if (h <= 0.0) h = 1.0;
  }
  const double gamma = 1.0 / (2.0 * h * h);
  const auto kernel = [gamma](const auto& a, const auto& b) {
    return std::exp(-gamma * (a - b).squaredNorm());
  };

  double sum00 = 0.0;
  for (Index i = 0; i < n0; ++i)
    for (Index j = i + 1; j < n0; ++j)
      sum00 += kernel(group0.row(i), group0.row(j));
  double sum11 = 0.0;
  for (Index i = 0; i < n1; ++i)
    for (Index j = i + 1; j < n1; ++j)
      sum11 += kernel(group1.row(i), group1.row(j));
  double sum01 = 0.0;
  for (Index i = 0; i < n0; ++i)
    for (Index j = 0; j < n1; ++j)
      sum01 += kernel(group0.row(i), group1.row(j));

  if (options.unbiased) {
    return 2.0 * sum00 / (dn0 * (dn0 - 1.0)) +
           2.0 * sum11 / (dn1 * (dn1 - 1.0)) - 2.0 * sum01 / (dn0 * dn1);
  }
  // Diagonal kernel values are 1 for the RBF kernel.
  const double term00 = (2.0 * sum00 + dn0) / (dn0 * dn0);
  const double term11 = (2.0 * sum11 + dn1) / (dn1 * dn1);
  const double value = term00 + term11 - 2.0 * sum01 / (dn0 * dn1);
  return std::max(value, 0.0);
}

double suboptimality(const OrthonormalBasis& v, const OrthonormalBasis& v_star,
                     const Matrix& sigma) {
  if (v.rank() != v_star.rank())
    raise(ErrorKind::DimensionMismatch,
          "rank mismatch: " + std::to_string(v.rank()) + " vs " +
              std::to_string(v_star.rank()));
  return explained_variance(v_star, sigma).absolute -
         explained_variance(v, sigma).absolute;
}

double suboptimality(const OrthonormalBasis& v, const OrthonormalBasis& v_star,
                     std::span<const stream::LabeledSample> samples) {
  if (v.rank() != v_star.rank())
    raise(ErrorKind::DimensionMismatch,
          "rank mismatch: " + std::to_string(v.rank()) + " vs " +
              std::to_string(v_star.rank()));
  return explained_variance(v_star, samples).absolute -
         explained_variance(v, samples).absolute;
}

PafoProbeResult pafo_probe(const stream::SyntheticSpec& spec,
                           const fnpm::FnpmConfig& base_config,
                           std::span<const PafoGridPoint> grid,
                           double eps_objective, double eps_fairness,
                           int trials, std::uint64_t base_seed) {
  stream::validate(spec);
  if (trials < 1)
    raise(ErrorKind::InvalidSpec,
          "trials must be >= 1, got " + std::to_string(trials));

  const oracle::SyntheticMoments moments = oracle::synthetic_moments(spec);
  const oracle::FairPcaSolution exact = oracle::fair_pca_from_moments(
      moments.f, moments.s, moments.sigma, base_config.unfair_rank(),
      base_config.target_dim, base_config.g_threshold);

  PafoProbeResult result;
  result.eps_objective = eps_objective;
  result.eps_fairness = eps_fairness;
  result.base_seed = base_seed;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    fnpm::FnpmConfig config = base_config;
    config.block_b = grid[i].block_b;
    config.block_B = grid[i].block_B;
    config.iters_T = grid[i].iters_T;
    config.iters_Tau = grid[i].iters_Tau;

    PafoPointResult point;
    point.point = grid[i];
    point.trials = trials;
    for (int j = 0; j < trials; ++j) {
      stream::SyntheticSpec trial_spec = spec;
      trial_spec.sample_seed = mix_seed(spec.sample_seed, i + 1,
                                        static_cast<std::uint64_t>(j + 1));
      config.rng_seed =
          mix_seed(base_seed, i + 1, static_cast<std::uint64_t>(j + 1));
      bool success = false;
      try {
        auto source = stream::synthetic_stream(trial_spec);
        const fnpm::FairPcaModel model = fnpm::fit(*source, config);
        // Relative gap, so one threshold means the same thing at any scale.
        const double gap =
            (exact.objective -
             explained_variance(model.loading, moments.sigma).absolute) /
            std::max(std::abs(exact.objective), 1e-12);
        const double fair =
            fairness_spectral_norm(exact.unfair.basis, model.loading);
        success = gap <= eps_objective && fair <= eps_fairness;
      } catch (const Error&) {
        success = false;
      }
      if (success) ++point.successes;
    }
    point.success_rate =
        static_cast<double>(point.successes) / static_cast<double>(trials);
    result.points.push_back(point);
  }
  return result;
}

}  // namespace fairpca::metrics
