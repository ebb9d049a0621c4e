#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairpca/fnpm.hpp"
#include "fairpca/linalg.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/synthetic.hpp"
#include "fairpca/types.hpp"

namespace fairpca::metrics {

struct ExplainedVariance {
  double absolute = 0.0;  // tr(V^T Sigma V)
  double percent = 0.0;   // 100 * absolute / tr(Sigma)
};

ExplainedVariance explained_variance(const linalg::OrthonormalBasis& v,
                                     const Matrix& sigma);
// Dataset overload: Sigma-hat is the uncentered second moment, accumulated
// through per-sample projections so nothing d x d is formed.
ExplainedVariance explained_variance(
    const linalg::OrthonormalBasis& v,
    std::span<const stream::LabeledSample> samples);

// ||U^T V||_2: zero iff every loading direction is orthogonal to the
// subspace U; equals the cosine of the smallest principal angle.
double fairness_spectral_norm(const linalg::OrthonormalBasis& u,
                              const linalg::OrthonormalBasis& v);

enum class MmdKernel { Linear, Rbf };

struct MmdOptions {
  MmdKernel kernel = MmdKernel::Rbf;
  // 0 means: set the RBF width by the median pairwise distance over the
  // pooled rows (seeded subsample when the pool exceeds median_cap).
  double bandwidth = 0.0;
  bool unbiased = false;
  std::int64_t median_cap = 2000;
  std::uint64_t median_seed = 0x6d6d64ULL;
};

// Squared maximum mean discrepancy between two row sets (rows are already
// projected samples). The default biased V-statistic is clamped at zero;
// the unbiased U-statistic may be negative. Raises EmptyGroup.
double mmd_squared(const Matrix& group0, const Matrix& group1,
                   const MmdOptions& options = {});

// tr(V*^T Sigma V*) - tr(V^T Sigma V); nonnegative up to rounding whenever
// v_star is the exact optimum for the same constraint set.
double suboptimality(const linalg::OrthonormalBasis& v,
                     const linalg::OrthonormalBasis& v_star,
                     const Matrix& sigma);
double suboptimality(const linalg::OrthonormalBasis& v,
                     const linalg::OrthonormalBasis& v_star,
                     std::span<const stream::LabeledSample> samples);

struct EvalReport {
  std::optional<double> explained_variance;
  std::optional<double> explained_variance_pct;
  std::optional<double> fairness_norm;
  std::optional<double> mmd_squared;
  std::optional<double> suboptimality;
  std::optional<double> sin_to_oracle;
};

// One grid point of the sample/iteration budget sweep.
struct PafoGridPoint {
  std::int64_t block_b = 1;
  std::int64_t block_B = 1;
  int iters_T = 1;
  int iters_Tau = 1;
};

struct PafoPointResult {
  PafoGridPoint point;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
};

struct PafoProbeResult {
  std::vector<PafoPointResult> points;
  double eps_objective = 0.0;
  double eps_fairness = 0.0;
  std::uint64_t base_seed = 0;
};

// Empirical check of the "probably approximately fair and optimal" property
// on a synthetic spec whose exact optimum is computable in closed form from
// its population moments: for each budget grid point, run `trials` fits on
// fresh seeded sample draws and count a success when the fitted loading's
// explained variance is within a relative eps_objective of the exact
// objective and its projection onto the exact unfair subspace stays below
// eps_fairness. A trial that fails with a
// fit error counts as a failure. Seeds are derived per (point, trial) by
// counter, so the result is deterministic regardless of execution order.
PafoProbeResult pafo_probe(const stream::SyntheticSpec& spec,
                           const fnpm::FnpmConfig& base_config,
                           std::span<const PafoGridPoint> grid,
                           double eps_objective, double eps_fairness,
                           int trials, std::uint64_t base_seed);

}  // namespace fairpca::metrics
