#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fairpca/linalg.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/types.hpp"

// Streaming fair PCA in two phases. Phase 1 estimates the subspace that
// separates the groups: the mean gap f = mu_1 - mu_0 together with the
// dominant directions (by eigenvalue magnitude) of the second-moment gap
// S = E[xx^T | a=1] - E[xx^T | a=0], via a block power method that only
// ever touches d x m products. Phase 2 maximizes explained variance over
// loadings orthogonal to that subspace with a deflated block power method.
namespace fairpca::fnpm {

struct FnpmConfig {
  Index target_dim = 1;                  // k, number of loadings
  std::vector<Index> unfair_ranks{1};    // m (one entry), or m_r per attribute
  std::int64_t block_b = 1000;           // phase-1 block size
  std::int64_t block_B = 1000;           // phase-2 block size
  int iters_T = 10;                      // phase-1 iterations
  int iters_Tau = 10;                    // phase-2 iterations
  double g_threshold = 1e-8;             // relative mean-residual cutoff
  double degenerate_threshold = 1e-12;   // relative gap-collapse cutoff
  std::uint64_t rng_seed = 0;

  Index unfair_rank() const { return unfair_ranks.at(0); }
};

// Throws InvalidSpec when a field is out of domain.
void validate(const FnpmConfig& config);

// Running and per-block first/second-moment statistics for the two groups.
// block_product[a] is the normalized block average of x (x^T W), the d x m
// image of the group second moment through the current iterate; nothing
// d x d is ever formed.
struct GroupMoments {
  std::array<std::int64_t, 2> count{0, 0};
  std::array<Vector, 2> mean;
  std::array<std::int64_t, 2> block_count{0, 0};
  std::array<Vector, 2> block_mean;
  std::array<Matrix, 2> block_product;

  static GroupMoments zero(Index dim, Index m);
};

// Folds one block into the statistics: per-group block averages (zero when
// a group is absent from the block, so a missing group contributes nothing)
// and the count-weighted running means.
GroupMoments update_block_moments(std::span<const stream::LabeledSample> block,
                                  const linalg::OrthonormalBasis& w,
                                  GroupMoments state);

// Basis of the directions a fair loading must avoid. For the binary
// construction: basis = [W | g/||g||] where W spans the estimated top
// directions of S and g is the part of the mean gap outside W (appended
// only when ||g|| clears g_threshold * max(||f||, 1)). The multi-attribute
// estimator fills basis with its reduced concatenation and leaves the
// provenance fields at their defaults.
struct UnfairSubspace {
  linalg::OrthonormalBasis basis;
  linalg::OrthonormalBasis second_moment_basis;
  Vector mean_gap;
  double residual_gap_norm = 0.0;
  bool mean_direction_included = false;

  static UnfairSubspace none(Index dim);  // empty: no directions to avoid
};

// Shared assembly of [W | residual(f)]; used by both the streaming and the
// exact offline paths so the inclusion rule cannot drift between them.
UnfairSubspace assemble_unfair_subspace(linalg::OrthonormalBasis w, Vector f,
                                        double g_threshold);

struct FairPcaModel {
  linalg::OrthonormalBasis loading;  // V, d x k, orthogonal to unfair.basis
  UnfairSubspace unfair;
  FnpmConfig config;
  std::int64_t samples_consumed = 0;
  std::string method = "fnpm";
};

// Phase 1. Consumes exactly iters_T * block_b samples; a final partial
// block is dropped (counted in the error message) since the update law is
// defined over full blocks. Errors: InsufficientData, GroupStarvation,
// DegenerateGap (the gap matrix stayed below the degeneracy cutoff for at
// least half the iterations).
UnfairSubspace estimate_unfair_subspace(stream::SampleStream& source,
                                        const FnpmConfig& config);

using IterationObserver =
    std::function<void(int iteration, const linalg::OrthonormalBasis& v)>;

// Phase 2. Consumes exactly iters_Tau * block_B samples, attributes
// ignored. The iterate is deflated on both sides of the block product, so
// ||unfair.basis^T V||_max stays at rounding level by construction. A rank
// deficient QR re-randomizes the dead columns from the seeded RNG (up to 3
// retries) before giving up with RankCollapse.
FairPcaModel fit_fair_npm(stream::SampleStream& source,
                          const FnpmConfig& config,
                          const UnfairSubspace& unfair,
                          const IterationObserver& observer = {});

// Both phases back to back on one stream (phase 2 reads the samples after
// phase 1's, so the two estimates come from disjoint data).
FairPcaModel fit(stream::SampleStream& source, const FnpmConfig& config);

// One-vs-all extension: per attribute r and group value a, a separate
// power iterate on the in-group-vs-rest second-moment gap plus the
// corresponding mean gap; the final basis is a QR of the concatenation
// that drops columns already spanned (dropped, not re-randomized: a
// dependent column here is genuine redundancy, e.g. the two one-vs-all
// cells of a binary attribute carry the same subspace with opposite sign).
UnfairSubspace estimate_unfair_subspace_multi(stream::SampleStream& source,
                                              const FnpmConfig& config);

FairPcaModel fit_multi(stream::SampleStream& source, const FnpmConfig& config);

Vector transform(const FairPcaModel& model, const Vector& x);
Matrix transform(const FairPcaModel& model, const Matrix& rows);

}  // namespace fairpca::fnpm
