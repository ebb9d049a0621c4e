#include "fairpca/fnpm.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "fairpca/rng.hpp"

namespace fairpca::fnpm {

using linalg::OrthonormalBasis;

namespace {

// Distinct salts keep the two phases' draws independent under one seed.
constexpr std::uint64_t kPhase1Salt = 1;
constexpr std::uint64_t kPhase2Salt = 2;

OrthonormalBasis qr_with_restart(Matrix m, Rng& rng,
                                 const OrthonormalBasis* deflate,
                                 ErrorKind exhausted_kind) {
  for (int attempt = 0;; ++attempt) {
    linalg::QrResult res = linalg::qr_factor(m);
    if (res.deficient_columns.empty()) return std::move(res.basis);
    if (attempt == 3)
      raise(exhausted_kind,
            "iterate stayed rank deficient after 3 column restarts");
    for (Index j : res.deficient_columns) {
      Vector fresh = rng.normal_vector(m.rows());
      if (deflate && !deflate->empty())
        fresh = linalg::project_out(*deflate, fresh);
      m.col(j) = fresh;
    }
  }
}

OrthonormalBasis random_orthonormal(Index d, Index r, Rng& rng) {
  Matrix g(d, r);
  rng.fill_normal(g);
  return qr_with_restart(std::move(g), rng, nullptr, ErrorKind::RankCollapse);
}

// Raw per-block sums; normalization happens when the block is folded.
struct BlockSums {
  std::array<std::int64_t, 2> n{0, 0};
  std::array<Vector, 2> sum_x;
  std::array<Matrix, 2> sum_product;
  Vector wx;  // scratch, size m

  BlockSums(Index d, Index m) {
    for (int a = 0; a < 2; ++a) {
      sum_x[a] = Vector::Zero(d);
      sum_product[a] = Matrix::Zero(d, m);
    }
    wx = Vector::Zero(m);
  }

  void reset() {
    n = {0, 0};
    for (int a = 0; a < 2; ++a) {
      sum_x[a].setZero();
      sum_product[a].setZero();
    }
  }

  void add(int a, const Vector& x, const OrthonormalBasis& w) {
    ++n[a];
    sum_x[a] += x;
    if (w.rank() > 0) {
      wx.noalias() = w.columns().transpose() * x;
      sum_product[a].noalias() += x * wx.transpose();
    }
  }
};

// Normalizes the block (absent group -> zeros) and folds the running means
// with count weights old/(old+new) and new/(old+new).
void fold_block(const BlockSums& sums, GroupMoments& state) {
  for (int a = 0; a < 2; ++a) {
    state.block_count[a] = sums.n[a];
    if (sums.n[a] > 0) {
      const double inv = 1.0 / static_cast<double>(sums.n[a]);
      state.block_mean[a] = sums.sum_x[a] * inv;
      state.block_product[a] = sums.sum_product[a] * inv;
    } else {
      state.block_mean[a].setZero();
      state.block_product[a].setZero();
    }
    const std::int64_t total = state.count[a] + sums.n[a];
    if (sums.n[a] > 0) {
      const double w_old =
          static_cast<double>(state.count[a]) / static_cast<double>(total);
      const double w_new =
          static_cast<double>(sums.n[a]) / static_cast<double>(total);
      state.mean[a] = w_old * state.mean[a] + w_new * state.block_mean[a];
    }
    state.count[a] = total;
  }
}

[[noreturn]] void insufficient(const char* phase, std::int64_t needed,
                               std::int64_t delivered, std::int64_t partial) {
  raise(ErrorKind::InsufficientData,
        std::string(phase) + " needs " + std::to_string(needed) +
            " samples, stream ended after " + std::to_string(delivered) +
            " (partial block of " + std::to_string(partial) + " dropped)");
}

}  // namespace

void validate(const FnpmConfig& config) {
  if (config.target_dim < 1)
    raise(ErrorKind::InvalidSpec, "target_dim must be >= 1, got " +
                                      std::to_string(config.target_dim));
  if (config.unfair_ranks.empty())
    raise(ErrorKind::InvalidSpec, "unfair_ranks must not be empty");
  for (Index m : config.unfair_ranks)
    if (m < 0)
      raise(ErrorKind::InvalidSpec,
            "unfair rank must be >= 0, got " + std::to_string(m));
  if (config.block_b < 1)
    raise(ErrorKind::InvalidSpec,
          "block_b must be >= 1, got " + std::to_string(config.block_b));
  if (config.block_B < 1)
    raise(ErrorKind::InvalidSpec,
          "block_B must be >= 1, got " + std::to_string(config.block_B));
  if (config.iters_T < 1)
    raise(ErrorKind::InvalidSpec,
          "iters_T must be >= 1, got " + std::to_string(config.iters_T));
  if (config.iters_Tau < 1)
    raise(ErrorKind::InvalidSpec,
          "iters_Tau must be >= 1, got " + std::to_string(config.iters_Tau));
  if (!(config.g_threshold > 0.0) || !std::isfinite(config.g_threshold))
    raise(ErrorKind::InvalidSpec, "g_threshold must be positive");
  if (!(config.degenerate_threshold > 0.0) ||
      !std::isfinite(config.degenerate_threshold))
    raise(ErrorKind::InvalidSpec, "degenerate_threshold must be positive");
}

GroupMoments GroupMoments::zero(Index dim, Index m) {
  GroupMoments g;
  for (int a = 0; a < 2; ++a) {
    g.mean[a] = Vector::Zero(dim);
    g.block_mean[a] = Vector::Zero(dim);
    g.block_product[a] = Matrix::Zero(dim, m);
  }
  return g;
}

GroupMoments update_block_moments(std::span<const stream::LabeledSample> block,
                                  const OrthonormalBasis& w,
                                  GroupMoments state) {
  const Index d = w.ambient_dim();
  BlockSums sums(d, w.rank());
  for (const auto& sample : block) {
    if (sample.features.size() != d)
      raise(ErrorKind::DimensionMismatch,
            "sample dim " + std::to_string(sample.features.size()) +
                " vs basis ambient " + std::to_string(d));
    const int a = sample.attributes.at(0) == 0 ? 0 : 1;
    sums.add(a, sample.features, w);
  }
  fold_block(sums, state);
  return state;
}

UnfairSubspace UnfairSubspace::none(Index dim) {
  UnfairSubspace u{OrthonormalBasis(dim), OrthonormalBasis(dim),
                   Vector::Zero(dim), 0.0, false};
  return u;
}

UnfairSubspace assemble_unfair_subspace(OrthonormalBasis w, Vector f,
                                        double g_threshold) {
  const Index d = w.ambient_dim();
  if (f.size() != d)
    raise(ErrorKind::DimensionMismatch,
          "mean gap size " + std::to_string(f.size()) + " vs ambient " +
              std::to_string(d));

  const Vector g = linalg::project_out(w, f);
  const double g_norm = g.norm();
  bool include = g_norm > g_threshold * std::max(f.norm(), 1.0);

  Matrix columns(d, w.rank() + (include ? 1 : 0));
  columns.leftCols(w.rank()) = w.columns();
  if (include) {
    // Second projection pass keeps the appended column orthogonal to W at
    // rounding level even when f lies close to span(W).
    Vector g2 = linalg::project_out(w, g);
    const double n2 = g2.norm();
    if (n2 == 0.0) {
      include = false;
      columns.conservativeResize(d, w.rank());
    } else {
      columns.col(w.rank()) = g2 / n2;
    }
  }

  UnfairSubspace out{OrthonormalBasis::adopt(std::move(columns)), std::move(w),
                     std::move(f), g_norm, include};
  return out;
}

UnfairSubspace estimate_unfair_subspace(stream::SampleStream& source,
                                        const FnpmConfig& config) {
  validate(config);
  if (config.unfair_ranks.size() != 1)
    raise(ErrorKind::InvalidSpec,
          "binary estimator takes a single unfair rank; got " +
              std::to_string(config.unfair_ranks.size()));
  source.schema().validate();
  if (source.schema().group_counts[0] != 2)
    raise(ErrorKind::SchemaViolation,
          "binary estimator requires attribute 1 to have 2 groups, got " +
              std::to_string(source.schema().group_counts[0]));

  const Index d = source.dim();
  const Index m = config.unfair_rank();
  if (m > d)
    raise(ErrorKind::DimensionBudget, "unfair rank " + std::to_string(m) +
                                          " exceeds dimension " +
                                          std::to_string(d));

  Rng rng(mix_seed(config.rng_seed, kPhase1Salt));
  OrthonormalBasis w =
      m > 0 ? random_orthonormal(d, m, rng) : OrthonormalBasis(d);

  GroupMoments moments = GroupMoments::zero(d, m);
  BlockSums sums(d, m);
  const std::int64_t needed =
      static_cast<std::int64_t>(config.iters_T) * config.block_b;
  std::int64_t degenerate_blocks = 0;

  for (int t = 0; t < config.iters_T; ++t) {
    sums.reset();
    for (std::int64_t i = 0; i < config.block_b; ++i) {
      auto sample = source.next();
      if (!sample)
        insufficient("phase 1", needed,
                     static_cast<std::int64_t>(t) * config.block_b + i, i);
      const int a = sample->attributes.at(0) == 0 ? 0 : 1;
      sums.add(a, sample->features, w);
    }
    fold_block(sums, moments);

    if (m > 0) {
      Matrix gap = moments.block_product[1] - moments.block_product[0];
      const double scale = std::max(moments.block_product[0].norm(),
                                    moments.block_product[1].norm());
      if (gap.norm() <= config.degenerate_threshold * scale)
        ++degenerate_blocks;
      w = qr_with_restart(std::move(gap), rng, nullptr,
                          ErrorKind::DegenerateGap);
    }
  }

  if (moments.count[0] == 0 || moments.count[1] == 0)
    raise(ErrorKind::GroupStarvation,
          "group " + std::to_string(moments.count[0] == 0 ? 0 : 1) +
              " never appeared in " + std::to_string(needed) + " samples");
  if (m > 0 && degenerate_blocks >= (config.iters_T + 1) / 2)
    raise(ErrorKind::DegenerateGap,
          "second-moment gap stayed below threshold for " +
              std::to_string(degenerate_blocks) + " of " +
              std::to_string(config.iters_T) + " iterations");

  Vector f = moments.mean[1] - moments.mean[0];
  return assemble_unfair_subspace(std::move(w), std::move(f),
                                  config.g_threshold);
}

FairPcaModel fit_fair_npm(stream::SampleStream& source,
                          const FnpmConfig& config,
                          const UnfairSubspace& unfair,
                          const IterationObserver& observer) {
  validate(config);
  const Index d = source.dim();
  const Index k = config.target_dim;
  if (unfair.basis.ambient_dim() != d)
    raise(ErrorKind::DimensionMismatch,
          "unfair subspace ambient " + std::to_string(unfair.basis.ambient_dim()) +
              " vs stream dim " + std::to_string(d));
  if (k + unfair.basis.rank() > d)
    raise(ErrorKind::DimensionBudget,
          "target_dim " + std::to_string(k) + " plus unfair rank " +
              std::to_string(unfair.basis.rank()) + " exceeds dimension " +
              std::to_string(d));

  const OrthonormalBasis& u = unfair.basis;
  Rng rng(mix_seed(config.rng_seed, kPhase2Salt));
  Matrix v = random_orthonormal(d, k, rng).columns();

  const std::int64_t needed =
      static_cast<std::int64_t>(config.iters_Tau) * config.block_B;
  Matrix c(d, k);
  Vector vx(k);
  OrthonormalBasis v_basis(d);

  for (int tau = 0; tau < config.iters_Tau; ++tau) {
    v = linalg::project_out(u, v);
    c.setZero();
    for (std::int64_t i = 0; i < config.block_B; ++i) {
      auto sample = source.next();
      if (!sample)
        insufficient("phase 2", needed,
                     static_cast<std::int64_t>(tau) * config.block_B + i, i);
      const Vector& x = sample->features;
      vx.noalias() = v.transpose() * x;
      c.noalias() += x * vx.transpose();
    }
    c /= static_cast<double>(config.block_B);
    v_basis = qr_with_restart(linalg::project_out(u, c), rng, &u,
                              ErrorKind::RankCollapse);
    v = v_basis.columns();
    if (observer) observer(tau + 1, v_basis);
  }

  FairPcaModel model{std::move(v_basis), unfair, config, needed, "fnpm"};
  return model;
}

FairPcaModel fit(stream::SampleStream& source, const FnpmConfig& config) {
  UnfairSubspace unfair = estimate_unfair_subspace(source, config);
  FairPcaModel model = fit_fair_npm(source, config, unfair);
  model.samples_consumed +=
      static_cast<std::int64_t>(config.iters_T) * config.block_b;
  return model;
}

namespace {

// One one-vs-all cell of the extended estimator: attribute r, group value a.
struct Cell {
  int attr;
  int value;
  Index m;
  OrthonormalBasis w;
  std::int64_t total_in = 0, total_out = 0;
  Vector mean_in, mean_out;
  std::int64_t n_in = 0, n_out = 0;  // current block
  Vector sum_in, sum_out;
  Matrix prod_in, prod_out;
  std::int64_t degenerate_blocks = 0;
  Vector wx;

  Cell(int r, int a, Index m_r, Index d, Rng& rng)
      : attr(r),
        value(a),
        m(m_r),
        w(m_r > 0 ? random_orthonormal(d, m_r, rng) : OrthonormalBasis(d)),
        mean_in(Vector::Zero(d)),
        mean_out(Vector::Zero(d)),
        sum_in(Vector::Zero(d)),
        sum_out(Vector::Zero(d)),
        prod_in(Matrix::Zero(d, m_r)),
        prod_out(Matrix::Zero(d, m_r)),
        wx(Vector::Zero(m_r)) {}

  void reset_block() {
    n_in = n_out = 0;
    sum_in.setZero();
    sum_out.setZero();
    prod_in.setZero();
    prod_out.setZero();
  }

  void add(const Vector& x, bool in_group) {
    auto& n = in_group ? n_in : n_out;
    auto& sum = in_group ? sum_in : sum_out;
    auto& prod = in_group ? prod_in : prod_out;
    ++n;
    sum += x;
    if (m > 0) {
      wx.noalias() = w.columns().transpose() * x;
      prod.noalias() += x * wx.transpose();
    }
  }

  static void fold_mean(Vector& mean, std::int64_t& total, const Vector& sum,
                        std::int64_t n) {
    if (n > 0) {
      const std::int64_t new_total = total + n;
      const double w_old =
          static_cast<double>(total) / static_cast<double>(new_total);
      mean = w_old * mean + sum / static_cast<double>(new_total);
      total = new_total;
    }
  }

  void fold_block(Rng& rng, double degenerate_threshold) {
    fold_mean(mean_in, total_in, sum_in, n_in);
    fold_mean(mean_out, total_out, sum_out, n_out);
    if (m == 0) return;
    const Matrix avg_in =
        n_in > 0 ? Matrix(prod_in / static_cast<double>(n_in))
                 : Matrix(Matrix::Zero(prod_in.rows(), prod_in.cols()));
    const Matrix avg_out =
        n_out > 0 ? Matrix(prod_out / static_cast<double>(n_out))
                  : Matrix(Matrix::Zero(prod_out.rows(), prod_out.cols()));
    Matrix gap = avg_in - avg_out;
    const double scale = std::max(avg_in.norm(), avg_out.norm());
    if (gap.norm() <= degenerate_threshold * scale) ++degenerate_blocks;
    w = qr_with_restart(std::move(gap), rng, nullptr, ErrorKind::DegenerateGap);
  }
};

}  // namespace

UnfairSubspace estimate_unfair_subspace_multi(stream::SampleStream& source,
                                              const FnpmConfig& config) {
  validate(config);
  const stream::AttributeSchema& schema = source.schema();
  schema.validate();
  const std::size_t l = static_cast<std::size_t>(schema.attribute_count());
  if (config.unfair_ranks.size() != l)
    raise(ErrorKind::InvalidSpec,
          "need one unfair rank per attribute: got " +
              std::to_string(config.unfair_ranks.size()) + " for " +
              std::to_string(l) + " attributes");

  const Index d = source.dim();
  Index concat_cols = 0;
  for (std::size_t r = 0; r < l; ++r) {
    if (config.unfair_ranks[r] > d)
      raise(ErrorKind::DimensionBudget,
            "unfair rank " + std::to_string(config.unfair_ranks[r]) +
                " for attribute " + std::to_string(r + 1) +
                " exceeds dimension " + std::to_string(d));
    concat_cols += schema.group_counts[r] * (config.unfair_ranks[r] + 1);
  }

  Rng rng(mix_seed(config.rng_seed, kPhase1Salt));
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < l; ++r)
    for (int a = 0; a < schema.group_counts[r]; ++a)
      cells.emplace_back(static_cast<int>(r), a, config.unfair_ranks[r], d,
                         rng);

  const std::int64_t needed =
      static_cast<std::int64_t>(config.iters_T) * config.block_b;
  for (int t = 0; t < config.iters_T; ++t) {
    for (auto& cell : cells) cell.reset_block();
    for (std::int64_t i = 0; i < config.block_b; ++i) {
      auto sample = source.next();
      if (!sample)
        insufficient("phase 1", needed,
                     static_cast<std::int64_t>(t) * config.block_b + i, i);
      for (auto& cell : cells) {
        const bool in_group =
            sample->attributes.at(static_cast<std::size_t>(cell.attr)) ==
            cell.value;
        cell.add(sample->features, in_group);
      }
    }
    for (auto& cell : cells) cell.fold_block(rng, config.degenerate_threshold);
  }

  for (const auto& cell : cells) {
    if (cell.total_in == 0 || cell.total_out == 0)
      raise(ErrorKind::GroupStarvation,
            "attribute " + std::to_string(cell.attr + 1) + " group " +
                std::to_string(cell.value) +
                (cell.total_in == 0 ? " never appeared"
                                    : " was the only group seen"));
    if (cell.m > 0 &&
        cell.degenerate_blocks >= (config.iters_T + 1) / 2)
      raise(ErrorKind::DegenerateGap,
            "attribute " + std::to_string(cell.attr + 1) + " group " +
                std::to_string(cell.value) +
                ": gap stayed below threshold for " +
                std::to_string(cell.degenerate_blocks) + " of " +
                std::to_string(config.iters_T) + " iterations");
  }

  Matrix concat(d, concat_cols);
  Index col = 0;
  for (const auto& cell : cells) {
    concat.middleCols(col, cell.m) = cell.w.columns();
    col += cell.m;
  }
  for (const auto& cell : cells) {
    concat.col(col++) = cell.mean_in - cell.mean_out;
  }

  UnfairSubspace out = UnfairSubspace::none(d);
  out.basis = linalg::qr_drop_dependent(concat);
  out.second_moment_basis = out.basis;
  return out;
}

FairPcaModel fit_multi(stream::SampleStream& source, const FnpmConfig& config) {
  UnfairSubspace unfair = estimate_unfair_subspace_multi(source, config);
  FairPcaModel model = fit_fair_npm(source, config, unfair);
  model.samples_consumed +=
      static_cast<std::int64_t>(config.iters_T) * config.block_b;
  return model;
}

Vector transform(const FairPcaModel& model, const Vector& x) {
  if (x.size() != model.loading.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "input dim " + std::to_string(x.size()) + " vs model dim " +
              std::to_string(model.loading.ambient_dim()));
  return model.loading.columns().transpose() * x;
}

Matrix transform(const FairPcaModel& model, const Matrix& rows) {
  if (rows.cols() != model.loading.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "input dim " + std::to_string(rows.cols()) + " vs model dim " +
              std::to_string(model.loading.ambient_dim()));
  return rows * model.loading.columns();
}

}  // namespace fairpca::fnpm
