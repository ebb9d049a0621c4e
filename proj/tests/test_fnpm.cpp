#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "fairpca/error.hpp"
#include "fairpca/fnpm.hpp"
#include "fairpca/linalg.hpp"
#include "fairpca/oracle.hpp"
#include "fairpca/rng.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/synthetic.hpp"

using namespace fairpca;
using namespace fairpca::fnpm;
using fairpca::linalg::OrthonormalBasis;
using fairpca::stream::AttributeSchema;
using fairpca::stream::LabeledSample;
using fairpca::stream::MemorySampleStream;

namespace {

LabeledSample row(std::vector<std::int32_t> a, std::vector<double> x) {
  LabeledSample s;
  s.attributes = std::move(a);
  s.features = Eigen::Map<Vector>(x.data(), static_cast<Index>(x.size()));
  return s;
}

OrthonormalBasis axis_basis(Index d, std::initializer_list<Index> axes) {
  Matrix m = Matrix::Zero(d, static_cast<Index>(axes.size()));
  Index c = 0;
  for (Index j : axes) m(j, c++) = 1.0;
  return OrthonormalBasis::adopt(std::move(m));
}

// (a=0, (1,0)) and (a=1, (0,2)) forever: S = diag(-1, 4), f = (-1, 2).
std::vector<LabeledSample> alternating_rows() {
  return {row({0}, {1.0, 0.0}), row({1}, {0.0, 2.0})};
}

// Group 0 {(1,0), (-1,0)}, group 1 {(2,1), (0,1)}: S = [[1,1],[1,1]] with
// top direction (1,1)/sqrt(2), and f = (1,1) already inside that span.
std::vector<LabeledSample> four_point_rows() {
  return {row({0}, {1.0, 0.0}), row({1}, {2.0, 1.0}), row({0}, {-1.0, 0.0}),
          row({1}, {0.0, 1.0})};
}

// Cycling these six with block 6 makes every phase-2 block second moment
// exactly diag(3, 2, 1).
std::vector<LabeledSample> diag321_rows() {
  const double r6 = std::sqrt(6.0), r3 = std::sqrt(3.0);
  return {row({0}, {3.0, 0.0, 0.0}),  row({1}, {-3.0, 0.0, 0.0}),
          row({0}, {0.0, r6, 0.0}),   row({1}, {0.0, -r6, 0.0}),
          row({0}, {0.0, 0.0, r3}),   row({1}, {0.0, 0.0, -r3})};
}

std::unique_ptr<MemorySampleStream> cycle_stream(std::vector<LabeledSample> rows,
                                                 AttributeSchema schema,
                                                 Index dim) {
  return std::make_unique<MemorySampleStream>(std::move(schema), dim,
                                              std::move(rows), /*cycle=*/true);
}

}  // namespace

TEST_CASE("config validation rejects out-of-domain fields") {
  FnpmConfig good;
  CHECK_NOTHROW(validate(good));

  auto expect_invalid = [](FnpmConfig c) {
    try {
      validate(c);
      FAIL("expected InvalidSpec");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
  };
  FnpmConfig c;
  c.target_dim = 0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.unfair_ranks.clear();
  expect_invalid(c);
  c = FnpmConfig{};
  c.unfair_ranks = {-1};
  expect_invalid(c);
  c = FnpmConfig{};
  c.block_b = 0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.block_B = 0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.iters_T = 0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.iters_Tau = 0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.g_threshold = 0.0;
  expect_invalid(c);
  c = FnpmConfig{};
  c.degenerate_threshold = -1.0;
  expect_invalid(c);
}

TEST_CASE("update_block_moments on hand-checked blocks") {
  SUBCASE("single group-1 sample against the identity frame") {
    std::vector<LabeledSample> block{row({1}, {1.0, 2.0})};
    auto moments = update_block_moments(block, axis_basis(2, {0, 1}),
                                        GroupMoments::zero(2, 2));
    CHECK(moments.count[1] == 1);
    CHECK(moments.count[0] == 0);
    CHECK(moments.block_count[1] == 1);
    CHECK((moments.mean[1] - Vector(Eigen::Vector2d(1.0, 2.0))).norm() == 0.0);
    Matrix want(2, 2);
    want << 1.0, 2.0, 2.0, 4.0;  // x x^T for x = (1, 2)
    CHECK((moments.block_product[1] - want).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(moments.block_product[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(moments.block_mean[0].cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two group-0 samples against a single column") {
    std::vector<LabeledSample> block{row({0}, {1.0, 0.0}),
                                     row({0}, {0.0, 1.0})};
    auto moments = update_block_moments(block, axis_basis(2, {0}),
                                        GroupMoments::zero(2, 1));
    CHECK(moments.count[0] == 2);
    CHECK(moments.mean[0](0) == doctest::Approx(0.5));
    CHECK(moments.mean[0](1) == doctest::Approx(0.5));
    // avg of x (x^T e1): e1 contributes e1, e2 contributes 0.
    CHECK(moments.block_product[0](0, 0) == doctest::Approx(0.5));
    CHECK(moments.block_product[0](1, 0) == 0.0);
  }
  SUBCASE("running means fold with count weights") {
    std::vector<LabeledSample> first{row({0}, {1.0, 1.0}),
                                     row({0}, {0.0, 0.0})};
    std::vector<LabeledSample> second{row({0}, {1.0, 3.0})};
    auto moments = update_block_moments(first, axis_basis(2, {0}),
                                        GroupMoments::zero(2, 1));
    moments = update_block_moments(second, axis_basis(2, {0}),
                                   std::move(moments));
    CHECK(moments.count[0] == 3);
    CHECK(moments.mean[0](0) == doctest::Approx(2.0 / 3.0));
    CHECK(moments.mean[0](1) == doctest::Approx(4.0 / 3.0));
    CHECK(moments.block_count[0] == 1);  // reflects the last block only
  }
  SUBCASE("dimension mismatch is rejected") {
    std::vector<LabeledSample> block{row({0}, {1.0, 2.0, 3.0})};
    CHECK_THROWS_AS(update_block_moments(block, axis_basis(2, {0}),
                                         GroupMoments::zero(2, 1)),
                    Error);
  }
}

TEST_CASE("block moments agree with the exact offline statistics") {
  const Index d = 5;
  Rng rng(2024);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 120; ++i) {
    LabeledSample s;
    s.attributes = {static_cast<std::int32_t>(rng.uniform01() < 0.4 ? 1 : 0)};
    s.features = rng.normal_vector(d);
    samples.push_back(std::move(s));
  }
  Matrix g(d, 2);
  rng.fill_normal(g);
  OrthonormalBasis w = linalg::qr_orthonormalize(g);

  const auto stats = oracle::offline_statistics(samples);
  const auto moments =
      update_block_moments(samples, w, GroupMoments::zero(d, 2));

  for (int a = 0; a < 2; ++a) {
    CHECK(moments.count[a] == stats.count[a]);
    CHECK((moments.mean[a] - stats.mean[a]).cwiseAbs().maxCoeff() <= 1e-12);
    const Matrix want = stats.second_moment[a] * w.columns();
    CHECK((moments.block_product[a] - want).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("assemble_unfair_subspace applies the residual inclusion rule") {
  SUBCASE("residual well clear of the span is appended") {
    Vector f(2);
    f << -1.0, 2.0;
    auto u = assemble_unfair_subspace(axis_basis(2, {1}), f, 1e-8);
    CHECK(u.basis.rank() == 2);
    CHECK(u.mean_direction_included);
    CHECK(u.second_moment_basis.rank() == 1);
    CHECK(u.residual_gap_norm == doctest::Approx(1.0));
    CHECK((u.mean_gap - f).norm() == 0.0);
    // Appended column is the normalized residual, orthogonal to W.
    CHECK(std::abs(u.basis.columns().col(1)(0)) == doctest::Approx(1.0));
  }
  SUBCASE("mean gap inside the span adds nothing") {
    Vector f(2);
    f << 0.0, 3.0;
    auto u = assemble_unfair_subspace(axis_basis(2, {1}), f, 1e-8);
    CHECK(u.basis.rank() == 1);
    CHECK_FALSE(u.mean_direction_included);
    CHECK(u.residual_gap_norm <= 1e-12);
  }
  SUBCASE("empty W keeps only the mean direction") {
    Vector f(3);
    f << 0.0, 3.0, 4.0;
    auto u = assemble_unfair_subspace(OrthonormalBasis(3), f, 1e-8);
    CHECK(u.basis.rank() == 1);
    CHECK(u.mean_direction_included);
    CHECK(u.second_moment_basis.rank() == 0);
    CHECK(u.basis.columns()(1, 0) == doctest::Approx(0.6));
    CHECK(u.basis.columns()(2, 0) == doctest::Approx(0.8));
  }
  SUBCASE("zero mean gap with empty W yields the empty subspace") {
    auto u = assemble_unfair_subspace(OrthonormalBasis(3), Vector::Zero(3),
                                      1e-8);
    CHECK(u.basis.rank() == 0);
    CHECK_FALSE(u.mean_direction_included);
  }
  SUBCASE("size mismatch is rejected") {
    CHECK_THROWS_AS(
        assemble_unfair_subspace(axis_basis(2, {0}), Vector::Zero(3), 1e-8),
        Error);
  }
}

TEST_CASE("unfair subspace estimate on the alternating two-point stream") {
  auto s = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
  FnpmConfig config;
  config.target_dim = 1;
  config.unfair_ranks = {1};
  config.block_b = 2;
  config.iters_T = 25;
  config.rng_seed = 7;

  const auto u = estimate_unfair_subspace(*s, config);
  // S = diag(-1, 4): the top |eigenvalue| direction is e2, and the mean gap
  // (-1, 2) leaves a residual along e1, so the basis fills the whole plane.
  CHECK(u.basis.rank() == 2);
  CHECK(u.mean_direction_included);
  REQUIRE(u.second_moment_basis.rank() == 1);
  CHECK(std::abs(u.second_moment_basis.columns()(1, 0)) ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK(u.residual_gap_norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(u.mean_gap(0) == doctest::Approx(-1.0));
  CHECK(u.mean_gap(1) == doctest::Approx(2.0));
}

TEST_CASE("unfair subspace estimate when f lies inside the top directions") {
  auto s = cycle_stream(four_point_rows(), AttributeSchema::binary(), 2);
  FnpmConfig config;
  config.unfair_ranks = {1};
  config.block_b = 4;
  config.iters_T = 10;

  const auto u = estimate_unfair_subspace(*s, config);
  CHECK(u.basis.rank() == 1);
  CHECK_FALSE(u.mean_direction_included);
  CHECK(u.residual_gap_norm <= 1e-9);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(u.basis.columns().col(0).dot(
            Vector(Eigen::Vector2d(inv_sqrt2, inv_sqrt2)))) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(u.mean_gap(0) == doctest::Approx(1.0));
  CHECK(u.mean_gap(1) == doctest::Approx(1.0));
}

TEST_CASE("mean-only estimate with unfair rank zero") {
  auto s = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
  FnpmConfig config;
  config.unfair_ranks = {0};
  config.block_b = 2;
  config.iters_T = 5;

  const auto u = estimate_unfair_subspace(*s, config);
  CHECK(u.basis.rank() == 1);
  CHECK(u.mean_direction_included);
  CHECK(u.second_moment_basis.rank() == 0);
  const Vector f = u.mean_gap;
  CHECK(std::abs(u.basis.columns().col(0).dot(f / f.norm())) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimator failure modes") {
  SUBCASE("missing group -> GroupStarvation") {
    std::vector<LabeledSample> rows{row({0}, {1.0, 0.0}),
                                    row({0}, {0.0, 1.0})};
    auto s = cycle_stream(rows, AttributeSchema::binary(), 2);
    FnpmConfig config;
    config.unfair_ranks = {1};
    config.block_b = 2;
    config.iters_T = 3;
    try {
      estimate_unfair_subspace(*s, config);
      FAIL("expected GroupStarvation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GroupStarvation);
    }
  }
  SUBCASE("identical group moments -> DegenerateGap") {
    std::vector<LabeledSample> rows{row({0}, {1.0, 0.0}), row({1}, {1.0, 0.0}),
                                    row({0}, {0.0, 1.0}), row({1}, {0.0, 1.0})};
    auto s = cycle_stream(rows, AttributeSchema::binary(), 2);
    FnpmConfig config;
    config.unfair_ranks = {1};
    config.block_b = 4;
    config.iters_T = 4;
    try {
      estimate_unfair_subspace(*s, config);
      FAIL("expected DegenerateGap");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateGap);
    }
  }
  SUBCASE("short stream -> InsufficientData naming the partial block") {
    std::vector<LabeledSample> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(row({i % 2}, {1.0, 2.0}));
    MemorySampleStream s(AttributeSchema::binary(), 2, rows);
    FnpmConfig config;
    config.unfair_ranks = {1};
    config.block_b = 4;
    config.iters_T = 2;
    try {
      estimate_unfair_subspace(s, config);
      FAIL("expected InsufficientData");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientData);
      const std::string msg = e.what();
      CHECK(msg.find("needs 8") != std::string::npos);
      CHECK(msg.find("after 5") != std::string::npos);
      CHECK(msg.find("partial block of 1") != std::string::npos);
    }
  }
  SUBCASE("more ranks than attributes -> InvalidSpec") {
    auto s = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
    FnpmConfig config;
    config.unfair_ranks = {1, 1};
    CHECK_THROWS_AS(estimate_unfair_subspace(*s, config), Error);
  }
  SUBCASE("unfair rank above the dimension -> DimensionBudget") {
    auto s = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
    FnpmConfig config;
    config.unfair_ranks = {3};
    try {
      estimate_unfair_subspace(*s, config);
      FAIL("expected DimensionBudget");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionBudget);
    }
  }
  SUBCASE("non-binary first attribute -> SchemaViolation") {
    std::vector<LabeledSample> rows{row({0}, {1.0}), row({2}, {2.0})};
    MemorySampleStream s(AttributeSchema{{3}}, 1, rows, true);
    FnpmConfig config;
    config.unfair_ranks = {1};
    CHECK_THROWS_AS(estimate_unfair_subspace(s, config), Error);
  }
}

TEST_CASE("deflated power phase on an exactly known second moment") {
  // Blocks of the six cycle samples give exactly diag(3, 2, 1); with e1
  // removed the best direction is e2.
  auto s = cycle_stream(diag321_rows(), AttributeSchema::binary(), 3);
  FnpmConfig config;
  config.target_dim = 1;
  config.unfair_ranks = {1};
  config.block_B = 6;
  config.iters_Tau = 45;
  config.rng_seed = 5;

  UnfairSubspace unfair = UnfairSubspace::none(3);
  unfair.basis = axis_basis(3, {0});
  unfair.second_moment_basis = unfair.basis;

  std::vector<double> err;       // distance from e2, per iteration
  std::vector<double> leakage;   // max |U^T v|, per iteration
  const OrthonormalBasis target = axis_basis(3, {1});
  const auto model = fit_fair_npm(
      *s, config, unfair, [&](int, const OrthonormalBasis& v) {
        err.push_back(linalg::sin_distance(target, v));
        leakage.push_back(
            (unfair.basis.columns().transpose() * v.columns())
                .cwiseAbs()
                .maxCoeff());
      });

  REQUIRE(model.loading.rank() == 1);
  CHECK(std::abs(model.loading.columns()(1, 0)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(model.samples_consumed == 45 * 6);
  CHECK(model.method == "fnpm");

  REQUIRE(err.size() == 45);
  // Every iterate stays deflated at rounding level, not just the last one.
  for (double l : leakage) CHECK(l <= 1e-10);
  // Noiseless blocks: the error never grows, and once the iterate is close
  // (sine and tangent nearly agree) it contracts by the eigenvalue ratio of
  // diag(0, 2, 1), which is 1/2.
  bool entered_linear_regime = false;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    CHECK(err[i + 1] <= err[i] + 1e-12);
    if (err[i] <= 0.3) {
      entered_linear_regime = true;
      CHECK(err[i + 1] <= 0.6 * err[i] + 1e-13);
    }
  }
  CHECK(entered_linear_regime);
  CHECK(err.back() <= 1e-10);
}

TEST_CASE("phase 2 with an empty unfair subspace is plain PCA") {
  auto s = cycle_stream(diag321_rows(), AttributeSchema::binary(), 3);
  FnpmConfig config;
  config.target_dim = 1;
  config.block_B = 6;
  config.iters_Tau = 60;
  config.rng_seed = 3;

  const auto model =
      fit_fair_npm(*s, config, UnfairSubspace::none(3));
  CHECK(std::abs(model.loading.columns()(0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("phase 2 budget and dimension checks") {
  auto s = cycle_stream(diag321_rows(), AttributeSchema::binary(), 3);
  FnpmConfig config;
  config.target_dim = 3;
  UnfairSubspace unfair = UnfairSubspace::none(3);
  unfair.basis = axis_basis(3, {0});
  try {
    fit_fair_npm(*s, config, unfair);  // 3 + 1 > 3
    FAIL("expected DimensionBudget");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionBudget);
  }

  UnfairSubspace wrong_dim = UnfairSubspace::none(2);
  FnpmConfig small;
  small.target_dim = 1;
  CHECK_THROWS_AS(fit_fair_npm(*s, small, wrong_dim), Error);
}

TEST_CASE("both phases back to back on one stream") {
  auto s = cycle_stream(four_point_rows(), AttributeSchema::binary(), 2);
  FnpmConfig config;
  config.target_dim = 1;
  config.unfair_ranks = {1};
  config.block_b = 4;
  config.iters_T = 10;
  config.block_B = 4;
  config.iters_Tau = 12;
  config.rng_seed = 11;

  const auto model = fit(*s, config);
  CHECK(model.samples_consumed == 10 * 4 + 12 * 4);
  CHECK(model.unfair.basis.rank() == 1);
  REQUIRE(model.loading.rank() == 1);
  // In the plane, the loading is pinned to the orthogonal complement of the
  // unfair direction (1,1)/sqrt(2).
  const Vector v = model.loading.columns().col(0);
  CHECK(std::abs(v(0) - (-v(1))) <= 1e-6);  // proportional to (1,-1)
  CHECK(std::abs(model.unfair.basis.columns().col(0).dot(v)) <= 1e-10);
}

TEST_CASE("fit is bitwise deterministic under a fixed seed") {
  stream::SyntheticSpec spec;
  spec.dim = 6;
  spec.p = 0.45;
  spec.mu1 = Vector::Zero(6);
  spec.mu1(0) = 0.8;
  spec.mu1(2) = -0.4;
  spec.alpha = 1.0;
  spec.scale = 2.0;
  spec.rotation_seed = 21;
  spec.sample_seed = 22;

  FnpmConfig config;
  config.target_dim = 2;
  config.unfair_ranks = {1};
  config.block_b = 60;
  config.iters_T = 5;
  config.block_B = 60;
  config.iters_Tau = 5;
  config.rng_seed = 77;

  auto s1 = stream::synthetic_stream(spec);
  auto s2 = stream::synthetic_stream(spec);
  const auto m1 = fit(*s1, config);
  const auto m2 = fit(*s2, config);
  CHECK((m1.loading.columns() - m2.loading.columns()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((m1.unfair.basis.columns() - m2.unfair.basis.columns())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(m1.samples_consumed == m2.samples_consumed);

  FnpmConfig reseeded = config;
  reseeded.rng_seed = 78;
  auto s3 = stream::synthetic_stream(spec);
  const auto m3 = fit(*s3, reseeded);
  CHECK((m1.loading.columns() - m3.loading.columns()).cwiseAbs().maxCoeff() >
        1e-12);
}

TEST_CASE("multi estimator with one binary attribute matches the binary one") {
  FnpmConfig config;
  config.unfair_ranks = {1};
  config.block_b = 2;
  config.iters_T = 30;
  config.rng_seed = 9;

  auto s_bin = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
  const auto u_bin = estimate_unfair_subspace(*s_bin, config);

  auto s_multi = cycle_stream(alternating_rows(), AttributeSchema::binary(), 2);
  const auto u_multi = estimate_unfair_subspace_multi(*s_multi, config);

  CHECK(u_multi.basis.rank() == u_bin.basis.rank());
  CHECK(linalg::sin_distance(u_bin.basis, u_multi.basis) <= 1e-6);
  CHECK(linalg::sin_distance(u_multi.basis, u_bin.basis) <= 1e-6);
}

TEST_CASE("multi estimator on two attributes with distinct unfair directions") {
  // Cells by (a_1, a_2): (0,0) carries +-sqrt(5) e1, (0,1) +-1 e2,
  // (1,0) +-sqrt(5) e1, (1,1) +-2 e4. The shared e1 mass cancels inside
  // attribute 1's gap (top direction e4) but not attribute 2's (top e1);
  // every cell mean is zero, so only the power iterates contribute.
  const double r5 = std::sqrt(5.0);
  std::vector<LabeledSample> rows{
      row({0, 0}, {r5, 0.0, 0.0, 0.0}),  row({0, 0}, {-r5, 0.0, 0.0, 0.0}),
      row({0, 1}, {0.0, 1.0, 0.0, 0.0}), row({0, 1}, {0.0, -1.0, 0.0, 0.0}),
      row({1, 0}, {r5, 0.0, 0.0, 0.0}),  row({1, 0}, {-r5, 0.0, 0.0, 0.0}),
      row({1, 1}, {0.0, 0.0, 0.0, 2.0}), row({1, 1}, {0.0, 0.0, 0.0, -2.0})};
  const AttributeSchema schema{{2, 2}};

  FnpmConfig config;
  config.unfair_ranks = {1, 1};
  config.block_b = 8;
  config.iters_T = 40;
  config.rng_seed = 17;

  auto s = cycle_stream(rows, schema, 4);
  const auto u = estimate_unfair_subspace_multi(*s, config);
  REQUIRE(u.basis.rank() == 2);
  const OrthonormalBasis expected = axis_basis(4, {0, 3});
  CHECK(linalg::sin_distance(expected, u.basis) <= 1e-6);
  CHECK(linalg::sin_distance(u.basis, expected) <= 1e-6);

  const std::vector<Index> m_per_attr{1, 1};
  const auto offline =
      oracle::offline_unfair_subspace_multi(rows, schema, m_per_attr);
  CHECK(offline.basis.rank() == 2);
  CHECK(linalg::sin_distance(offline.basis, u.basis) <= 1e-6);
}

TEST_CASE("multi estimator rejects bad schemas and rank lists") {
  std::vector<LabeledSample> rows{row({0}, {1.0}), row({1}, {2.0})};
  SUBCASE("rank count must match attribute count") {
    MemorySampleStream s(AttributeSchema::binary(), 1, rows, true);
    FnpmConfig config;
    config.unfair_ranks = {1, 1};
    try {
      estimate_unfair_subspace_multi(s, config);
      FAIL("expected InvalidSpec");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
  }
  SUBCASE("single-group attribute fails schema validation") {
    MemorySampleStream s(AttributeSchema{{1}}, 1, rows, true);
    FnpmConfig config;
    config.unfair_ranks = {1};
    try {
      estimate_unfair_subspace_multi(s, config);
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaViolation);
    }
  }
  SUBCASE("per-attribute rank above dimension -> DimensionBudget") {
    MemorySampleStream s(AttributeSchema::binary(), 1, rows, true);
    FnpmConfig config;
    config.unfair_ranks = {2};
    try {
      estimate_unfair_subspace_multi(s, config);
      FAIL("expected DimensionBudget");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionBudget);
    }
  }
  SUBCASE("a group that never shows up starves its cell") {
    std::vector<LabeledSample> one_sided{row({0, 0}, {1.0, 0.0}),
                                         row({1, 0}, {0.0, 1.0})};
    MemorySampleStream s(AttributeSchema{{2, 2}}, 2, one_sided, true);
    FnpmConfig config;
    config.unfair_ranks = {0, 0};
    config.block_b = 2;
    config.iters_T = 2;
    try {
      estimate_unfair_subspace_multi(s, config);
      FAIL("expected GroupStarvation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GroupStarvation);
    }
  }
}

TEST_CASE("transform projects onto the loading columns") {
  FairPcaModel model;
  model.loading = axis_basis(3, {0, 1});
  model.unfair = UnfairSubspace::none(3);

  Vector x(3);
  x << 5.0, 7.0, 9.0;
  const Vector y = transform(model, x);
  REQUIRE(y.size() == 2);
  CHECK(y(0) == 5.0);
  CHECK(y(1) == 7.0);
  CHECK(transform(model, Vector(Vector::Zero(3))).norm() == 0.0);
  CHECK(y.norm() <= x.norm());

  Matrix rows(2, 3);
  rows << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  const Matrix projected = transform(model, rows);
  REQUIRE(projected.rows() == 2);
  REQUIRE(projected.cols() == 2);
  CHECK(projected(0, 0) == 1.0);
  CHECK(projected(1, 1) == 5.0);

  CHECK_THROWS_AS(transform(model, Vector(Vector::Zero(4))), Error);
  CHECK_THROWS_AS(transform(model, Matrix(Matrix::Zero(2, 4))), Error);
}
