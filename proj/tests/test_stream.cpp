#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fairpca/error.hpp"
#include "fairpca/linalg.hpp"
#include "fairpca/oracle.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/synthetic.hpp"

using namespace fairpca;
using namespace fairpca::stream;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("stream_test_" + name) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

bool kind_is(const Error& e, ErrorKind k) { return e.kind() == k; }

LabeledSample row(std::vector<std::int32_t> a, std::vector<double> x) {
  LabeledSample s;
  s.attributes = std::move(a);
  s.features = Eigen::Map<Vector>(x.data(), static_cast<Index>(x.size()));
  return s;
}

}  // namespace

TEST_CASE("attribute schema validation") {
  CHECK_THROWS_AS(AttributeSchema{}.validate(), Error);
  AttributeSchema one_group{{1}};
  CHECK_THROWS_AS(one_group.validate(), Error);
  try {
    AttributeSchema{{2, 1}}.validate();
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(kind_is(e, ErrorKind::SchemaViolation));
    CHECK(std::string(e.what()).find("attribute 2") != std::string::npos);
  }
  CHECK_NOTHROW(AttributeSchema::binary().validate());
  CHECK_NOTHROW(AttributeSchema{{2, 3, 4}}.validate());
}

TEST_CASE("csv stream rejects unreadable and headerless files") {
  try {
    open_csv_stream("stream_test_does_not_exist.csv", AttributeSchema::binary());
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(kind_is(e, ErrorKind::Io));
  }

  TempFile empty("empty.csv", "");
  try {
    open_csv_stream(empty.path, AttributeSchema::binary());
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(kind_is(e, ErrorKind::MalformedRow));
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("csv stream validates header names and width") {
  TempFile bad_attr("bad_attr_header.csv", "b_1,x_1\n1,0.5\n");
  CHECK_THROWS_AS(open_csv_stream(bad_attr.path, AttributeSchema::binary()),
                  Error);

  TempFile too_narrow("narrow_header.csv", "a_1\n");
  try {
    open_csv_stream(too_narrow.path, AttributeSchema::binary());
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(kind_is(e, ErrorKind::MalformedRow));
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  TempFile bad_feature("bad_feature_header.csv", "a_1,x_1,y_2\n");
  CHECK_THROWS_AS(open_csv_stream(bad_feature.path, AttributeSchema::binary()),
                  Error);

  // Multi-attribute header: a_1,a_2 then features.
  TempFile multi("multi_header.csv", "a_1,a_2,x_1,x_2\n0,2,1.0,2.0\n");
  auto s = open_csv_stream(multi.path, AttributeSchema{{2, 3}});
  CHECK(s->dim() == 2);
  auto sample = s->next();
  REQUIRE(sample.has_value());
  CHECK(sample->attributes == std::vector<std::int32_t>{0, 2});
  CHECK(sample->features(1) == 2.0);
}

TEST_CASE("csv row errors carry 1-based line numbers") {
  SUBCASE("column count") {
    TempFile f("colcount.csv", "a_1,x_1,x_2\n0,1.0,2.0\n1,3.0\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    CHECK(s->next().has_value());
    try {
      s->next();
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(kind_is(e, ErrorKind::MalformedRow));
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("2 columns") != std::string::npos);
    }
  }
  SUBCASE("non-integer attribute") {
    TempFile f("badint.csv", "a_1,x_1\nzero,1.0\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    try {
      s->next();
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(kind_is(e, ErrorKind::MalformedRow));
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
      CHECK(std::string(e.what()).find("attribute 1") != std::string::npos);
    }
  }
  SUBCASE("attribute outside its declared range") {
    TempFile f("range.csv", "a_1,x_1\n0,1.0\n2,1.0\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    CHECK(s->next().has_value());
    try {
      s->next();
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(kind_is(e, ErrorKind::MalformedRow));
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("outside [0, 2)") != std::string::npos);
    }
  }
  SUBCASE("negative attribute") {
    TempFile f("negative.csv", "a_1,x_1\n-1,1.0\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    CHECK_THROWS_AS(s->next(), Error);
  }
  SUBCASE("non-finite feature") {
    TempFile f("nonfinite.csv", "a_1,x_1\n0,nan\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    try {
      s->next();
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(kind_is(e, ErrorKind::MalformedRow));
      CHECK(std::string(e.what()).find("feature 1") != std::string::npos);
    }
  }
  SUBCASE("unparseable feature") {
    TempFile f("badfloat.csv", "a_1,x_1\n0,1.0\n0,\n");
    auto s = open_csv_stream(f.path, AttributeSchema::binary());
    CHECK(s->next().has_value());
    CHECK_THROWS_AS(s->next(), Error);
  }
}

TEST_CASE("csv stream skips blank lines and tolerates CRLF") {
  TempFile f("crlf.csv", "a_1,x_1,x_2\r\n\r\n0,1.5,-2\r\n\n1,0.25,3\r\n");
  auto s = open_csv_stream(f.path, AttributeSchema::binary());
  auto first = s->next();
  REQUIRE(first.has_value());
  CHECK(first->attributes[0] == 0);
  CHECK(first->features(0) == 1.5);
  CHECK(first->features(1) == -2.0);
  auto second = s->next();
  REQUIRE(second.has_value());
  CHECK(second->attributes[0] == 1);
  CHECK(second->features(1) == 3.0);
  CHECK_FALSE(s->next().has_value());
  CHECK_FALSE(s->next().has_value());  // stays exhausted
}

TEST_CASE("csv write then read round-trips doubles exactly") {
  std::vector<LabeledSample> rows;
  rows.push_back(row({0}, {0.1, 1.0 / 3.0, -0.0}));
  rows.push_back(row({1}, {1e-300, 6.02214076e23, -7.25}));
  rows.push_back(row({0}, {5e-324, 1.7976931348623157e308, 0.0}));

  const std::string path = "stream_test_roundtrip.csv";
  write_csv(path, AttributeSchema::binary(), 3, rows);
  auto s = open_csv_stream(path, AttributeSchema::binary());
  for (const auto& expected : rows) {
    auto got = s->next();
    REQUIRE(got.has_value());
    CHECK(got->attributes == expected.attributes);
    REQUIRE(got->features.size() == expected.features.size());
    for (Index j = 0; j < expected.features.size(); ++j) {
      // Bitwise comparison: shortest round-trip formatting must be lossless.
      CHECK(std::memcmp(&got->features(j), &expected.features(j),
                        sizeof(double)) == 0);
    }
  }
  CHECK_FALSE(s->next().has_value());
  std::remove(path.c_str());
}

TEST_CASE("format_double emits shortest exact decimal") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(-2.0) == "-2");
}

TEST_CASE("take_block pulls at most n and flags early exhaustion") {
  std::vector<LabeledSample> rows;
  for (int i = 0; i < 5; ++i)
    rows.push_back(row({i % 2}, {static_cast<double>(i)}));
  MemorySampleStream s(AttributeSchema::binary(), 1, rows);

  Block b1 = take_block(s, 2);
  CHECK(b1.samples.size() == 2);
  CHECK_FALSE(b1.exhausted);
  CHECK(b1.samples[1].features(0) == 1.0);

  Block b2 = take_block(s, 2);
  CHECK(b2.samples.size() == 2);
  CHECK_FALSE(b2.exhausted);

  Block b3 = take_block(s, 2);
  CHECK(b3.samples.size() == 1);
  CHECK(b3.exhausted);
  CHECK(b3.samples[0].features(0) == 4.0);

  Block b4 = take_block(s, 2);
  CHECK(b4.samples.empty());
  CHECK(b4.exhausted);

  Block b0 = take_block(s, 0);
  CHECK(b0.samples.empty());
  CHECK_FALSE(b0.exhausted);
}

TEST_CASE("memory stream cycles in order when asked") {
  std::vector<LabeledSample> rows;
  for (int i = 0; i < 3; ++i)
    rows.push_back(row({0}, {static_cast<double>(i)}));
  MemorySampleStream s(AttributeSchema::binary(), 1, rows, /*cycle=*/true);
  for (int pull = 0; pull < 10; ++pull) {
    auto sample = s.next();
    REQUIRE(sample.has_value());
    CHECK(sample->features(0) == static_cast<double>(pull % 3));
  }

  MemorySampleStream empty(AttributeSchema::binary(), 1, {}, /*cycle=*/true);
  CHECK_FALSE(empty.next().has_value());
}

TEST_CASE("shifted stream subtracts the offset from every sample") {
  std::vector<LabeledSample> rows;
  rows.push_back(row({0}, {1.0, 2.0}));
  rows.push_back(row({1}, {-1.0, 0.5}));
  Vector offset(2);
  offset << 1.0, -1.0;
  ShiftedStream s(
      std::make_unique<MemorySampleStream>(AttributeSchema::binary(), 2, rows),
      offset);
  CHECK(s.dim() == 2);
  auto a = s.next();
  REQUIRE(a.has_value());
  CHECK(a->features(0) == 0.0);
  CHECK(a->features(1) == 3.0);
  auto b = s.next();
  REQUIRE(b.has_value());
  CHECK(b->features(0) == -2.0);
  CHECK(b->features(1) == 1.5);
  CHECK_FALSE(s.next().has_value());

  Vector wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(
      ShiftedStream(std::make_unique<MemorySampleStream>(
                        AttributeSchema::binary(), 2,
                        std::vector<LabeledSample>{}),
                    wrong),
      Error);
}

TEST_CASE("write_csv from a stream demands n samples") {
  std::vector<LabeledSample> rows;
  rows.push_back(row({0}, {1.0}));
  MemorySampleStream s(AttributeSchema::binary(), 1, rows);
  try {
    write_csv("stream_test_short.csv", s, 5);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(kind_is(e, ErrorKind::InsufficientData));
    CHECK(std::string(e.what()).find("after 1 of 5") != std::string::npos);
  }
  std::remove("stream_test_short.csv");
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.dim = 3;
  spec.p = 0.4;
  spec.mu1 = Vector::Zero(3);
  spec.alpha = 1.0;
  spec.scale = 2.0;
  CHECK_NOTHROW(validate(spec));

  auto expect_invalid = [](SyntheticSpec s) {
    try {
      validate(s);
      FAIL("expected InvalidSpec");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
  };
  SyntheticSpec bad = spec;
  bad.dim = 0;
  expect_invalid(bad);
  bad = spec;
  bad.p = 0.0;
  expect_invalid(bad);
  bad = spec;
  bad.p = 1.0;
  expect_invalid(bad);
  bad = spec;
  bad.mu1 = Vector::Zero(2);
  expect_invalid(bad);
  bad = spec;
  bad.alpha = 0.5;
  expect_invalid(bad);
  bad = spec;
  bad.scale = 0.0;
  expect_invalid(bad);
}

TEST_CASE("synthetic spec derived quantities") {
  SyntheticSpec spec;
  spec.dim = 3;
  spec.p = 0.25;
  spec.mu1 = Vector::Zero(3);
  spec.mu1(0) = 3.0;
  spec.alpha = 1.0;
  spec.scale = 2.0;

  // Mixture mean is pinned to zero: p*mu1 + (1-p)*mu0 = 0.
  const Vector mix = spec.p * spec.mu1 + (1.0 - spec.p) * spec.mu0();
  CHECK(mix.norm() <= 1e-15);
  CHECK(spec.mu0()(0) == doctest::Approx(-1.0));

  const Vector lambda = spec.eigenvalues();
  CHECK(lambda(0) == doctest::Approx(2.0));
  CHECK(lambda(1) == doctest::Approx(1.0));
  CHECK(lambda(2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("householder rotation is orthogonal and seed-stable") {
  HouseholderRotation rot(7, 42);
  Matrix dense = rot.dense();
  CHECK((dense.transpose() * dense - Matrix::Identity(7, 7))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  Vector x = Vector::LinSpaced(7, 1.0, 7.0);
  Vector via_dense = dense * x;
  Vector via_apply = rot.apply(x);
  CHECK((via_dense - via_apply).cwiseAbs().maxCoeff() <= 1e-12);
  // Isometry.
  CHECK(via_apply.norm() == doctest::Approx(x.norm()).epsilon(1e-12));

  HouseholderRotation again(7, 42);
  CHECK((again.apply(x) - via_apply).cwiseAbs().maxCoeff() == 0.0);
  HouseholderRotation other(7, 43);
  CHECK((other.apply(x) - via_apply).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("synthetic stream is deterministic in its seeds") {
  SyntheticSpec spec;
  spec.dim = 5;
  spec.p = 0.35;
  spec.mu1 = Vector::LinSpaced(5, 0.1, 0.5);
  spec.alpha = 1.2;
  spec.scale = 1.5;
  spec.rotation_seed = 7;
  spec.sample_seed = 99;

  auto s1 = synthetic_stream(spec);
  auto s2 = synthetic_stream(spec);
  CHECK(s1->schema().group_counts == std::vector<int>{2});
  for (int i = 0; i < 50; ++i) {
    auto a = s1->next();
    auto b = s2->next();
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->attributes == b->attributes);
    CHECK((a->features - b->features).cwiseAbs().maxCoeff() == 0.0);
  }

  SyntheticSpec reseeded = spec;
  reseeded.sample_seed = 100;
  auto s3 = synthetic_stream(reseeded);
  bool any_differ = false;
  auto s4 = synthetic_stream(spec);
  for (int i = 0; i < 20 && !any_differ; ++i) {
    auto a = s4->next();
    auto b = s3->next();
    if (a->attributes != b->attributes ||
        (a->features - b->features).cwiseAbs().maxCoeff() > 0.0)
      any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("synthetic stream matches its analytic moments") {
  SyntheticSpec spec;
  spec.dim = 6;
  spec.p = 0.3;
  spec.mu1 = Vector::Zero(6);
  spec.mu1(0) = 1.0;
  spec.mu1(3) = -0.5;
  spec.alpha = 1.0;
  spec.scale = 2.0;
  spec.rotation_seed = 11;
  spec.sample_seed = 12;

  const auto moments = oracle::synthetic_moments(spec);

  const std::int64_t n = 60000;
  auto s = synthetic_stream(spec);
  std::int64_t ones = 0;
  Vector mean = Vector::Zero(6);
  Matrix second = Matrix::Zero(6, 6);  // d=6: dense is fine in a test
  for (std::int64_t i = 0; i < n; ++i) {
    auto sample = s->next();
    REQUIRE(sample.has_value());
    ones += sample->attributes[0];
    mean += sample->features;
    second.noalias() += sample->features * sample->features.transpose();
  }
  mean /= static_cast<double>(n);
  second /= static_cast<double>(n);

  // Attribute frequency within 4 sigma of p.
  const double freq = static_cast<double>(ones) / static_cast<double>(n);
  const double sigma_freq = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  CHECK(std::abs(freq - 0.3) <= 4.0 * sigma_freq);

  // Pooled mean is zero by construction.
  CHECK(mean.cwiseAbs().maxCoeff() <= 0.05);

  // Empirical mixture second moment tracks the analytic one.
  CHECK((second - moments.sigma).cwiseAbs().maxCoeff() <=
        0.05 * moments.sigma.cwiseAbs().maxCoeff());

  const double top_emp =
      linalg::symmetric_eig(second, linalg::EigOrder::ByValueDescending)
          .values(0);
  const double top_ana =
      linalg::symmetric_eig(moments.sigma, linalg::EigOrder::ByValueDescending)
          .values(0);
  CHECK(std::abs(top_emp - top_ana) <= 0.05 * top_ana);
}
