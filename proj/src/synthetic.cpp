#include "fairpca/synthetic.hpp"

#include <cmath>
#include <string>

#include "fairpca/rng.hpp"

namespace fairpca::stream {

namespace {
constexpr Index kMaxReflectors = 16;
}

Vector SyntheticSpec::eigenvalues() const {
  Vector lambda(dim);
  for (Index j = 0; j < dim; ++j)
    lambda(j) = scale * std::pow(static_cast<double>(j + 1), -alpha);
  return lambda;
}

void validate(const SyntheticSpec& spec) {
  if (spec.dim < 1)
    raise(ErrorKind::InvalidSpec, "dim must be >= 1, got " +
                                      std::to_string(spec.dim));
  if (!(spec.p > 0.0 && spec.p < 1.0))
    raise(ErrorKind::InvalidSpec,
          "p must lie strictly inside (0, 1), got " + std::to_string(spec.p));
  if (spec.mu1.size() != spec.dim)
    raise(ErrorKind::InvalidSpec,
          "mu1 has length " + std::to_string(spec.mu1.size()) + ", dim is " +
              std::to_string(spec.dim));
  if (!spec.mu1.allFinite())
    raise(ErrorKind::InvalidSpec, "mu1 has non-finite entries");
  if (!(spec.alpha >= 1.0) || !std::isfinite(spec.alpha))
    raise(ErrorKind::InvalidSpec,
          "alpha must be >= 1, got " + std::to_string(spec.alpha));
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale))
    raise(ErrorKind::InvalidSpec,
          "scale must be positive, got " + std::to_string(spec.scale));
}

HouseholderRotation::HouseholderRotation(Index dim, std::uint64_t seed) {
  const Index r = std::min(dim, kMaxReflectors);
  reflectors_.resize(dim, r);
  Rng rng(seed);
  for (Index j = 0; j < r; ++j) {
    Vector v = rng.normal_vector(dim);
    const double n = v.norm();
    // A zero draw has probability zero; fall back to a coordinate vector.
    if (n == 0.0) {
      v.setZero();
      v(j % dim) = 1.0;
    } else {
      v /= n;
    }
    reflectors_.col(j) = v;
  }
}

void HouseholderRotation::apply_in_place(Vector& x) const {
  // Product applied right to left: x <- H_0 (H_1 (... (H_{r-1} x))).
  for (Index j = reflectors_.cols() - 1; j >= 0; --j) {
    const auto v = reflectors_.col(j);
    x.noalias() -= v * (2.0 * v.dot(x));
  }
}

Vector HouseholderRotation::apply(Vector x) const {
  apply_in_place(x);
  return x;
}

Matrix HouseholderRotation::dense() const {
  const Index d = dim();
  Matrix out(d, d);
  for (Index j = 0; j < d; ++j) {
    Vector e = Vector::Zero(d);
    e(j) = 1.0;
    apply_in_place(e);
    out.col(j) = e;
  }
  return out;
}

HouseholderRotation group_rotation(const SyntheticSpec& spec, int group) {
  return HouseholderRotation(
      spec.dim, mix_seed(spec.rotation_seed, static_cast<std::uint64_t>(group)));
}

namespace {

class SyntheticStream final : public SampleStream {
 public:
  explicit SyntheticStream(const SyntheticSpec& spec)
      : schema_(AttributeSchema::binary()),
        dim_(spec.dim),
        p_(spec.p),
        mu_{spec.mu0(), spec.mu1},
        rot_{group_rotation(spec, 0), group_rotation(spec, 1)},
        sqrt_lambda_(spec.eigenvalues().cwiseSqrt()),
        rng_(spec.sample_seed) {}

  const AttributeSchema& schema() const override { return schema_; }
  Index dim() const override { return dim_; }

  std::optional<LabeledSample> next() override {
    const int a = rng_.uniform01() < p_ ? 1 : 0;
    LabeledSample sample;
    sample.attributes = {static_cast<std::int32_t>(a)};
    Vector x(dim_);
    for (Index i = 0; i < dim_; ++i) x(i) = sqrt_lambda_(i) * rng_.normal();
    rot_[a].apply_in_place(x);
    x += mu_[a];
    sample.features = std::move(x);
    return sample;
  }

 private:
  AttributeSchema schema_;
  Index dim_;
  double p_;
  Vector mu_[2];
  HouseholderRotation rot_[2];
  Vector sqrt_lambda_;
  Rng rng_;
};

}  // namespace

std::unique_ptr<SampleStream> synthetic_stream(const SyntheticSpec& spec) {
  validate(spec);
  return std::make_unique<SyntheticStream>(spec);
}

}  // namespace fairpca::stream
