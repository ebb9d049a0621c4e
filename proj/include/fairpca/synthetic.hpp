#pragma once

#include <cstdint>
#include <memory>

#include "fairpca/stream.hpp"
#include "fairpca/types.hpp"

namespace fairpca::stream {

// Two-group Gaussian mixture with mixture mean pinned to zero: the caller
// supplies mu1 and the group-1 probability p; mu0 is derived so that
// p*mu1 + (1-p)*mu0 = 0. Each group's covariance shares the power-law
// spectrum lambda_j = scale * j^(-alpha) and gets its own seeded rotation.
struct SyntheticSpec {
  Index dim = 0;
  double p = 0.5;            // P(attribute = 1)
  Vector mu1;                // group-1 mean, length dim
  double alpha = 1.0;        // spectral decay exponent, >= 1
  double scale = 1.0;        // lambda_1
  std::uint64_t rotation_seed = 0;
  std::uint64_t sample_seed = 0;

  Vector mu0() const { return Vector(-(p / (1.0 - p)) * mu1); }
  Vector eigenvalues() const;
};

// Throws InvalidSpec when a field is out of domain.
void validate(const SyntheticSpec& spec);

// Orthogonal operator stored as a product of unit Householder reflections;
// applying it is O(reflectors * dim) and nothing d x d is ever formed. The
// reflection count is min(dim, 16), enough to mix every coordinate (the
// first reflector already touches all of them).
class HouseholderRotation {
 public:
  HouseholderRotation(Index dim, std::uint64_t seed);

  void apply_in_place(Vector& x) const;
  Vector apply(Vector x) const;
  Matrix dense() const;  // materializes d x d; offline use only

  Index dim() const { return reflectors_.rows(); }

 private:
  Matrix reflectors_;  // unit columns v_j; operator = H_0 H_1 ... H_{r-1}
};

HouseholderRotation group_rotation(const SyntheticSpec& spec, int group);

// Infinite stream of draws from the spec's mixture, deterministic in
// (rotation_seed, sample_seed). Attribute first, then the Gaussian vector,
// so the draw sequence is reproducible sample by sample.
std::unique_ptr<SampleStream> synthetic_stream(const SyntheticSpec& spec);

}  // namespace fairpca::stream
