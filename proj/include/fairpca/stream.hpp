#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairpca/error.hpp"
#include "fairpca/types.hpp"

namespace fairpca::stream {

// Sensitive-attribute layout: attribute r takes values in {0, ..., g_r - 1}.
struct AttributeSchema {
  std::vector<int> group_counts;

  int attribute_count() const { return static_cast<int>(group_counts.size()); }

  // Consumers that rely on the layout call this; throws SchemaViolation.
  void validate() const;

  static AttributeSchema binary() { return AttributeSchema{{2}}; }
};

struct LabeledSample {
  std::vector<std::int32_t> attributes;
  Vector features;
};

// Single-consumer pull stream. next() hands out each sample exactly once;
// std::nullopt means exhausted (infinite sources never return it).
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual const AttributeSchema& schema() const = 0;
  virtual Index dim() const = 0;
  virtual std::optional<LabeledSample> next() = 0;
};

struct Block {
  std::vector<LabeledSample> samples;
  bool exhausted = false;
};

// Pulls up to n samples; exhausted is set when the stream ended early (or
// ends exactly at the boundary and the following pull would be empty is NOT
// detected -- exhaustion is only reported when fewer than n arrive).
Block take_block(SampleStream& source, std::int64_t n);

// CSV-backed stream. Header must be a_1,...,a_l,x_1,...,x_d for the given
// schema's l; d is inferred from the header. Constant memory: one row live
// at a time. Malformed content raises MalformedRow with a 1-based line
// number; unreadable files raise Io.
std::unique_ptr<SampleStream> open_csv_stream(const std::string& path,
                                              AttributeSchema schema);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

// Writes header + n rows pulled from source. Floats are serialized in
// shortest round-trip decimal form, so reading the file back is exact.
void write_csv(const std::string& path, SampleStream& source, std::int64_t n);
void write_csv(const std::string& path, const AttributeSchema& schema,
               Index dim, std::span<const LabeledSample> rows);

// In-memory stream over a fixed sample set; with cycle=true it repeats the
// set forever in order (used when an algorithm wants full-batch passes).
class MemorySampleStream : public SampleStream {
 public:
  MemorySampleStream(AttributeSchema schema, Index dim,
                     std::vector<LabeledSample> rows, bool cycle = false);

  const AttributeSchema& schema() const override { return schema_; }
  Index dim() const override { return dim_; }
  std::optional<LabeledSample> next() override;

 private:
  AttributeSchema schema_;
  Index dim_;
  std::vector<LabeledSample> rows_;
  bool cycle_;
  std::size_t pos_ = 0;
};

// Subtracts a fixed offset from every sample of an inner stream (second
// pass of offline centering).
class ShiftedStream : public SampleStream {
 public:
  ShiftedStream(std::unique_ptr<SampleStream> inner, Vector offset);

  const AttributeSchema& schema() const override { return inner_->schema(); }
  Index dim() const override { return inner_->dim(); }
  std::optional<LabeledSample> next() override;

 private:
  std::unique_ptr<SampleStream> inner_;
  Vector offset_;
};

}  // namespace fairpca::stream
