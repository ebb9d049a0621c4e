#include "fairpca/stream.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <system_error>

namespace fairpca::stream {

namespace {

// Splits on ',' into string_views over the line buffer; no allocation per
// token beyond the vector itself.
void split_csv_line(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_int32(std::string_view token, std::int32_t& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && !token.empty();
}

bool parse_double(std::string_view token, double& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && !token.empty();
}

class CsvSampleStream final : public SampleStream {
 public:
  CsvSampleStream(const std::string& path, AttributeSchema schema)
      : schema_(std::move(schema)), path_(path), in_(path) {
    schema_.validate();
    if (!in_) raise(ErrorKind::Io, "cannot open " + path);

    std::string header;
    if (!std::getline(in_, header))
      raise(ErrorKind::MalformedRow, path + " line 1: missing header");
    ++line_;
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::vector<std::string_view> tokens;
    split_csv_line(header, tokens);
    const std::size_t l = static_cast<std::size_t>(schema_.attribute_count());
    if (tokens.size() < l + 1)
      raise(ErrorKind::MalformedRow,
            path + " line 1: header has " + std::to_string(tokens.size()) +
                " columns, need at least " + std::to_string(l + 1));
    for (std::size_t r = 0; r < l; ++r) {
      const std::string want = "a_" + std::to_string(r + 1);
      if (tokens[r] != want)
        raise(ErrorKind::MalformedRow,
              path + " line 1: expected header column '" + want + "', got '" +
                  std::string(tokens[r]) + "'");
    }
    dim_ = static_cast<Index>(tokens.size() - l);
    for (std::size_t j = 0; j < static_cast<std::size_t>(dim_); ++j) {
      const std::string want = "x_" + std::to_string(j + 1);
      if (tokens[l + j] != want)
        raise(ErrorKind::MalformedRow,
              path + " line 1: expected header column '" + want + "', got '" +
                  std::string(tokens[l + j]) + "'");
    }
  }

  const AttributeSchema& schema() const override { return schema_; }
  Index dim() const override { return dim_; }

  std::optional<LabeledSample> next() override {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return parse_row(line);
    }
    if (in_.bad()) raise(ErrorKind::Io, "read failure on " + path_);
    return std::nullopt;
  }

 private:
  LabeledSample parse_row(std::string_view line) {
    split_csv_line(line, tokens_);
    const std::size_t l = static_cast<std::size_t>(schema_.attribute_count());
    const std::size_t want = l + static_cast<std::size_t>(dim_);
    if (tokens_.size() != want)
      fail_row("has " + std::to_string(tokens_.size()) + " columns, expected " +
               std::to_string(want));

    LabeledSample sample;
    sample.attributes.resize(l);
    for (std::size_t r = 0; r < l; ++r) {
      std::int32_t a = 0;
      if (!parse_int32(tokens_[r], a))
        fail_row("attribute " + std::to_string(r + 1) + " is not an integer: '" +
                 std::string(tokens_[r]) + "'");
      if (a < 0 || a >= schema_.group_counts[r])
        fail_row("attribute " + std::to_string(r + 1) + " value " +
                 std::to_string(a) + " outside [0, " +
                 std::to_string(schema_.group_counts[r]) + ")");
      sample.attributes[r] = a;
    }
    sample.features.resize(dim_);
    for (Index j = 0; j < dim_; ++j) {
      double x = 0.0;
      if (!parse_double(tokens_[l + static_cast<std::size_t>(j)], x) ||
          !std::isfinite(x))
        fail_row("feature " + std::to_string(j + 1) + " is not a finite number: '" +
                 std::string(tokens_[l + static_cast<std::size_t>(j)]) + "'");
      sample.features(j) = x;
    }
    return sample;
  }

  [[noreturn]] void fail_row(const std::string& why) {
    raise(ErrorKind::MalformedRow,
          path_ + " line " + std::to_string(line_) + ": " + why);
  }

  AttributeSchema schema_;
  std::string path_;
  std::ifstream in_;
  Index dim_ = 0;
  std::int64_t line_ = 0;
  std::vector<std::string_view> tokens_;
};

void write_header(std::ofstream& out, const AttributeSchema& schema, Index dim) {
  for (int r = 0; r < schema.attribute_count(); ++r) {
    if (r) out << ',';
    out << "a_" << (r + 1);
  }
  for (Index j = 0; j < dim; ++j) out << ",x_" << (j + 1);
  out << '\n';
}

void write_row(std::ofstream& out, const LabeledSample& sample) {
  for (std::size_t r = 0; r < sample.attributes.size(); ++r) {
    if (r) out << ',';
    out << sample.attributes[r];
  }
  for (Index j = 0; j < sample.features.size(); ++j)
    out << ',' << format_double(sample.features(j));
  out << '\n';
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void AttributeSchema::validate() const {
  if (group_counts.empty())
    raise(ErrorKind::SchemaViolation, "schema declares no attributes");
  for (std::size_t r = 0; r < group_counts.size(); ++r)
    if (group_counts[r] < 2)
      raise(ErrorKind::SchemaViolation,
            "attribute " + std::to_string(r + 1) + " has " +
                std::to_string(group_counts[r]) + " groups, need >= 2");
}

Block take_block(SampleStream& source, std::int64_t n) {
  Block block;
  block.samples.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
  for (std::int64_t i = 0; i < n; ++i) {
    auto sample = source.next();
    if (!sample) {
      block.exhausted = true;
      return block;
    }
    block.samples.push_back(std::move(*sample));
  }
  return block;
}

std::unique_ptr<SampleStream> open_csv_stream(const std::string& path,
                                              AttributeSchema schema) {
  return std::make_unique<CsvSampleStream>(path, std::move(schema));
}

void write_csv(const std::string& path, SampleStream& source, std::int64_t n) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot open " + path + " for writing");
  write_header(out, source.schema(), source.dim());
  for (std::int64_t i = 0; i < n; ++i) {
    auto sample = source.next();
    if (!sample)
      raise(ErrorKind::InsufficientData,
            "stream ended after " + std::to_string(i) + " of " +
                std::to_string(n) + " samples");
    write_row(out, *sample);
  }
  out.flush();
  if (!out) raise(ErrorKind::Io, "write failure on " + path);
}

void write_csv(const std::string& path, const AttributeSchema& schema,
               Index dim, std::span<const LabeledSample> rows) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot open " + path + " for writing");
  write_header(out, schema, dim);
  for (const auto& row : rows) write_row(out, row);
  out.flush();
  if (!out) raise(ErrorKind::Io, "write failure on " + path);
}

MemorySampleStream::MemorySampleStream(AttributeSchema schema, Index dim,
                                       std::vector<LabeledSample> rows,
                                       bool cycle)
    : schema_(std::move(schema)),
      dim_(dim),
      rows_(std::move(rows)),
      cycle_(cycle) {}

std::optional<LabeledSample> MemorySampleStream::next() {
  if (pos_ >= rows_.size()) {
    if (!cycle_ || rows_.empty()) return std::nullopt;
    pos_ = 0;
  }
  return rows_[pos_++];
}

ShiftedStream::ShiftedStream(std::unique_ptr<SampleStream> inner, Vector offset)
    : inner_(std::move(inner)), offset_(std::move(offset)) {
  if (inner_->dim() != offset_.size())
    raise(ErrorKind::DimensionMismatch,
          "offset size " + std::to_string(offset_.size()) +
              " vs stream dim " + std::to_string(inner_->dim()));
}

std::optional<LabeledSample> ShiftedStream::next() {
  auto sample = inner_->next();
  if (!sample) return std::nullopt;
  sample->features -= offset_;
  return sample;
}

}  // namespace fairpca::stream
