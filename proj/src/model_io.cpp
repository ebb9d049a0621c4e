#include "fairpca/model_io.hpp"

#include <sys/resource.h>

#include <fstream>
#include <sstream>
#include <utility>

#include "fairpca/version.hpp"

namespace fairpca::model_io {

namespace {

using nlohmann::json;

json load_json(const std::string& path, ErrorKind parse_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(parse_kind, path + ": " + e.what());
  }
  return j;
}

void store_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::Io, "cannot open " + path + " for writing");
  out << text;
  if (!out) raise(ErrorKind::Io, "short write to " + path);
}

void store_json(const std::string& path, const json& j) {
  store_text(path, j.dump(2) + "\n");
}

json row_major(const Matrix& m) {
  json arr = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// Typed field access that reports the offending key instead of a bare
// nlohmann type error.
template <typename T>
T field(const json& j, const char* key, ErrorKind kind) {
  if (!j.contains(key))
    raise(kind, std::string("missing key \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    raise(kind, std::string("key \"") + key + "\": " + e.what());
  }
}

Matrix matrix_field(const json& j, const char* key, Index rows, Index cols,
                    ErrorKind kind) {
  const auto flat = field<std::vector<double>>(j, key, kind);
  if (std::cmp_not_equal(flat.size(), rows * cols))
    raise(kind, std::string("key \"") + key + "\": expected " +
                    std::to_string(rows * cols) + " entries, got " +
                    std::to_string(flat.size()));
  Matrix m(rows, cols);
  std::size_t at = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = flat[at++];
  return m;
}

fnpm::FnpmConfig config_from_json(const json& j, ErrorKind kind) {
  fnpm::FnpmConfig config;
  config.target_dim = field<Index>(j, "target_dim", kind);
  const auto ranks = field<std::vector<Index>>(j, "unfair_ranks", kind);
  config.unfair_ranks.assign(ranks.begin(), ranks.end());
  config.block_b = field<std::int64_t>(j, "block_b", kind);
  config.block_B = field<std::int64_t>(j, "block_B", kind);
  config.iters_T = field<int>(j, "iters_T", kind);
  config.iters_Tau = field<int>(j, "iters_Tau", kind);
  config.g_threshold = field<double>(j, "g_threshold", kind);
  config.degenerate_threshold = field<double>(j, "degenerate_threshold", kind);
  config.rng_seed = field<std::uint64_t>(j, "rng_seed", kind);
  return config;
}

}  // namespace

json config_to_json(const fnpm::FnpmConfig& config) {
  json ranks = json::array();
  for (Index r : config.unfair_ranks) ranks.push_back(r);
  return json{{"target_dim", config.target_dim},
              {"unfair_ranks", ranks},
              {"block_b", config.block_b},
              {"block_B", config.block_B},
              {"iters_T", config.iters_T},
              {"iters_Tau", config.iters_Tau},
              {"g_threshold", config.g_threshold},
              {"degenerate_threshold", config.degenerate_threshold},
              {"rng_seed", config.rng_seed}};
}

json model_to_json(const fnpm::FairPcaModel& model) {
  const Index d = model.loading.ambient_dim();
  return json{{"dim", d},
              {"k", model.loading.rank()},
              {"m_prime", model.unfair.basis.rank()},
              {"V", row_major(model.loading.columns())},
              {"U", row_major(model.unfair.basis.columns())},
              {"f_hat", vector_json(model.unfair.mean_gap)},
              {"residual_gap_norm", model.unfair.residual_gap_norm},
              {"mean_direction_included", model.unfair.mean_direction_included},
              {"config", config_to_json(model.config)},
              {"samples_consumed", model.samples_consumed},
              {"method", model.method}};
}

fnpm::FairPcaModel model_from_json(const json& j) {
  constexpr auto kind = ErrorKind::SchemaViolation;
  const auto dim = field<Index>(j, "dim", kind);
  const auto k = field<Index>(j, "k", kind);
  const auto m_prime = field<Index>(j, "m_prime", kind);
  if (dim < 1 || k < 0 || m_prime < 0 || k > dim || m_prime > dim)
    raise(kind, "inconsistent dim/k/m_prime: " + std::to_string(dim) + "/" +
                    std::to_string(k) + "/" + std::to_string(m_prime));

  fnpm::FairPcaModel model;
  try {
    model.loading = linalg::OrthonormalBasis::adopt(
        matrix_field(j, "V", dim, k, kind));
    model.unfair.basis = linalg::OrthonormalBasis::adopt(
        matrix_field(j, "U", dim, m_prime, kind));
  } catch (const Error& e) {
    raise(kind, std::string("stored basis is not orthonormal: ") + e.what());
  }
  const auto f = field<std::vector<double>>(j, "f_hat", kind);
  if (std::cmp_not_equal(f.size(), dim))
    raise(kind, "f_hat length " + std::to_string(f.size()) + " != dim " +
                    std::to_string(dim));
  model.unfair.mean_gap = Eigen::Map<const Vector>(f.data(), dim);
  model.unfair.residual_gap_norm = field<double>(j, "residual_gap_norm", kind);
  model.unfair.mean_direction_included =
      field<bool>(j, "mean_direction_included", kind);
  // U stores [W | g] when the mean direction was appended; peel it back off
  // so the round-tripped second-moment basis matches what was estimated.
  if (model.unfair.mean_direction_included && m_prime < 1)
    raise(kind, "mean_direction_included with an empty unfair basis");
  const Index w_cols =
      model.unfair.mean_direction_included ? m_prime - 1 : m_prime;
  model.unfair.second_moment_basis = linalg::OrthonormalBasis::adopt(
      model.unfair.basis.columns().leftCols(w_cols));
  if (!j.contains("config")) raise(kind, "missing key \"config\"");
  model.config = config_from_json(j.at("config"), kind);
  model.samples_consumed = field<std::int64_t>(j, "samples_consumed", kind);
  model.method = field<std::string>(j, "method", kind);
  return model;
}

void write_model(const std::string& path, const fnpm::FairPcaModel& model) {
  store_json(path, model_to_json(model));
}

fnpm::FairPcaModel read_model(const std::string& path) {
  return model_from_json(load_json(path, ErrorKind::SchemaViolation));
}

stream::SyntheticSpec read_synthetic_spec(const std::string& path) {
  constexpr auto kind = ErrorKind::InvalidSpec;
  const json j = load_json(path, kind);
  stream::SyntheticSpec spec;
  spec.dim = field<Index>(j, "dim", kind);
  spec.p = field<double>(j, "p", kind);
  const auto mu1 = field<std::vector<double>>(j, "mu1", kind);
  spec.mu1 = Eigen::Map<const Vector>(mu1.data(),
                                      static_cast<Index>(mu1.size()));
  spec.alpha = field<double>(j, "alpha", kind);
  spec.scale = field<double>(j, "scale", kind);
  spec.rotation_seed = field<std::uint64_t>(j, "rotation_seed", kind);
  spec.sample_seed = field<std::uint64_t>(j, "sample_seed", kind);
  stream::validate(spec);
  return spec;
}

void write_synthetic_spec(const std::string& path,
                          const stream::SyntheticSpec& spec) {
  store_json(path, json{{"dim", spec.dim},
                        {"p", spec.p},
                        {"mu1", vector_json(spec.mu1)},
                        {"alpha", spec.alpha},
                        {"scale", spec.scale},
                        {"rotation_seed", spec.rotation_seed},
                        {"sample_seed", spec.sample_seed}});
}

namespace {

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_field(const json& j, const char* key) {
  if (!j.contains(key))
    raise(ErrorKind::SchemaViolation,
          std::string("missing key \"") + key + "\"");
  const json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number())
    raise(ErrorKind::SchemaViolation,
          std::string("key \"") + key + "\" must be a number or null");
  return v.get<double>();
}

}  // namespace

void write_eval_report(const std::string& path,
                       const metrics::EvalReport& report) {
  store_json(path,
             json{{"explained_variance", optional_json(report.explained_variance)},
                  {"explained_variance_pct",
                   optional_json(report.explained_variance_pct)},
                  {"fairness_norm", optional_json(report.fairness_norm)},
                  {"mmd_squared", optional_json(report.mmd_squared)},
                  {"suboptimality", optional_json(report.suboptimality)},
                  {"sin_to_oracle", optional_json(report.sin_to_oracle)}});
}

metrics::EvalReport read_eval_report(const std::string& path) {
  const json j = load_json(path, ErrorKind::SchemaViolation);
  metrics::EvalReport report;
  report.explained_variance = optional_field(j, "explained_variance");
  report.explained_variance_pct = optional_field(j, "explained_variance_pct");
  report.fairness_norm = optional_field(j, "fairness_norm");
  report.mmd_squared = optional_field(j, "mmd_squared");
  report.suboptimality = optional_field(j, "suboptimality");
  report.sin_to_oracle = optional_field(j, "sin_to_oracle");
  return report;
}

void write_probe_result(const std::string& json_path,
                        const std::string& csv_path,
                        const metrics::PafoProbeResult& result) {
  json points = json::array();
  std::ostringstream csv;
  csv << "block_b,block_B,iters_T,iters_Tau,trials,successes,success_rate\n";
  for (const auto& p : result.points) {
    points.push_back(json{{"block_b", p.point.block_b},
                          {"block_B", p.point.block_B},
                          {"iters_T", p.point.iters_T},
                          {"iters_Tau", p.point.iters_Tau},
                          {"trials", p.trials},
                          {"successes", p.successes},
                          {"success_rate", p.success_rate}});
    csv << p.point.block_b << ',' << p.point.block_B << ',' << p.point.iters_T
        << ',' << p.point.iters_Tau << ',' << p.trials << ',' << p.successes
        << ',' << stream::format_double(p.success_rate) << '\n';
  }
  store_json(json_path, json{{"eps_objective", result.eps_objective},
                             {"eps_fairness", result.eps_fairness},
                             {"base_seed", result.base_seed},
                             {"points", points}});
  store_text(csv_path, csv.str());
}

std::vector<metrics::PafoGridPoint> read_probe_grid(const std::string& path) {
  constexpr auto kind = ErrorKind::InvalidSpec;
  const json j = load_json(path, kind);
  if (!j.is_array() || j.empty())
    raise(kind, path + ": grid file must be a non-empty JSON array");
  std::vector<metrics::PafoGridPoint> grid;
  grid.reserve(j.size());
  for (const auto& entry : j) {
    metrics::PafoGridPoint point;
    point.block_b = field<std::int64_t>(entry, "block_b", kind);
    point.block_B = field<std::int64_t>(entry, "block_B", kind);
    point.iters_T = field<int>(entry, "iters_T", kind);
    point.iters_Tau = field<int>(entry, "iters_Tau", kind);
    grid.push_back(point);
  }
  return grid;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

void write_manifest(const std::string& out_path, const RunManifest& manifest) {
  json digests = json::object();
  for (const auto& [name, digest] : manifest.input_digests)
    digests[name] = digest;
  store_json(out_path + ".manifest.json",
             json{{"command", manifest.command_line},
                  {"config", manifest.resolved_config},
                  {"inputs", digests},
                  {"started_at_utc", manifest.started_at_utc},
                  {"wall_seconds", manifest.wall_seconds},
                  {"peak_rss_kb", manifest.peak_rss_kb},
                  {"version", kVersion}});
}

std::int64_t peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::int64_t>(usage.ru_maxrss);
}

}  // namespace fairpca::model_io
