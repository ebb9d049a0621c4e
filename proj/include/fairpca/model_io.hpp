#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "fairpca/fnpm.hpp"
#include "fairpca/metrics.hpp"
#include "fairpca/synthetic.hpp"
#include "fairpca/types.hpp"

// Disk formats. Every writer produces byte-identical output for identical
// inputs (keys are emitted in sorted order, doubles as shortest exact
// round-trip decimals), which is what makes rerun comparisons meaningful.
namespace fairpca::model_io {

// Fitted or exact model. Layout: a flat JSON object holding dim, k, m_prime,
// the loading V and unfair basis U as row-major arrays, the raw mean-gap
// vector, its post-projection norm, whether the mean direction made it into
// U, the resolved fit config, samples consumed, and a method tag
// ("fnpm", "fnpm-multi", "offline", "vanilla").
void write_model(const std::string& path, const fnpm::FairPcaModel& model);

// Raises Io when the file cannot be read, SchemaViolation when it parses
// but does not satisfy the model layout (missing key, wrong type, array
// length mismatch, or a non-orthonormal basis).
fnpm::FairPcaModel read_model(const std::string& path);

// Spec files are JSON objects with keys dim, p, mu1 (array), alpha, scale,
// rotation_seed, sample_seed. Malformed content raises InvalidSpec; the
// result is validated before being returned.
stream::SyntheticSpec read_synthetic_spec(const std::string& path);
void write_synthetic_spec(const std::string& path,
                          const stream::SyntheticSpec& spec);

// Absent optionals serialize as null.
void write_eval_report(const std::string& path,
                       const metrics::EvalReport& report);
metrics::EvalReport read_eval_report(const std::string& path);

// JSON carries thresholds, seed, and per-point counts; the CSV is one grid
// point per row (block_b,block_B,iters_T,iters_Tau,trials,successes,
// success_rate) for direct plotting.
void write_probe_result(const std::string& json_path,
                        const std::string& csv_path,
                        const metrics::PafoProbeResult& result);

// Grid file: JSON array of objects with keys block_b, block_B, iters_T,
// iters_Tau. Raises Io / InvalidSpec.
std::vector<metrics::PafoGridPoint> read_probe_grid(const std::string& path);

// FNV-1a over the raw file bytes; used for input digests in manifests.
std::uint64_t fnv1a64_file(const std::string& path);

struct RunManifest {
  std::string command_line;
  nlohmann::json resolved_config;              // flags after precedence
  std::vector<std::pair<std::string, std::string>> input_digests;
  std::string started_at_utc;                  // informational, not compared
  double wall_seconds = 0.0;
  std::int64_t peak_rss_kb = 0;
};

// Written next to each command's primary output as <out>.manifest.json.
void write_manifest(const std::string& out_path, const RunManifest& manifest);

// Current peak resident set size of this process, in KiB.
std::int64_t peak_rss_kb();

// Helpers shared by the writers; exposed for tests and the CLI.
nlohmann::json model_to_json(const fnpm::FairPcaModel& model);
fnpm::FairPcaModel model_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const fnpm::FnpmConfig& config);

}  // namespace fairpca::model_io
