// Command-line front end: synthesize data, fit streaming fair PCA, solve the
// exact offline problem, evaluate models, compare models, and probe success
// rates over a budget grid. Every file-writing command also writes
// <out>.manifest.json describing the run.

#include <ctime>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairpca/fnpm.hpp"
#include "fairpca/linalg.hpp"
#include "fairpca/metrics.hpp"
#include "fairpca/model_io.hpp"
#include "fairpca/oracle.hpp"
#include "fairpca/stream.hpp"
#include "fairpca/synthetic.hpp"
#include "fairpca/version.hpp"

namespace {

using fairpca::Error;
using fairpca::ErrorKind;
using fairpca::Index;
using fairpca::Matrix;
using fairpca::Vector;
using fairpca::raise;
using nlohmann::json;
namespace fnpm = fairpca::fnpm;
namespace linalg = fairpca::linalg;
namespace metrics = fairpca::metrics;
namespace model_io = fairpca::model_io;
namespace oracle = fairpca::oracle;
namespace stream = fairpca::stream;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::SchemaViolation:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::DimensionBudget:
      return 2;  // configuration / flag errors
    case ErrorKind::Io:
    case ErrorKind::MalformedRow:
    case ErrorKind::InsufficientData:
    case ErrorKind::GroupStarvation:
    case ErrorKind::EmptyGroup:
      return 3;  // data errors
    case ErrorKind::DegenerateGap:
    case ErrorKind::RankCollapse:
    case ErrorKind::RankDeficient:
    case ErrorKind::NoConvergence:
    case ErrorKind::NotSymmetric:
    case ErrorKind::NotFinite:
      return 4;  // algorithmic / numerical degeneracy
  }
  return 1;
}

std::string iso_utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Captures start time at construction; finish() fills the timing fields and
// writes <out>.manifest.json.
class ManifestScope {
 public:
  ManifestScope(int argc, char** argv)
      : start_(std::chrono::steady_clock::now()) {
    std::ostringstream echo;
    for (int i = 0; i < argc; ++i) {
      if (i) echo << ' ';
      echo << argv[i];
    }
    manifest_.command_line = echo.str();
    manifest_.started_at_utc = iso_utc_now();
  }

  void add_input(const std::string& path) {
    std::ostringstream hex;
    hex << "fnv1a64:" << std::hex << model_io::fnv1a64_file(path);
    manifest_.input_digests.emplace_back(path, hex.str());
  }

  void finish(const std::string& out_path, json resolved_config) {
    manifest_.resolved_config = std::move(resolved_config);
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    manifest_.peak_rss_kb = model_io::peak_rss_kb();
    model_io::write_manifest(out_path, manifest_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
  model_io::RunManifest manifest_;
};

std::vector<Index> parse_ranks(const std::string& text) {
  std::vector<Index> ranks;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(token, &used);
      if (used != token.size() || v < 0) throw std::invalid_argument(token);
      ranks.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      raise(ErrorKind::InvalidSpec,
            "--m expects a comma list of nonnegative integers, got \"" + text +
                "\"");
    }
  }
  if (ranks.empty())
    raise(ErrorKind::InvalidSpec, "--m expects at least one value");
  return ranks;
}

stream::AttributeSchema parse_schema(const std::string& text) {
  stream::AttributeSchema schema;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      schema.group_counts.push_back(static_cast<int>(v));
    } catch (const std::exception&) {
      raise(ErrorKind::SchemaViolation,
            "--multi-schema expects a comma list of group counts, got \"" +
                text + "\"");
    }
  }
  schema.validate();
  return schema;
}

// Partial overlay: only keys present in the file overwrite the defaults;
// command-line flags are applied afterwards and win.
void apply_config_file(const std::string& path, fnpm::FnpmConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorKind::InvalidSpec, path + ": " + e.what());
  }
  if (!j.is_object())
    raise(ErrorKind::InvalidSpec, path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "target_dim") {
        config.target_dim = value.get<Index>();
      } else if (key == "unfair_ranks") {
        const auto ranks = value.get<std::vector<Index>>();
        config.unfair_ranks.assign(ranks.begin(), ranks.end());
      } else if (key == "block_b") {
        config.block_b = value.get<std::int64_t>();
      } else if (key == "block_B") {
        config.block_B = value.get<std::int64_t>();
      } else if (key == "iters_T") {
        config.iters_T = value.get<int>();
      } else if (key == "iters_Tau") {
        config.iters_Tau = value.get<int>();
      } else if (key == "g_threshold") {
        config.g_threshold = value.get<double>();
      } else if (key == "degenerate_threshold") {
        config.degenerate_threshold = value.get<double>();
      } else if (key == "rng_seed") {
        config.rng_seed = value.get<std::uint64_t>();
      } else {
        raise(ErrorKind::InvalidSpec, path + ": unknown config key \"" + key +
                                          "\"");
      }
    } catch (const json::exception& e) {
      raise(ErrorKind::InvalidSpec,
            path + ": key \"" + key + "\": " + e.what());
    }
  }
}

struct ReadAllResult {
  std::vector<stream::LabeledSample> samples;
  Index dim = 0;
};

ReadAllResult read_all(stream::SampleStream& source) {
  ReadAllResult out;
  out.dim = source.dim();
  while (auto sample = source.next()) out.samples.push_back(std::move(*sample));
  return out;
}

// First pass of --center: mean over every row of the file.
Vector csv_mean(const std::string& path, const stream::AttributeSchema& schema) {
  auto source = stream::open_csv_stream(path, schema);
  Vector sum = Vector::Zero(source->dim());
  std::int64_t n = 0;
  while (auto sample = source->next()) {
    sum += sample->features;
    ++n;
  }
  if (n == 0) raise(ErrorKind::InsufficientData, path + " has no data rows");
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
  std::string spec_path;
  std::int64_t n = 0;
  std::string out;
};

int run_synth(const SynthArgs& args, ManifestScope& scope) {
  const stream::SyntheticSpec spec =
      model_io::read_synthetic_spec(args.spec_path);
  if (args.n < 0)
    raise(ErrorKind::InvalidSpec, "--n must be >= 0");
  scope.add_input(args.spec_path);
  auto source = stream::synthetic_stream(spec);
  stream::write_csv(args.out, *source, args.n);
  scope.finish(args.out, json{{"n", args.n},
                              {"dim", spec.dim},
                              {"rotation_seed", spec.rotation_seed},
                              {"sample_seed", spec.sample_seed}});
  return 0;
}

// ------------------------------------------------------------------ fit --

struct FitArgs {
  std::string data;
  std::string spec;
  std::string config_path;
  std::string multi_schema;
  bool center = false;
  std::string out;
  fnpm::FnpmConfig config;  // defaults, then config file, then flags
};

int run_fit(const FitArgs& args, ManifestScope& scope) {
  fnpm::validate(args.config);
  const bool multi = !args.multi_schema.empty();
  if (args.data.empty() == args.spec.empty())
    raise(ErrorKind::InvalidSpec, "exactly one of --data / --spec is required");
  if (!args.spec.empty() && multi)
    raise(ErrorKind::InvalidSpec,
          "--multi-schema applies to --data runs; synthetic streams are "
          "binary");
  if (!args.spec.empty() && args.center)
    raise(ErrorKind::InvalidSpec,
          "--center applies to --data runs; the synthetic mixture already "
          "has mean zero");

  stream::AttributeSchema schema =
      multi ? parse_schema(args.multi_schema) : stream::AttributeSchema::binary();
  if (multi &&
      std::cmp_not_equal(args.config.unfair_ranks.size(),
                         schema.group_counts.size()))
    raise(ErrorKind::InvalidSpec,
          "--m must list one rank per attribute: got " +
              std::to_string(args.config.unfair_ranks.size()) + " ranks for " +
              std::to_string(schema.group_counts.size()) + " attributes");

  std::unique_ptr<stream::SampleStream> source;
  if (!args.spec.empty()) {
    const stream::SyntheticSpec spec = model_io::read_synthetic_spec(args.spec);
    scope.add_input(args.spec);
    source = stream::synthetic_stream(spec);
  } else {
    scope.add_input(args.data);
    if (args.center) {
      Vector mean = csv_mean(args.data, schema);
      source = std::make_unique<stream::ShiftedStream>(
          stream::open_csv_stream(args.data, schema), std::move(mean));
    } else {
      source = stream::open_csv_stream(args.data, schema);
    }
  }

  const fnpm::FairPcaModel model = multi ? fnpm::fit_multi(*source, args.config)
                                         : fnpm::fit(*source, args.config);
  model_io::write_model(args.out, model);
  json resolved = json{{"config", model_io::config_to_json(args.config)},
                       {"center", args.center}};
  if (multi) resolved["schema"] = schema.group_counts;
  scope.finish(args.out, std::move(resolved));
  return 0;
}

// --------------------------------------------------------------- oracle --

struct OracleArgs {
  std::string data;
  std::string multi_schema;
  bool vanilla = false;
  bool center = false;
  bool m_given = false;
  std::string out;
  fnpm::FnpmConfig config;
};

int run_oracle(const OracleArgs& args, ManifestScope& scope) {
  fnpm::validate(args.config);
  if (args.vanilla && args.m_given)
    raise(ErrorKind::InvalidSpec,
          "--vanilla ignores the unfair subspace; drop --m");
  const bool multi = !args.multi_schema.empty();
  if (args.vanilla && multi)
    raise(ErrorKind::InvalidSpec, "--vanilla ignores attributes; drop "
                                  "--multi-schema");

  stream::AttributeSchema schema =
      multi ? parse_schema(args.multi_schema) : stream::AttributeSchema::binary();
  if (multi &&
      std::cmp_not_equal(args.config.unfair_ranks.size(),
                         schema.group_counts.size()))
    raise(ErrorKind::InvalidSpec,
          "--m must list one rank per attribute: got " +
              std::to_string(args.config.unfair_ranks.size()) + " ranks for " +
              std::to_string(schema.group_counts.size()) + " attributes");

  scope.add_input(args.data);
  auto source = stream::open_csv_stream(args.data, schema);
  ReadAllResult data = read_all(*source);
  if (data.samples.empty())
    raise(ErrorKind::InsufficientData, args.data + " has no data rows");

  fnpm::FairPcaModel model;
  model.config = args.config;
  model.samples_consumed = static_cast<std::int64_t>(data.samples.size());
  if (args.vanilla) {
    const oracle::OfflineStats stats =
        oracle::offline_statistics(data.samples, args.center);
    oracle::FairPcaSolution solution =
        oracle::vanilla_pca(stats, args.config.target_dim);
    model.loading = std::move(solution.loading);
    model.unfair = std::move(solution.unfair);
    model.method = "vanilla";
  } else if (multi) {
    std::vector<stream::LabeledSample>* rows = &data.samples;
    std::vector<stream::LabeledSample> centered;
    if (args.center) {
      const oracle::OfflineStats stats =
          oracle::offline_statistics(data.samples, true);
      centered = data.samples;
      for (auto& sample : centered) sample.features -= stats.pooled_mean;
      rows = &centered;
    }
    fnpm::UnfairSubspace unfair = oracle::offline_unfair_subspace_multi(
        *rows, schema, args.config.unfair_ranks);
    Matrix sigma = Matrix::Zero(data.dim, data.dim);
    for (const auto& sample : *rows)
      sigma.noalias() += sample.features * sample.features.transpose();
    sigma /= static_cast<double>(rows->size());
    oracle::FairPcaSolution solution = oracle::fair_pca_given_unfair(
        std::move(unfair), sigma, args.config.target_dim);
    model.loading = std::move(solution.loading);
    model.unfair = std::move(solution.unfair);
    model.method = "offline";
  } else {
    const oracle::OfflineStats stats =
        oracle::offline_statistics(data.samples, args.center);
    oracle::FairPcaSolution solution =
        oracle::offline_fair_pca(stats, args.config.unfair_rank(),
                                 args.config.target_dim,
                                 args.config.g_threshold);
    model.loading = std::move(solution.loading);
    model.unfair = std::move(solution.unfair);
    model.method = "offline";
  }
  model_io::write_model(args.out, model);
  json resolved = json{{"config", model_io::config_to_json(args.config)},
                       {"center", args.center},
                       {"vanilla", args.vanilla}};
  if (multi) resolved["schema"] = schema.group_counts;
  scope.finish(args.out, std::move(resolved));
  return 0;
}

// ----------------------------------------------------------------- eval --

struct EvalArgs {
  std::string model_path;
  std::string data;
  std::string against;
  std::string metrics_list;  // empty = all applicable
  std::string multi_schema;
  std::string mmd_kernel = "rbf";
  double mmd_bandwidth = 0.0;
  bool mmd_unbiased = false;
  std::string out;
};

int run_eval(const EvalArgs& args, ManifestScope& scope) {
  bool want_var = false, want_mmd = false, want_fairnorm = false,
       want_subopt = false;
  if (args.metrics_list.empty()) {
    want_var = want_mmd = want_fairnorm = true;
    want_subopt = !args.against.empty();
  } else {
    std::stringstream ss(args.metrics_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token == "var") {
        want_var = true;
      } else if (token == "mmd") {
        want_mmd = true;
      } else if (token == "fairnorm") {
        want_fairnorm = true;
      } else if (token == "subopt") {
        want_subopt = true;
      } else {
        raise(ErrorKind::InvalidSpec,
              "--metrics accepts var,mmd,fairnorm,subopt; got \"" + token +
                  "\"");
      }
    }
  }
  if (want_subopt && args.against.empty())
    raise(ErrorKind::InvalidSpec, "subopt needs --against <oracle model>");

  metrics::MmdOptions mmd_options;
  if (args.mmd_kernel == "linear") {
    mmd_options.kernel = metrics::MmdKernel::Linear;
  } else if (args.mmd_kernel == "rbf") {
    mmd_options.kernel = metrics::MmdKernel::Rbf;
  } else {
    raise(ErrorKind::InvalidSpec,
          "--mmd-kernel must be linear or rbf, got \"" + args.mmd_kernel +
              "\"");
  }
  mmd_options.bandwidth = args.mmd_bandwidth;
  mmd_options.unbiased = args.mmd_unbiased;

  const fnpm::FairPcaModel model = model_io::read_model(args.model_path);
  scope.add_input(args.model_path);
  std::optional<fnpm::FairPcaModel> reference;
  if (!args.against.empty()) {
    reference = model_io::read_model(args.against);
    scope.add_input(args.against);
    if (reference->loading.ambient_dim() != model.loading.ambient_dim() ||
        reference->loading.rank() != model.loading.rank())
      raise(ErrorKind::DimensionMismatch,
            "--against model shape differs from --model");
  }

  const stream::AttributeSchema schema =
      args.multi_schema.empty() ? stream::AttributeSchema::binary()
                                : parse_schema(args.multi_schema);
  auto source = stream::open_csv_stream(args.data, schema);
  scope.add_input(args.data);
  if (source->dim() != model.loading.ambient_dim())
    raise(ErrorKind::DimensionMismatch,
          "data dim " + std::to_string(source->dim()) + " != model dim " +
              std::to_string(model.loading.ambient_dim()));

  // Single pass: variance sums for the model (and the reference when
  // present) plus projected rows per group of attribute 1 for MMD.
  const Matrix& v = model.loading.columns();
  double captured = 0.0, captured_ref = 0.0, total = 0.0;
  std::int64_t n = 0;
  std::vector<Vector> projected0, projected1;
  while (auto sample = source->next()) {
    const Vector z = v.transpose() * sample->features;
    captured += z.squaredNorm();
    total += sample->features.squaredNorm();
    if (reference)
      captured_ref +=
          (reference->loading.columns().transpose() * sample->features)
              .squaredNorm();
    if (want_mmd) {
      // One-vs-rest split on the first attribute.
      (sample->attributes[0] == 0 ? projected0 : projected1).push_back(z);
    }
    ++n;
  }
  if (n == 0) raise(ErrorKind::InsufficientData, args.data + " has no data rows");

  metrics::EvalReport report;
  if (want_var) {
    report.explained_variance = captured / static_cast<double>(n);
    report.explained_variance_pct =
        total > 0.0 ? 100.0 * captured / total : 0.0;
  }
  if (want_fairnorm) {
    const fnpm::FairPcaModel& basis_owner = reference ? *reference : model;
    report.fairness_norm = metrics::fairness_spectral_norm(
        basis_owner.unfair.basis, model.loading);
  }
  if (want_mmd) {
    Matrix group0(static_cast<Index>(projected0.size()), v.cols());
    for (std::size_t i = 0; i < projected0.size(); ++i)
      group0.row(static_cast<Index>(i)) = projected0[i];
    Matrix group1(static_cast<Index>(projected1.size()), v.cols());
    for (std::size_t i = 0; i < projected1.size(); ++i)
      group1.row(static_cast<Index>(i)) = projected1[i];
    report.mmd_squared = metrics::mmd_squared(group0, group1, mmd_options);
  }
  if (want_subopt)
    report.suboptimality = (captured_ref - captured) / static_cast<double>(n);
  if (reference)
    report.sin_to_oracle =
        linalg::sin_distance(model.loading, reference->loading);

  json out = json{
      {"explained_variance",
       report.explained_variance ? json(*report.explained_variance) : json()},
      {"explained_variance_pct", report.explained_variance_pct
                                     ? json(*report.explained_variance_pct)
                                     : json()},
      {"fairness_norm",
       report.fairness_norm ? json(*report.fairness_norm) : json()},
      {"mmd_squared", report.mmd_squared ? json(*report.mmd_squared) : json()},
      {"suboptimality",
       report.suboptimality ? json(*report.suboptimality) : json()},
      {"sin_to_oracle",
       report.sin_to_oracle ? json(*report.sin_to_oracle) : json()}};
  std::cout << out.dump(2) << '\n';
  if (!args.out.empty()) {
    model_io::write_eval_report(args.out, report);
    scope.finish(args.out,
                 json{{"metrics_requested",
                       args.metrics_list.empty() ? "all" : args.metrics_list},
                      {"mmd_kernel", args.mmd_kernel},
                      {"mmd_bandwidth", args.mmd_bandwidth},
                      {"mmd_unbiased", args.mmd_unbiased}});
  }
  return 0;
}

// -------------------------------------------------------------- compare --

struct CompareArgs {
  std::string model_a;
  std::string model_b;
  std::string out;
};

int run_compare(const CompareArgs& args, ManifestScope& scope) {
  const fnpm::FairPcaModel a = model_io::read_model(args.model_a);
  const fnpm::FairPcaModel b = model_io::read_model(args.model_b);
  scope.add_input(args.model_a);
  scope.add_input(args.model_b);
  if (a.loading.ambient_dim() != b.loading.ambient_dim() ||
      a.loading.rank() != b.loading.rank())
    raise(ErrorKind::DimensionMismatch,
          "models must share ambient dim and k: " +
              std::to_string(a.loading.ambient_dim()) + "/" +
              std::to_string(a.loading.rank()) + " vs " +
              std::to_string(b.loading.ambient_dim()) + "/" +
              std::to_string(b.loading.rank()));

  const json out =
      json{{"sin_distance", linalg::sin_distance(a.loading, b.loading)},
           {"unfair_a_vs_loading_b",
            metrics::fairness_spectral_norm(a.unfair.basis, b.loading)},
           {"unfair_b_vs_loading_a",
            metrics::fairness_spectral_norm(b.unfair.basis, a.loading)}};
  std::cout << out.dump(2) << '\n';
  if (!args.out.empty()) {
    std::ofstream file(args.out, std::ios::binary | std::ios::trunc);
    if (!file) raise(ErrorKind::Io, "cannot open " + args.out + " for writing");
    file << out.dump(2) << '\n';
    scope.finish(args.out, json::object());
  }
  return 0;
}

// ---------------------------------------------------------------- probe --

struct ProbeArgs {
  std::string spec;
  std::string grid_file;
  std::string config_path;
  double eps_o = 0.0;
  double eps_f = 0.0;
  int trials = 20;
  std::string out;
  std::uint64_t seed = 0;
  fnpm::FnpmConfig config;
};

int run_probe(const ProbeArgs& args, ManifestScope& scope) {
  fnpm::validate(args.config);
  const stream::SyntheticSpec spec = model_io::read_synthetic_spec(args.spec);
  const std::vector<metrics::PafoGridPoint> grid =
      model_io::read_probe_grid(args.grid_file);
  scope.add_input(args.spec);
  scope.add_input(args.grid_file);

  const metrics::PafoProbeResult result =
      metrics::pafo_probe(spec, args.config, grid, args.eps_o, args.eps_f,
                          args.trials, args.seed);

  std::string csv_path = args.out;
  if (csv_path.size() > 5 && csv_path.ends_with(".json"))
    csv_path.resize(csv_path.size() - 5);
  csv_path += ".csv";
  model_io::write_probe_result(args.out, csv_path, result);
  scope.finish(args.out,
               json{{"config", model_io::config_to_json(args.config)},
                    {"eps_objective", args.eps_o},
                    {"eps_fairness", args.eps_f},
                    {"trials", args.trials},
                    {"base_seed", args.seed},
                    {"csv", csv_path}});
  return 0;
}

// Pre-scan for --config so file values can seed the defaults that flags
// then override (flags > config file > defaults).
std::string find_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-bounded streaming fair PCA"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::simple);

  fnpm::FnpmConfig base;
  const std::string config_path = find_config_flag(argc, argv);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand(
      "synth", "materialize a synthetic stream prefix as CSV");
  cmd_synth->add_option("spec-file", synth.spec_path, "synthetic spec JSON")
      ->required();
  cmd_synth->add_option("--n", synth.n, "number of rows")->required();
  cmd_synth->add_option("--out", synth.out, "output CSV path")->required();

  FitArgs fit;
  std::string fit_m = "1";
  auto* cmd_fit =
      app.add_subcommand("fit", "streaming two-phase fair PCA fit");
  cmd_fit->add_option("--data", fit.data, "input CSV");
  cmd_fit->add_option("--spec", fit.spec, "synthetic spec JSON (infinite stream)");
  cmd_fit->add_option("--k", fit.config.target_dim, "number of loadings");
  auto* fit_m_opt = cmd_fit->add_option(
      "--m", fit_m, "unfair-subspace rank (comma list for --multi-schema)");
  cmd_fit->add_option("--block-b", fit.config.block_b, "phase-1 block size");
  cmd_fit->add_option("--block-B", fit.config.block_B, "phase-2 block size");
  cmd_fit->add_option("--iters-t", fit.config.iters_T, "phase-1 iterations");
  cmd_fit->add_option("--iters-tau", fit.config.iters_Tau,
                      "phase-2 iterations");
  cmd_fit->add_option("--seed", fit.config.rng_seed, "rng seed");
  cmd_fit->add_option("--multi-schema", fit.multi_schema,
                      "per-attribute group counts, e.g. 2,3");
  cmd_fit->add_flag("--center", fit.center,
                    "subtract the file mean first (two passes)");
  cmd_fit->add_option("--config", fit.config_path,
                      "JSON config file (flags override it)");
  cmd_fit->add_option("--out", fit.out, "output model JSON")->required();

  OracleArgs orc;
  std::string orc_m = "1";
  auto* cmd_oracle = app.add_subcommand(
      "oracle", "exact offline solution on an in-memory dataset");
  cmd_oracle->add_option("--data", orc.data, "input CSV")->required();
  cmd_oracle->add_option("--k", orc.config.target_dim, "number of loadings");
  auto* orc_m_opt = cmd_oracle->add_option(
      "--m", orc_m, "unfair-subspace rank (comma list for --multi-schema)");
  cmd_oracle->add_option("--multi-schema", orc.multi_schema,
                         "per-attribute group counts, e.g. 2,3");
  cmd_oracle->add_flag("--vanilla", orc.vanilla,
                       "unconstrained PCA (no unfair subspace)");
  cmd_oracle->add_flag("--center", orc.center,
                       "subtract the pooled mean before moments");
  cmd_oracle->add_option("--out", orc.out, "output model JSON")->required();

  EvalArgs eval;
  auto* cmd_eval =
      app.add_subcommand("eval", "evaluate a model file on a dataset");
  cmd_eval->add_option("--model", eval.model_path, "model JSON")->required();
  cmd_eval->add_option("--data", eval.data, "input CSV")->required();
  cmd_eval->add_option("--metrics", eval.metrics_list,
                       "comma list of var,mmd,fairnorm,subopt (default all)");
  cmd_eval->add_option("--against", eval.against,
                       "reference model for subopt / sin / fairnorm");
  cmd_eval->add_option("--multi-schema", eval.multi_schema,
                       "per-attribute group counts of the data CSV");
  cmd_eval->add_option("--mmd-kernel", eval.mmd_kernel, "linear or rbf");
  cmd_eval->add_option("--mmd-bandwidth", eval.mmd_bandwidth,
                       "rbf bandwidth (0 = median heuristic)");
  cmd_eval->add_flag("--mmd-unbiased", eval.mmd_unbiased,
                     "use the unbiased estimator");
  cmd_eval->add_option("--out", eval.out, "also write the report JSON here");

  CompareArgs cmp;
  auto* cmd_compare =
      app.add_subcommand("compare", "geometry between two model files");
  cmd_compare->add_option("--model-a", cmp.model_a, "model JSON")->required();
  cmd_compare->add_option("--model-b", cmp.model_b, "model JSON")->required();
  cmd_compare->add_option("--out", cmp.out, "also write the comparison here");

  ProbeArgs probe;
  auto* cmd_probe = app.add_subcommand(
      "probe", "success-rate sweep over a budget grid");
  cmd_probe->add_option("--spec", probe.spec, "synthetic spec JSON")
      ->required();
  cmd_probe->add_option("--grid-file", probe.grid_file,
                        "JSON array of {block_b, block_B, iters_T, iters_Tau}")
      ->required();
  cmd_probe->add_option("--eps-o", probe.eps_o, "objective tolerance")
      ->required();
  cmd_probe->add_option("--eps-f", probe.eps_f, "fairness tolerance")
      ->required();
  cmd_probe->add_option("--trials", probe.trials, "fits per grid point");
  cmd_probe->add_option("--seed", probe.seed, "base seed for trial rngs");
  cmd_probe->add_option("--config", probe.config_path,
                        "JSON config file for the base fit settings");
  cmd_probe->add_option("--out", probe.out, "output JSON path (CSV lands "
                                            "next to it)")
      ->required();

  try {
    ManifestScope scope(argc, argv);

    // Config file first so explicit flags override its values.
    if (!config_path.empty()) {
      apply_config_file(config_path, base);
      fit.config = base;
      probe.config = base;
    }

    app.parse(argc, argv);

    if (cmd_synth->parsed()) return run_synth(synth, scope);
    if (cmd_fit->parsed()) {
      if (fit_m_opt->count() > 0) fit.config.unfair_ranks = parse_ranks(fit_m);
      return run_fit(fit, scope);
    }
    if (cmd_oracle->parsed()) {
      orc.m_given = orc_m_opt->count() > 0;
      if (orc.m_given) orc.config.unfair_ranks = parse_ranks(orc_m);
      return run_oracle(orc, scope);
    }
    if (cmd_eval->parsed()) return run_eval(eval, scope);
    if (cmd_compare->parsed()) return run_compare(cmp, scope);
    if (cmd_probe->parsed()) return run_probe(probe, scope);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: kind=" << fairpca::to_string(e.kind())
              << " code=" << exit_code_for(e.kind()) << " msg=\"" << e.what()
              << "\"\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: kind=Internal code=1 msg=\"" << e.what() << "\"\n";
    return 1;
  }
}
