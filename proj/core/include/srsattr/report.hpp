#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srsattr/estimators.hpp"
#include "srsattr/population.hpp"
#include "srsattr/sampling.hpp"

namespace srsattr {

std::string_view tool_version() noexcept;

enum class ProviderKind { Lemma, Enumerate };
enum class OutputFormat { Text, Json };

/// Everything a subcommand needs; echoed verbatim into every report.
struct RunConfig {
  std::filesystem::path input;
  std::optional<std::size_t> n;
  /// Empty means all four families.
  std::vector<Family> families;
  /// Estimator parameters by name: alpha, g, beta, w, lambda, delta.
  std::map<std::string, double> params;
  bool optimal = false;
  int order = 2;
  ProviderKind provider = ProviderKind::Lemma;
  std::uint64_t seed = 20240601;
  std::uint64_t replicates = 100'000;
  double bracket_lo = -5.0;
  double bracket_hi = 5.0;
  double tol = 1e-8;
  DegeneratePolicy policy = DegeneratePolicy::Skip;
  OutputFormat format = OutputFormat::Text;
  unsigned threads = 0;
  bool grid2d = false;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
};

nlohmann::json config_echo(const RunConfig& cfg);

/// Exit codes shared by the CLI.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitVerifyFailed = 2, kExitDegenerate = 3 };

struct Report {
  nlohmann::json json;
  std::string text;
  int exit_code = kExitOk;

  std::string render(OutputFormat format) const;
};

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

/// Estimator for `family` built from cfg.params; missing parameters take their neutral values
/// (alpha = beta = w = lambda = delta = 0, g = 1).
EstimatorSpec spec_from_params(Family family, const std::map<std::string, double>& params);

Report cmd_analyze(const RunConfig& cfg);
Report cmd_optimize(const RunConfig& cfg);
Report cmd_simulate(const RunConfig& cfg);
Report cmd_enumerate(const RunConfig& cfg);
/// Lemma-vs-enumeration sweep, fourth-order audit, polynomial exactness and the
/// printed-formula discrepancy report. cfg.input may name a directory of
/// population files or be empty for the bundled seeded sweep.
Report cmd_verify(const RunConfig& cfg);

struct SynthParams {
  std::size_t population_size = 200;
  double proportion = 0.25;
  std::uint64_t seed = 1;
  double mean0 = 10.0;
  double sd0 = 3.0;
  double mean1 = 12.0;
  double sd1 = 3.0;
};

/// Conditional means for a target point-biserial correlation, with common
/// within-group sd and overall mean `mean`.
SynthParams synth_params_for_correlation(std::size_t population_size, double proportion, double rho, double mean,
                                         double sd, std::uint64_t seed);

/// round(N P) attribute carriers at seeded positions; y within each group is
/// a seeded normal draw standardized to exactly the requested mean and sd.
Population synthesize_population(const SynthParams& params);

/// Population Pearson correlation between phi and y.
double point_biserial(const Population& pop);

}  // namespace srsattr
