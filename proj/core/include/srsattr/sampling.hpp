#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srsattr/errors.hpp"
#include "srsattr/estimators.hpp"
#include "srsattr/expansion.hpp"
#include "srsattr/population.hpp"

namespace srsattr {

/// Generator behind every seeded draw in the project.
using Rng = std::mt19937_64;

/// Seed of substream `index` derived from a master seed (SplitMix64 finalizer),
/// so replicate r always sees the same stream regardless of scheduling.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

enum class DegeneratePolicy { Skip, Abort };

std::string_view policy_name(DegeneratePolicy policy) noexcept;
DegeneratePolicy parse_policy(std::string_view text);

inline constexpr std::uint64_t kDefaultEnumerationCap = 2'000'000;

/// C(N, n), saturating at UINT64_MAX.
std::uint64_t subset_count(std::size_t population_size, std::size_t sample_size) noexcept;

/// Sample statistics of the units selected by `indices`.
SampleStats sample_stats(const Population& pop, std::span<const std::size_t> indices);

/// One SRSWOR draw of n units (Floyd's algorithm); every n-subset is equally likely.
SampleStats srswor_sample(const Population& pop, std::size_t sample_size, Rng& rng);

/// Calls visit(indices) for every n-subset in lexicographic order.
/// Throws EnumerationTooLarge when C(N, n) exceeds the cap.
template <class Visitor>
void for_each_subset(std::size_t population_size, std::size_t sample_size, std::uint64_t cap, Visitor&& visit);

/// Exact E[e0^a e1^b] for all a + b <= 4, averaged over all C(N, n) subsets.
MomentTable exact_moment_table(const Population& pop, std::size_t sample_size,
                               std::uint64_t cap = kDefaultEnumerationCap);

/// Exact E[e0^a e1^b], a + b <= 4.
double exact_moment(const Population& pop, std::size_t sample_size, int a, int b,
                    std::uint64_t cap = kDefaultEnumerationCap);

/// Exact E[|e0|^a |e1|^b]; the natural magnitude scale for comparing
/// moments whose true value is zero.
MomentTable exact_absolute_moment_table(const Population& pop, std::size_t sample_size,
                                        std::uint64_t cap = kDefaultEnumerationCap);

MomentProvider enumerated_provider(const Population& pop, std::size_t sample_size,
                                   std::uint64_t cap = kDefaultEnumerationCap);

struct ExactResult {
  double bias = 0.0;
  double mse = 0.0;
  std::uint64_t degenerate_count = 0;
  std::uint64_t subsets = 0;
};

/// Exact bias E[t] - Ybar and MSE E[(t - Ybar)^2] over every subset.
/// Under Skip the averages run over the non-degenerate subsets only.
ExactResult enumerate_exact(const Population& pop, std::size_t sample_size, const EstimatorSpec& spec,
                            DegeneratePolicy policy = DegeneratePolicy::Abort,
                            std::uint64_t cap = kDefaultEnumerationCap);

struct SimulationReport {
  EstimatorSpec spec;
  std::size_t sample_size = 0;
  std::uint64_t replicates = 0;
  double empirical_bias = 0.0;
  double empirical_mse = 0.0;
  double se_bias = 0.0;
  double se_mse = 0.0;
  std::uint64_t degenerate_count = 0;
  std::uint64_t seed = 0;
  DegeneratePolicy policy = DegeneratePolicy::Abort;
};

void to_json(nlohmann::json& j, const SimulationReport& report);

inline constexpr std::uint64_t kMinReplicates = 1000;

/// R independent SRSWOR replicates. Replicate r draws from
/// Rng(substream_seed(seed, r)), and the reduction runs in replicate order,
/// so the report is bit-identical for any thread count (0 = hardware concurrency).
SimulationReport simulate(const Population& pop, std::size_t sample_size, const EstimatorSpec& spec,
                          std::uint64_t replicates, std::uint64_t seed,
                          DegeneratePolicy policy = DegeneratePolicy::Abort, unsigned threads = 0);

// Implementation of the subset walker.

template <class Visitor>
void for_each_subset(std::size_t population_size, std::size_t sample_size, std::uint64_t cap, Visitor&& visit) {
  const std::uint64_t count = subset_count(population_size, sample_size);
  if (count > cap) throw EnumerationTooLarge(count, cap);
  std::vector<std::size_t> idx(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) idx[i] = i;
  const std::size_t k = sample_size;
  while (true) {
    visit(std::span<const std::size_t>(idx));
    // Advance to the next combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == population_size - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace srsattr
