#include "srsattr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "srsattr/errors.hpp"
#include "srsattr/summation.hpp"

namespace srsattr {

namespace {

void check_sample_size(const Population& pop, std::size_t sample_size) {
  if (sample_size < 1 || sample_size > pop.size()) {
    throw InvariantError("sample size n=" + std::to_string(sample_size) + " must satisfy 1 <= n <= N=" +
                         std::to_string(pop.size()));
  }
}

std::string subset_label(std::span<const std::size_t> indices) {
  std::string out = "{units ";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(indices[i] + 1);
  }
  return out + "}";
}

template <class Fn>
MomentTable average_over_subsets(const Population& pop, std::size_t sample_size, std::uint64_t cap, Fn&& transform) {
  check_sample_size(pop, sample_size);
  std::array<std::array<CompensatedSum, 5>, 5> sums{};
  std::uint64_t count = 0;
  const double Y = pop.ybar();
  const double P = pop.proportion();
  for_each_subset(pop.size(), sample_size, cap, [&](std::span<const std::size_t> idx) {
    const SampleStats s = sample_stats(pop, idx);
    const double e0 = transform((s.ybar - Y) / Y);
    const double e1 = transform((s.p - P) / P);
    double pa = 1.0;
    for (int a = 0; a <= 4; ++a) {
      double term = pa;
      for (int b = 0; a + b <= 4; ++b) {
        sums[a][b].add(term);
        term *= e1;
      }
      pa *= e0;
    }
    ++count;
  });
  MomentTable table{};
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) table[a][b] = sums[a][b].value() / static_cast<double>(count);
  }
  return table;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string_view policy_name(DegeneratePolicy policy) noexcept {
  return policy == DegeneratePolicy::Skip ? "skip" : "abort";
}

DegeneratePolicy parse_policy(std::string_view text) {
  if (text == "skip") return DegeneratePolicy::Skip;
  if (text == "abort") return DegeneratePolicy::Abort;
  throw Error("unknown degenerate-sample policy '" + std::string(text) + "'");
}

std::uint64_t subset_count(std::size_t population_size, std::size_t sample_size) noexcept {
  if (sample_size > population_size) return 0;
  const std::size_t k = std::min(sample_size, population_size - sample_size);
  __extension__ using wide = unsigned __int128;
  wide c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * (population_size - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

SampleStats sample_stats(const Population& pop, std::span<const std::size_t> indices) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (const std::size_t i : indices) {
    sum += pop.y()[i];
    hits += pop.phi()[i];
  }
  const auto n = static_cast<double>(indices.size());
  return SampleStats{indices.size(), sum / n, static_cast<double>(hits) / n};
}

SampleStats srswor_sample(const Population& pop, std::size_t sample_size, Rng& rng) {
  check_sample_size(pop, sample_size);
  const std::size_t N = pop.size();
  std::vector<char> chosen(N, 0);
  std::vector<std::size_t> picked;
  picked.reserve(sample_size);
  for (std::size_t j = N - sample_size; j < N; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    const std::size_t unit = chosen[t] ? j : t;
    chosen[unit] = 1;
    picked.push_back(unit);
  }
  return sample_stats(pop, picked);
}

MomentTable exact_moment_table(const Population& pop, std::size_t sample_size, std::uint64_t cap) {
  return average_over_subsets(pop, sample_size, cap, [](double e) { return e; });
}

MomentTable exact_absolute_moment_table(const Population& pop, std::size_t sample_size, std::uint64_t cap) {
  return average_over_subsets(pop, sample_size, cap, [](double e) { return std::abs(e); });
}

double exact_moment(const Population& pop, std::size_t sample_size, int a, int b, std::uint64_t cap) {
  if (a < 0 || b < 0 || a + b > 4) {
    throw std::out_of_range("exact moment requested for a=" + std::to_string(a) + ", b=" + std::to_string(b));
  }
  return exact_moment_table(pop, sample_size, cap)[a][b];
}

MomentProvider enumerated_provider(const Population& pop, std::size_t sample_size, std::uint64_t cap) {
  return MomentProvider::enumerated(pop.ybar(), exact_moment_table(pop, sample_size, cap));
}

ExactResult enumerate_exact(const Population& pop, std::size_t sample_size, const EstimatorSpec& spec,
                            DegeneratePolicy policy, std::uint64_t cap) {
  check_sample_size(pop, sample_size);
  const double Y = pop.ybar();
  const double P = pop.proportion();
  CompensatedSum dev;
  CompensatedSum sq;
  ExactResult out;
  for_each_subset(pop.size(), sample_size, cap, [&](std::span<const std::size_t> idx) {
    ++out.subsets;
    const auto t = try_point_estimate(spec, sample_stats(pop, idx), P);
    if (!t) {
      if (policy == DegeneratePolicy::Abort) {
        throw DegenerateSample(std::string(family_name(family_of(spec))) + " (" + describe(spec) +
                               ") is undefined at subset " + subset_label(idx));
      }
      ++out.degenerate_count;
      return;
    }
    const double d = *t - Y;
    dev.add(d);
    sq.add(d * d);
  });
  const std::uint64_t effective = out.subsets - out.degenerate_count;
  if (effective == 0) throw AllDegenerate("every subset is degenerate for " + describe(spec));
  out.bias = dev.value() / static_cast<double>(effective);
  out.mse = sq.value() / static_cast<double>(effective);
  return out;
}

void to_json(nlohmann::json& j, const SimulationReport& r) {
  j = nlohmann::json{
      {"estimator", r.spec},
      {"n", r.sample_size},
      {"replicates", r.replicates},
      {"empirical_bias", r.empirical_bias},
      {"empirical_mse", r.empirical_mse},
      {"se_bias", r.se_bias},
      {"se_mse", r.se_mse},
      {"degenerate_count", r.degenerate_count},
      {"seed", r.seed},
      {"policy", std::string(policy_name(r.policy))},
  };
}

SimulationReport simulate(const Population& pop, std::size_t sample_size, const EstimatorSpec& spec,
                          std::uint64_t replicates, std::uint64_t seed, DegeneratePolicy policy, unsigned threads) {
  check_sample_size(pop, sample_size);
  if (replicates < kMinReplicates) {
    throw Error("simulate requires at least " + std::to_string(kMinReplicates) + " replicates, got " +
                std::to_string(replicates));
  }
  const double Y = pop.ybar();
  const double P = pop.proportion();
  constexpr double kDegenerate = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> deviation(replicates);
  const auto run_block = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng(substream_seed(seed, r));
      const auto t = try_point_estimate(spec, srswor_sample(pop, sample_size, rng), P);
      deviation[r] = t ? *t - Y : kDegenerate;
    }
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, replicates));
  if (workers <= 1) {
    run_block(0, replicates);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (replicates + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min<std::uint64_t>(replicates, w * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(replicates, begin + chunk);
      pool.emplace_back(run_block, begin, end);
    }
  }

  SimulationReport report;
  report.spec = spec;
  report.sample_size = sample_size;
  report.replicates = replicates;
  report.seed = seed;
  report.policy = policy;

  CompensatedSum dev;
  CompensatedSum sq;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const double d = deviation[r];
    if (std::isnan(d)) {
      if (policy == DegeneratePolicy::Abort) {
        throw DegenerateSample(std::string(family_name(family_of(spec))) + " (" + describe(spec) +
                               ") is undefined in replicate " + std::to_string(r) + " (seed " +
                               std::to_string(seed) + ")");
      }
      ++report.degenerate_count;
      continue;
    }
    dev.add(d);
    sq.add(d * d);
  }
  const std::uint64_t effective = replicates - report.degenerate_count;
  if (effective == 0) throw AllDegenerate("every replicate is degenerate for " + describe(spec));
  const auto m = static_cast<double>(effective);
  report.empirical_bias = dev.value() / m;
  report.empirical_mse = sq.value() / m;

  CompensatedSum var_dev;
  CompensatedSum var_sq;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    const double d = deviation[r];
    if (std::isnan(d)) continue;
    const double a = d - report.empirical_bias;
    const double b = d * d - report.empirical_mse;
    var_dev.add(a * a);
    var_sq.add(b * b);
  }
  const double denom = effective > 1 ? m - 1.0 : 1.0;
  report.se_bias = std::sqrt(var_dev.value() / denom / m);
  report.se_mse = std::sqrt(var_sq.value() / denom / m);
  return report;
}

}  // namespace srsattr
