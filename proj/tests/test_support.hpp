#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>
#include <algorithm>

#include "srsattr/population.hpp"

namespace srsattr::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(SRSATTR_TEST_DATA) / name;
}

/// Random population with exactly `carriers` attribute units and y correlated with phi.
inline Population random_population(std::mt19937_64& rng, std::size_t N, std::size_t carriers,
                                    double shift = 2.0, double noise = 1.5, double base = 5.0) {
  std::vector<std::uint8_t> phi(N, 0);
  for (std::size_t i = 0; i < carriers; ++i) phi[i] = 1;
  std::shuffle(phi.begin(), phi.end(), rng);
  std::normal_distribution<double> z(0.0, noise);
  std::vector<double> y(N);
  for (std::size_t i = 0; i < N; ++i) y[i] = base + shift * phi[i] + z(rng);
  return Population(std::move(y), std::move(phi));
}

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

/// A scratch directory unique to the test binary run.
inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / ("srsattr_tests_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::filesystem::path write_file(const std::string& name, const std::string& content) {
  const auto path = scratch_dir() / name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace srsattr::testing
