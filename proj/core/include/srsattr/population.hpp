#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace srsattr {

/// Finite population of (y, phi) pairs with phi a binary attribute.
///
/// Construction validates N >= 4, 0 < P < 1 and Ybar != 0; a Population
/// that exists always satisfies those invariants.
class Population {
 public:
  Population(std::vector<double> y, std::vector<std::uint8_t> phi);

  std::size_t size() const noexcept { return y_.size(); }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const std::uint8_t> phi() const noexcept { return phi_; }

  double ybar() const noexcept { return ybar_; }
  /// Proportion of units possessing the attribute.
  double proportion() const noexcept { return proportion_; }
  std::size_t attribute_count() const noexcept { return attribute_count_; }

 private:
  std::vector<double> y_;
  std::vector<std::uint8_t> phi_;
  double ybar_ = 0.0;
  double proportion_ = 0.0;
  std::size_t attribute_count_ = 0;
};

/// Parses `y,phi` records (optional `y,phi` header, LF or CRLF).
/// `source` only labels error messages.
Population parse_population(std::istream& in, const std::string& source = "<stream>");
Population load_population(const std::filesystem::path& path);

/// Writes the population in the same format parse_population reads, using
/// shortest round-trip formatting for y.
void write_population(std::ostream& out, const Population& pop);

/// Normalized mixed central moments
///   C_pq = [(1/N) sum (phi_i - P)^p (y_i - Ybar)^q] / (P^p Ybar^q),  p + q <= 4.
/// p indexes the attribute, q the study variable.
class MomentSet {
 public:
  static constexpr int kMaxOrder = 4;

  MomentSet(std::size_t population_size, double ybar, double proportion,
            std::array<std::array<double, kMaxOrder + 1>, kMaxOrder + 1> c);

  std::size_t population_size() const noexcept { return population_size_; }
  double ybar() const noexcept { return ybar_; }
  double proportion() const noexcept { return proportion_; }

  /// C_pq; requires p + q <= 4.
  double c(int p, int q) const;

 private:
  std::size_t population_size_;
  double ybar_;
  double proportion_;
  std::array<std::array<double, kMaxOrder + 1>, kMaxOrder + 1> c_;
};

MomentSet moments(const Population& pop);

/// SRSWOR design coefficients for population size N and sample size n.
struct DesignCoefficients {
  std::size_t population_size = 0;
  std::size_t sample_size = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
};

/// Requires N >= 4 and 1 <= n < N; n == N is accepted only with
/// `allow_census`, in which case every coefficient with a factor (N - n) is 0.
DesignCoefficients design_coefficients(std::size_t population_size, std::size_t sample_size,
                                       bool allow_census = false);

}  // namespace srsattr
