#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json_fwd.hpp>

namespace srsattr {

// Every estimator has the form t = ybar * h(p / P) with h(1) = 1.

/// t1 = (1 - alpha) ybar + alpha ybar P / p
struct Chakrabarty {
  double alpha = 0.0;
};

/// t2 = ybar [P / (beta p + (1 - beta) P)]^g
struct KhoshnevisanRatio {
  double g = 1.0;
  double beta = 0.0;
};

/// t3 = ybar [2 - (p / P)^w]
struct SahaiRay {
  double w = 0.0;
};

/// t4 = ybar [2 - (p / P)^lambda exp(delta (p - P) / (p + P))]
struct Solanki {
  double lambda = 0.0;
  double delta = 0.0;

  /// First-order slope (delta + 2 lambda) / 2.
  double k() const noexcept { return (delta + 2.0 * lambda) / 2.0; }
};

using EstimatorSpec = std::variant<Chakrabarty, KhoshnevisanRatio, SahaiRay, Solanki>;

enum class Family { Chakrabarty, KhoshnevisanRatio, SahaiRay, Solanki };

inline constexpr std::array<Family, 4> kAllFamilies = {
    Family::Chakrabarty, Family::KhoshnevisanRatio, Family::SahaiRay, Family::Solanki};

Family family_of(const EstimatorSpec& spec) noexcept;
std::string_view family_name(Family family) noexcept;
/// Short label used in tables: t1..t4.
std::string_view family_label(Family family) noexcept;
/// Accepts the family name (case-insensitive) or its t1..t4 label.
Family parse_family(std::string_view text);

/// Parameters at which every sample returns ybar.
EstimatorSpec neutral_spec(Family family);

/// Human-readable parameter list, e.g. "g=1, beta=0.5".
std::string describe(const EstimatorSpec& spec);

void to_json(nlohmann::json& j, const EstimatorSpec& spec);
void from_json(const nlohmann::json& j, EstimatorSpec& spec);

struct SampleStats {
  std::size_t n = 0;
  double ybar = 0.0;
  /// Sample proportion with the attribute.
  double p = 0.0;
};

/// Evaluates the estimator; nullopt when it is undefined on this sample
/// (zero denominator, or a negative or fractional power of zero or of a
/// negative base).
std::optional<double> try_point_estimate(const EstimatorSpec& spec, const SampleStats& stats,
                                         double population_proportion) noexcept;

/// As try_point_estimate, throwing DegenerateSample instead of returning nullopt.
double point_estimate(const EstimatorSpec& spec, const SampleStats& stats, double population_proportion);

/// Taylor coefficients h_j = h^(j)(1) / j!, j = 1..4, of the shape function.
/// Index 0 holds h1.
using HCoefficients = std::array<double, 4>;

HCoefficients h_derivatives(const EstimatorSpec& spec);

/// The shape function itself; used by tests and by the finite-difference check.
double shape(const EstimatorSpec& spec, double u);

}  // namespace srsattr
