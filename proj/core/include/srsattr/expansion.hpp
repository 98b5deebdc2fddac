#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srsattr/estimators.hpp"
#include "srsattr/population.hpp"

namespace srsattr {

/// E[e0^a e1^b] indexed [a][b], a + b <= 4, with
/// e0 = (ybar_s - Ybar) / Ybar and e1 = (p - P) / P.
using MomentTable = std::array<std::array<double, 5>, 5>;

/// Which closed form the lemma-based provider uses for E[e0^2 e1^2].
enum class CrossForm {
  /// L3 C22 + 3 L4 (C20 C02 + C11^2), the combination the printed MSE formulas consume.
  Printed,
  /// L3 C22 + L4 (C20 C02 + 2 C11^2), obtained by polarizing the fourth-moment identity.
  Polarized,
};

/// Closed-form SRSWOR moment E[e0^a e1^b] from C_pq and L1..L4.
double lemma_moment(const MomentSet& ms, const DesignCoefficients& dc, int a, int b,
                    CrossForm cross = CrossForm::Printed);

class MomentProvider {
 public:
  enum class Source { LemmaBased, Enumerated };

  static MomentProvider lemma_based(const MomentSet& ms, const DesignCoefficients& dc,
                                    CrossForm cross = CrossForm::Printed);
  static MomentProvider enumerated(double ybar, const MomentTable& table);

  Source source() const noexcept { return source_; }
  double ybar() const noexcept { return ybar_; }
  /// E[e0^a e1^b]; requires a + b <= 4.
  double expect(int a, int b) const;

 private:
  MomentProvider(Source source, double ybar, const MomentTable& table)
      : source_(source), ybar_(ybar), table_(table) {}

  Source source_;
  double ybar_;
  MomentTable table_;
};

struct FirstOrder {
  double bias = 0.0;
  double mse = 0.0;
};

FirstOrder bias_mse_first_order(const EstimatorSpec& spec, const MomentProvider& mp);

/// Expectation of the error series truncated at moment degree 4, times Ybar.
double bias_second_order(const EstimatorSpec& spec, const MomentProvider& mp);

/// Ybar^2 E[S^2], S = e0 + h1 e1 + h2 e1^2 + h1 e0 e1 + h3 e1^3 + h2 e0 e1^2,
/// keeping moment terms of total degree <= 4.
double mse_second_order(const EstimatorSpec& spec, const MomentProvider& mp);

enum class Method { EngineDerived, AsPrinted };

struct ApproxResult {
  double bias1 = 0.0;
  double mse1 = 0.0;
  double bias2 = 0.0;
  double mse2 = 0.0;
  Method method = Method::EngineDerived;
};

ApproxResult approximate(const EstimatorSpec& spec, const MomentProvider& mp);

/// How the stray "alpha" inside the printed t4 constants M and N is read.
enum class AlphaReading {
  AsLambda,
  AsZero,
};

/// The printed constants M and N of the t4 second-order bias.
struct SolankiConstants {
  double m = 0.0;
  double n = 0.0;
};
SolankiConstants printed_solanki_constants(const Solanki& spec, AlphaReading reading);

/// Evaluates the published bias/MSE formulas exactly as printed. With order 1
/// only bias1 and mse1 are filled (bias2 and mse2 are NaN).
ApproxResult as_printed(const EstimatorSpec& spec, const MomentSet& ms, const DesignCoefficients& dc,
                        int order, AlphaReading reading = AlphaReading::AsLambda);

/// Equation label of the printed formula for a family and quantity
/// ("bias1", "mse1", "bias2", "mse2").
std::string printed_equation(Family family, const std::string& quantity);

struct DiscrepancyRow {
  Family family;
  std::string parameter;
  std::string quantity;
  double engine = 0.0;
  double printed = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
  bool match = false;
  std::string equation;
};

struct DiscrepancyReport {
  static constexpr double kTolerance = 1e-9;

  std::vector<DiscrepancyRow> rows;

  /// Equation labels with at least one mismatching row, in first-seen order.
  std::vector<std::string> mismatched_equations() const;
  /// True when every row carrying this equation label matches.
  bool equation_matches(const std::string& equation) const;
  bool has_equation(const std::string& equation) const;
};

/// Default parameter grid: five points per family.
std::vector<EstimatorSpec> default_parameter_grid();

/// Engine (lemma-based provider) against the printed formulas on every grid
/// point; also audits the printed t1 series coefficients and records the
/// alternative alpha reading of the t4 constants.
DiscrepancyReport discrepancy_report(const MomentSet& ms, const DesignCoefficients& dc,
                                     const std::vector<EstimatorSpec>& grid);

/// Relative difference |a - b| / max(|a|, |b|), 0 when both are 0.
double relative_difference(double a, double b) noexcept;

void to_json(nlohmann::json& j, const DiscrepancyRow& row);
std::string format_discrepancy_table(const DiscrepancyReport& report);

}  // namespace srsattr
