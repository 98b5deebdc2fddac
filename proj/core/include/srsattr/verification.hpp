#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srsattr/population.hpp"

namespace srsattr {

/// One population with the sample size to enumerate it at.
struct SweepCase {
  Population pop;
  std::size_t sample_size;
};

/// Seeded small populations: N in [6, 14], n in [2, N - 2], y correlated with phi.
std::vector<SweepCase> bundled_sweep(std::size_t count = 20, std::uint64_t seed = 1979);

/// Relative error of a closed-form moment against enumeration. When the moment
/// is structurally zero (a factor N - 2n or 1 - 2P vanishes), so that both sides
/// are rounding noise, the error is taken relative to `scale`, the enumerated
/// E[|e0|^a |e1|^b].
double moment_relative_error(double closed_form, double enumerated, double scale) noexcept;

struct LemmaCheckRow {
  int a = 0;
  int b = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

/// A candidate closed form for a fourth-order moment, audited against enumeration.
struct FourthOrderRow {
  std::string moment;  // "E[e1^4]", ...
  std::string form;    // the closed form in words
  double max_rel_error = 0.0;
  /// "exact" (<= 1e-10), "approx" (<= 1e-6) or "mismatch".
  std::string verdict;
};

struct PolynomialRow {
  double w = 0.0;
  std::string quantity;  // bias2 | mse2
  double max_rel_error = 0.0;
  bool pass = false;
  /// False for t3 at w = 2 MSE: S^2 there has degree 5 and 6 terms that the
  /// degree-4 truncation drops, so exactness is not expected.
  bool gating = true;
};

struct LemmaSweepResult {
  static constexpr double kLemmaTolerance = 1e-12;
  static constexpr double kExactVerdict = 1e-10;
  static constexpr double kApproxVerdict = 1e-6;
  static constexpr double kPolynomialTolerance = 1e-10;

  std::size_t populations = 0;
  std::vector<LemmaCheckRow> lemma_rows;
  std::vector<FourthOrderRow> fourth_order_rows;
  std::vector<PolynomialRow> polynomial_rows;

  bool lemma_pass() const;
  /// Some candidate form is within 1e-6 for both E[e1^4] and E[e0 e1^3].
  bool fourth_order_pass() const;
  /// Every gating polynomial row passes.
  bool polynomial_pass() const;
  /// Verdict for the named moment and form; empty when absent.
  std::string verdict(const std::string& moment, const std::string& form) const;
};

/// Enumerates every case and compares against the lemma closed forms:
/// orders <= 3 (exactness), the fourth-order candidates, and the engine's
/// second-order bias/MSE for t3 with w in {1, 2} under the enumerated provider.
LemmaSweepResult lemma_sweep(const std::vector<SweepCase>& cases);

void to_json(nlohmann::json& j, const LemmaSweepResult& result);
std::string format_lemma_sweep(const LemmaSweepResult& result);

}  // namespace srsattr
