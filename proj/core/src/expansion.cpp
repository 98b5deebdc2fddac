#include "srsattr/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace srsattr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Lemma right-hand sides in the notation of the printed formulas.
struct LemmaTerms {
  double l1c20, l1c02, l1c11;
  double l2c21, l2c12, l2c30;
  double q31;  // L3 C31 + 3 L4 C20 C11
  double q40;  // L3 C40 + 3 L4 C20^2
  double q22;  // L3 C22 + 3 L4 (C20 C02 + C11^2)
};

LemmaTerms lemma_terms(const MomentSet& ms, const DesignCoefficients& dc) {
  const auto C = [&](int p, int q) { return ms.c(p, q); };
  return LemmaTerms{
      dc.l1 * C(2, 0),
      dc.l1 * C(0, 2),
      dc.l1 * C(1, 1),
      dc.l2 * C(2, 1),
      dc.l2 * C(1, 2),
      dc.l2 * C(3, 0),
      dc.l3 * C(3, 1) + 3.0 * dc.l4 * C(2, 0) * C(1, 1),
      dc.l3 * C(4, 0) + 3.0 * dc.l4 * C(2, 0) * C(2, 0),
      dc.l3 * C(2, 2) + 3.0 * dc.l4 * (C(2, 0) * C(0, 2) + C(1, 1) * C(1, 1)),
  };
}

}  // namespace

double lemma_moment(const MomentSet& ms, const DesignCoefficients& dc, int a, int b, CrossForm cross) {
  if (a < 0 || b < 0 || a + b > 4) {
    throw std::out_of_range("lemma moment requested for a=" + std::to_string(a) + ", b=" + std::to_string(b));
  }
  // e1 carries the attribute index p, e0 the study-variable index q.
  const auto C = [&](int p, int q) { return ms.c(p, q); };
  const int p = b;
  const int q = a;
  switch (a + b) {
    case 0: return 1.0;
    case 1: return 0.0;
    case 2: return dc.l1 * C(p, q);
    case 3: return dc.l2 * C(p, q);
    default: break;
  }
  // Fourth order: L3 C_pq + 3 L4 * (second-order pairing).
  if (p == 4) return dc.l3 * C(4, 0) + 3.0 * dc.l4 * C(2, 0) * C(2, 0);
  if (q == 4) return dc.l3 * C(0, 4) + 3.0 * dc.l4 * C(0, 2) * C(0, 2);
  if (p == 3) return dc.l3 * C(3, 1) + 3.0 * dc.l4 * C(2, 0) * C(1, 1);
  if (q == 3) return dc.l3 * C(1, 3) + 3.0 * dc.l4 * C(0, 2) * C(1, 1);
  const double pairing = cross == CrossForm::Printed
                             ? 3.0 * (C(2, 0) * C(0, 2) + C(1, 1) * C(1, 1))
                             : C(2, 0) * C(0, 2) + 2.0 * C(1, 1) * C(1, 1);
  return dc.l3 * C(2, 2) + dc.l4 * pairing;
}

MomentProvider MomentProvider::lemma_based(const MomentSet& ms, const DesignCoefficients& dc, CrossForm cross) {
  MomentTable table{};
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) table[a][b] = lemma_moment(ms, dc, a, b, cross);
  }
  return MomentProvider(Source::LemmaBased, ms.ybar(), table);
}

MomentProvider MomentProvider::enumerated(double ybar, const MomentTable& table) {
  return MomentProvider(Source::Enumerated, ybar, table);
}

double MomentProvider::expect(int a, int b) const {
  if (a < 0 || b < 0 || a + b > 4) {
    throw std::out_of_range("moment requested for a=" + std::to_string(a) + ", b=" + std::to_string(b));
  }
  return table_[a][b];
}

FirstOrder bias_mse_first_order(const EstimatorSpec& spec, const MomentProvider& mp) {
  const auto h = h_derivatives(spec);
  const auto E = [&](int a, int b) { return mp.expect(a, b); };
  const double ybar = mp.ybar();
  FirstOrder out;
  out.bias = ybar * (E(1, 0) + h[0] * E(0, 1) + h[1] * E(0, 2) + h[0] * E(1, 1));
  out.mse = ybar * ybar * (E(2, 0) + h[0] * h[0] * E(0, 2) + 2.0 * h[0] * E(1, 1));
  return out;
}

double bias_second_order(const EstimatorSpec& spec, const MomentProvider& mp) {
  const auto h = h_derivatives(spec);
  const auto E = [&](int a, int b) { return mp.expect(a, b); };
  double acc = E(1, 0);
  for (int j = 1; j <= 4; ++j) acc += h[j - 1] * E(0, j);
  for (int j = 1; j <= 3; ++j) acc += h[j - 1] * E(1, j);
  return mp.ybar() * acc;
}

double mse_second_order(const EstimatorSpec& spec, const MomentProvider& mp) {
  const auto h = h_derivatives(spec);
  const double h1 = h[0], h2 = h[1], h3 = h[2];
  const auto E = [&](int a, int b) { return mp.expect(a, b); };
  // Coefficients of S^2 by monomial e0^a e1^b, degree <= 4.
  const double acc = E(2, 0)                              //
                     + 2.0 * h1 * E(1, 1)                 //
                     + h1 * h1 * E(0, 2)                  //
                     + 2.0 * h1 * E(2, 1)                 //
                     + (2.0 * h2 + 2.0 * h1 * h1) * E(1, 2)  //
                     + 2.0 * h1 * h2 * E(0, 3)            //
                     + (2.0 * h2 + h1 * h1) * E(2, 2)     //
                     + (2.0 * h3 + 4.0 * h1 * h2) * E(1, 3)  //
                     + (2.0 * h1 * h3 + h2 * h2) * E(0, 4);
  return mp.ybar() * mp.ybar() * acc;
}

ApproxResult approximate(const EstimatorSpec& spec, const MomentProvider& mp) {
  const auto first = bias_mse_first_order(spec, mp);
  return ApproxResult{first.bias, first.mse, bias_second_order(spec, mp), mse_second_order(spec, mp),
                      Method::EngineDerived};
}

SolankiConstants printed_solanki_constants(const Solanki& s, AlphaReading reading) {
  const double d = s.delta;
  const double l = s.lambda;
  const double a = reading == AlphaReading::AsLambda ? l : 0.0;
  SolankiConstants out;
  out.m = 0.5 * ((d * d * d - 6.0 * d * d) / 24.0 + a * (d * d - 2.0 * d) / 4.0 + l * (l - 1.0) / 2.0 * d +
                 l * (l - 1.0) * (l - 2.0) / 3.0);
  out.n = (1.0 / 8.0) * ((d * d * d * d - 12.0 * d * d * d + 12.0 * d * d) / 48.0 + a * (d * d * d - 6.0 * d) / 6.0 +
                         l * (l - 1.0) / 2.0 * (d * d - 2.0 * d) + l * (l - 1.0) * (l - 2.0) * (l - 3.0) / 3.0);
  return out;
}

ApproxResult as_printed(const EstimatorSpec& spec, const MomentSet& ms, const DesignCoefficients& dc, int order,
                        AlphaReading reading) {
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
  const LemmaTerms t = lemma_terms(ms, dc);
  const double Y = ms.ybar();
  const double Y2 = Y * Y;

  ApproxResult r;
  r.method = Method::AsPrinted;
  std::visit(
      overloaded{
          [&](const Chakrabarty& s) {
            const double al = s.alpha;
            r.bias1 = Y * (0.5 * al * t.l1c20 - al * t.l1c11);
            r.mse1 = Y2 * (t.l1c02 + al * al * t.l1c20 - 2.0 * al * t.l1c11);
            r.bias2 = Y * (al / 2.0 * t.l1c20 - al * t.l1c11 - al / 6.0 * t.l2c30 + al * t.l2c21 -
                           al / 6.0 * t.q31 + al / 24.0 * t.q40);
            r.mse2 = Y2 * (t.l1c02 + al * al * t.l1c20 - 2.0 * al * t.l1c11 - al * al * t.l2c30 +
                           (2.0 * al * al + al) * t.l2c21 - 2.0 * al * al * t.q31 + al * (al + 1.0) * t.q22 +
                           5.0 / 24.0 * al * al * t.q40);
          },
          [&](const KhoshnevisanRatio& s) {
            const double g = s.g;
            const double b = s.beta;
            const double g1 = g * (g + 1.0) / 2.0;
            const double g2 = g * (g + 1.0) * (g + 2.0) / 6.0;
            const double g3 = g * (g + 1.0) * (g + 2.0) * (g + 3.0) / 24.0;
            r.bias1 = Y * (g1 * t.l1c20 - g * b * t.l1c11);
            r.mse1 = Y2 * (t.l1c02 + g * g * b * b * t.l1c20 - 2.0 * g * b * t.l1c11);
            r.bias2 = Y * (g1 * b * b * t.l1c20 - g * b * t.l1c11 - g1 * b * b * t.l2c21 - g2 * b * b * b * t.l2c30 -
                           g2 * b * b * b * t.q31 + g3 * b * b * b * b * t.q40);
            r.mse2 = Y2 * (t.l1c02 + g * g * b * b * t.l1c20 - 2.0 * b * g * t.l1c11 -
                           b * b * b * g * g * (g + 1.0) * t.l2c30 + g * (3.0 * g + 1.0) * b * b * t.l2c21 -
                           2.0 * b * g * t.l2c12 - (7.0 * g * g * g + 9.0 * g * g + 2.0 * g) / 3.0 * b * b * b * t.q31 +
                           g * (2.0 * g + 1.0) * b * b * t.q22 +
                           (2.0 * g * g * g + 9.0 * g * g + 10.0 * g + 3.0) / 6.0 * b * b * b * b * t.q40);
          },
          [&](const SahaiRay& s) {
            const double w = s.w;
            const double w2 = w * (w - 1.0) / 2.0;
            const double w3 = w * (w - 1.0) * (w - 2.0) / 6.0;
            const double w4 = w * (w - 1.0) * (w - 2.0) * (w - 3.0) / 24.0;
            r.bias1 = Y * (-w2 * t.l1c20 - w * t.l1c11);
            r.mse1 = Y2 * (t.l1c02 + w * w * t.l1c20 - 2.0 * w * t.l1c11);
            r.bias2 = Y * (w2 * t.l1c20 - w * t.l1c11 - w2 * t.l2c21 - w3 * t.l2c30 - w3 * t.q31 - w4 * t.q40);
            r.mse2 = Y2 * (t.l1c02 + w * w * t.l1c20 - 2.0 * w * t.l1c11 - w * w * (w - 1.0) * t.l2c30 +
                           w * (w + 1.0) * t.l2c21 - 2.0 * w * t.l2c12 +
                           (5.0 * w * w * w - 3.0 * w * w - 2.0 * w) / 3.0 * t.q31 + w * t.q22 +
                           (7.0 * w * w * w * w - 18.0 * w * w * w + 11.0 * w * w) / 24.0 * t.q40);
          },
          [&](const Solanki& s) {
            const double k = s.k();
            const double k2 = k * (k - 1.0) / 2.0;
            const auto mn = printed_solanki_constants(s, reading);
            r.bias1 = Y * (-k2 * t.l1c20 - k * t.l1c11);
            r.mse1 = Y2 * (t.l1c02 + k * k * t.l1c20 - 2.0 * k * t.l1c11);
            r.bias2 = Y * (-k2 * t.l1c20 - k * t.l1c11 - k2 * t.l2c21 - mn.m * t.l2c30 - mn.m * t.q31 - mn.n * t.q40);
            r.mse2 = Y2 * (t.l1c02 + k * k * t.l1c20 - 2.0 * k * t.l1c11 + k * t.l2c21 - 2.0 * k * t.l2c12 +
                           k * k * (k - 1.0) * t.l2c30 + 2.0 * k * k * (k - 1.0) * t.q31 + k * t.q22 +
                           (k * k - k) * (k * k - k) / 4.0 * t.q40);
          },
      },
      spec);
  if (order == 1) {
    r.bias2 = kNaN;
    r.mse2 = kNaN;
  }
  return r;
}

std::string printed_equation(Family family, const std::string& quantity) {
  static const char* const table[4][4] = {
      {"4.1", "4.6", "5.2", "5.7"},
      {"4.2", "4.7", "5.3", "5.8"},
      {"4.3", "4.8", "5.4", "5.9"},
      {"4.5", "4.10", "5.6", "5.11"},
  };
  int col = -1;
  if (quantity == "bias1") col = 0;
  if (quantity == "mse1") col = 1;
  if (quantity == "bias2") col = 2;
  if (quantity == "mse2") col = 3;
  if (col < 0) throw std::invalid_argument("unknown quantity " + quantity);
  return table[static_cast<int>(family)][col];
}

double relative_difference(double a, double b) noexcept {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

std::vector<std::string> DiscrepancyReport::mismatched_equations() const {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    if (!row.match && std::find(out.begin(), out.end(), row.equation) == out.end()) out.push_back(row.equation);
  }
  return out;
}

bool DiscrepancyReport::equation_matches(const std::string& equation) const {
  bool seen = false;
  for (const auto& row : rows) {
    if (row.equation != equation) continue;
    seen = true;
    if (!row.match) return false;
  }
  return seen;
}

bool DiscrepancyReport::has_equation(const std::string& equation) const {
  return std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.equation == equation; });
}

std::vector<EstimatorSpec> default_parameter_grid() {
  return {
      Chakrabarty{-0.5},           Chakrabarty{0.25},           Chakrabarty{0.5},
      Chakrabarty{1.0},            Chakrabarty{1.5},            KhoshnevisanRatio{1.0, 1.0},
      KhoshnevisanRatio{1.0, 0.5}, KhoshnevisanRatio{2.0, 0.3}, KhoshnevisanRatio{-1.0, 0.8},
      KhoshnevisanRatio{0.5, 1.5}, SahaiRay{-1.0},              SahaiRay{0.5},
      SahaiRay{1.0},               SahaiRay{1.5},               SahaiRay{2.0},
      Solanki{0.5, 0.0},           Solanki{1.0, 1.0},           Solanki{0.0, 2.0},
      Solanki{0.3, -0.4},          Solanki{1.5, 0.5},
  };
}

DiscrepancyReport discrepancy_report(const MomentSet& ms, const DesignCoefficients& dc,
                                     const std::vector<EstimatorSpec>& grid) {
  const auto mp = MomentProvider::lemma_based(ms, dc);
  DiscrepancyReport report;
  const auto add = [&](const EstimatorSpec& spec, std::string quantity, double engine, double printed,
                       std::string equation) {
    DiscrepancyRow row;
    row.family = family_of(spec);
    row.parameter = describe(spec);
    row.quantity = std::move(quantity);
    row.engine = engine;
    row.printed = printed;
    row.abs_diff = std::abs(engine - printed);
    row.rel_diff = relative_difference(engine, printed);
    row.match = row.rel_diff <= DiscrepancyReport::kTolerance;
    row.equation = std::move(equation);
    report.rows.push_back(std::move(row));
  };

  for (const auto& spec : grid) {
    const Family family = family_of(spec);
    const auto engine = approximate(spec, mp);
    const auto printed = as_printed(spec, ms, dc, 2);
    add(spec, "bias1", engine.bias1, printed.bias1, printed_equation(family, "bias1"));
    add(spec, "mse1", engine.mse1, printed.mse1, printed_equation(family, "mse1"));
    add(spec, "bias2", engine.bias2, printed.bias2, printed_equation(family, "bias2"));
    add(spec, "mse2", engine.mse2, printed.mse2, printed_equation(family, "mse2"));

    if (family == Family::Solanki) {
      const auto alt = as_printed(spec, ms, dc, 2, AlphaReading::AsZero);
      add(spec, "bias2", engine.bias2, alt.bias2, "5.6[alpha=0]");
    }
    if (family == Family::Chakrabarty) {
      // Printed series for t1 - Ybar, coefficient by coefficient.
      const double al = std::get<Chakrabarty>(spec).alpha;
      const auto h = h_derivatives(spec);
      add(spec, "series e1", h[0], 0.5, "5.1");
      add(spec, "series e1^2", h[1], al / 2.0, "5.1");
      add(spec, "series e1^3", h[2], -al / 6.0, "5.1");
      add(spec, "series e1^4", h[3], al / 24.0, "5.1");
      add(spec, "series e0e1", h[0], -al, "5.1");
      add(spec, "series e0e1^2", h[1], al, "5.1");
      add(spec, "series e0e1^3", h[2], -al / 6.0, "5.1");
    }
  }
  return report;
}

void to_json(nlohmann::json& j, const DiscrepancyRow& row) {
  j = nlohmann::json{
      {"family", std::string(family_name(row.family))},
      {"parameter", row.parameter},
      {"quantity", row.quantity},
      {"engine", row.engine},
      {"printed", row.printed},
      {"abs_diff", row.abs_diff},
      {"rel_diff", row.rel_diff},
      {"verdict", row.match ? "match" : "mismatch"},
      {"equation", row.equation},
  };
}

std::string format_discrepancy_table(const DiscrepancyReport& report) {
  std::string out = fmt::format("{:<13} {:<22} {:<14} {:>16} {:>16} {:>10} {:<9} {}\n", "family", "parameter",
                                "quantity", "engine", "printed", "rel_diff", "verdict", "equation");
  for (const auto& r : report.rows) {
    out += fmt::format("{:<13} {:<22} {:<14} {:>16.9g} {:>16.9g} {:>10.2e} {:<9} ({})\n", family_name(r.family),
                       r.parameter, r.quantity, r.engine, r.printed, r.rel_diff, r.match ? "match" : "MISMATCH",
                       r.equation);
  }
  const auto bad = report.mismatched_equations();
  out += "mismatching printed equations:";
  if (bad.empty()) out += " none";
  for (const auto& e : bad) out += " (" + e + ")";
  out += "\n";
  return out;
}

}  // namespace srsattr
