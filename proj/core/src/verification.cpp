#include "srsattr/verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "srsattr/expansion.hpp"
#include "srsattr/sampling.hpp"

namespace srsattr {

std::vector<SweepCase> bundled_sweep(std::size_t count, std::uint64_t seed) {
  std::vector<SweepCase> cases;
  cases.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Rng rng(substream_seed(seed, c));
    const auto N = std::uniform_int_distribution<std::size_t>(6, 14)(rng);
    const auto carriers = std::uniform_int_distribution<std::size_t>(1, N - 1)(rng);
    const auto n = std::uniform_int_distribution<std::size_t>(2, N - 2)(rng);
    std::vector<std::uint8_t> phi(N, 0);
    std::fill_n(phi.begin(), carriers, 1);
    std::shuffle(phi.begin(), phi.end(), rng);
    std::normal_distribution<double> noise(0.0, 1.5);
    std::vector<double> y(N);
    for (std::size_t i = 0; i < N; ++i) y[i] = 4.0 + 2.5 * phi[i] + noise(rng);
    cases.push_back(SweepCase{Population(std::move(y), std::move(phi)), n});
  }
  return cases;
}

double moment_relative_error(double closed_form, double enumerated, double scale) noexcept {
  const double diff = std::abs(closed_form - enumerated);
  const double magnitude = std::max(std::abs(closed_form), std::abs(enumerated));
  if (closed_form == 0.0 || magnitude < 1e-10 * scale) return scale > 0.0 ? diff / scale : diff;
  return diff / magnitude;
}

bool LemmaSweepResult::lemma_pass() const {
  return !lemma_rows.empty() && std::all_of(lemma_rows.begin(), lemma_rows.end(), [](const auto& r) { return r.pass; });
}

bool LemmaSweepResult::fourth_order_pass() const {
  const auto close = [&](const std::string& moment) {
    return std::any_of(fourth_order_rows.begin(), fourth_order_rows.end(), [&](const auto& r) {
      return r.moment == moment && r.max_rel_error <= kApproxVerdict;
    });
  };
  return close("E[e1^4]") && close("E[e0 e1^3]");
}

bool LemmaSweepResult::polynomial_pass() const {
  return std::all_of(polynomial_rows.begin(), polynomial_rows.end(),
                     [](const auto& r) { return !r.gating || r.pass; });
}

std::string LemmaSweepResult::verdict(const std::string& moment, const std::string& form) const {
  for (const auto& r : fourth_order_rows) {
    if (r.moment == moment && r.form == form) return r.verdict;
  }
  return {};
}

LemmaSweepResult lemma_sweep(const std::vector<SweepCase>& cases) {
  LemmaSweepResult out;
  out.populations = cases.size();

  struct Candidate {
    std::string moment;
    std::string form;
    int a, b;
    std::function<double(const MomentSet&, const DesignCoefficients&)> value;
  };
  const std::vector<Candidate> candidates = {
      {"E[e1^4]", "L3 C40 + 3 L4 C20^2", 0, 4,
       [](const MomentSet& m, const DesignCoefficients& d) { return lemma_moment(m, d, 0, 4); }},
      {"E[e0 e1^3]", "L3 C31 + 3 L4 C20 C11", 1, 3,
       [](const MomentSet& m, const DesignCoefficients& d) { return lemma_moment(m, d, 1, 3); }},
      {"E[e0^2 e1^2]", "L3 C22 + 3 L4 (C20 C02 + C11^2)", 2, 2,
       [](const MomentSet& m, const DesignCoefficients& d) { return lemma_moment(m, d, 2, 2, CrossForm::Printed); }},
      {"E[e0^2 e1^2]", "L3 C22 + L4 (C20 C02 + 2 C11^2)", 2, 2,
       [](const MomentSet& m, const DesignCoefficients& d) { return lemma_moment(m, d, 2, 2, CrossForm::Polarized); }},
      {"E[e0^2 e1^2]", "L3 C40 + 3 L4 C20 (lemma viii verbatim)", 2, 2,
       [](const MomentSet& m, const DesignCoefficients& d) { return d.l3 * m.c(4, 0) + 3.0 * d.l4 * m.c(2, 0); }},
  };

  std::vector<std::pair<int, int>> low_orders;
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; a + b <= 3; ++b) low_orders.emplace_back(a, b);
  }
  std::vector<double> low_err(low_orders.size(), 0.0);
  std::vector<double> cand_err(candidates.size(), 0.0);
  const double ws[] = {1.0, 2.0};
  std::vector<double> poly_err(4, 0.0);

  for (const auto& c : cases) {
    const MomentSet ms = moments(c.pop);
    const DesignCoefficients dc = design_coefficients(c.pop.size(), c.sample_size);
    const MomentTable exact = exact_moment_table(c.pop, c.sample_size);
    const MomentTable scale = exact_absolute_moment_table(c.pop, c.sample_size);
    for (std::size_t i = 0; i < low_orders.size(); ++i) {
      const auto [a, b] = low_orders[i];
      const double err = moment_relative_error(lemma_moment(ms, dc, a, b), exact[a][b], scale[a][b]);
      low_err[i] = std::max(low_err[i], err);
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& cand = candidates[i];
      const double err = moment_relative_error(cand.value(ms, dc), exact[cand.a][cand.b], scale[cand.a][cand.b]);
      cand_err[i] = std::max(cand_err[i], err);
    }
    const auto mp = MomentProvider::enumerated(c.pop.ybar(), exact);
    for (int k = 0; k < 2; ++k) {
      const SahaiRay spec{ws[k]};
      const auto truth = enumerate_exact(c.pop, c.sample_size, spec, DegeneratePolicy::Abort);
      poly_err[2 * k] = std::max(poly_err[2 * k], relative_difference(bias_second_order(spec, mp), truth.bias));
      poly_err[2 * k + 1] = std::max(poly_err[2 * k + 1], relative_difference(mse_second_order(spec, mp), truth.mse));
    }
  }

  for (std::size_t i = 0; i < low_orders.size(); ++i) {
    out.lemma_rows.push_back(LemmaCheckRow{low_orders[i].first, low_orders[i].second, low_err[i],
                                           low_err[i] <= LemmaSweepResult::kLemmaTolerance});
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    FourthOrderRow row;
    row.moment = candidates[i].moment;
    row.form = candidates[i].form;
    row.max_rel_error = cand_err[i];
    row.verdict = cand_err[i] <= LemmaSweepResult::kExactVerdict   ? "exact"
                  : cand_err[i] <= LemmaSweepResult::kApproxVerdict ? "approx"
                                                                    : "mismatch";
    out.fourth_order_rows.push_back(std::move(row));
  }
  for (int k = 0; k < 2; ++k) {
    for (int q = 0; q < 2; ++q) {
      PolynomialRow row;
      row.w = ws[k];
      row.quantity = q == 0 ? "bias2" : "mse2";
      row.max_rel_error = poly_err[2 * k + q];
      row.pass = row.max_rel_error <= LemmaSweepResult::kPolynomialTolerance;
      row.gating = !(ws[k] == 2.0 && q == 1);
      out.polynomial_rows.push_back(std::move(row));
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const LemmaSweepResult& r) {
  nlohmann::json lemma = nlohmann::json::array();
  for (const auto& row : r.lemma_rows) {
    lemma.push_back({{"a", row.a}, {"b", row.b}, {"max_rel_error", row.max_rel_error}, {"pass", row.pass}});
  }
  nlohmann::json fourth = nlohmann::json::array();
  for (const auto& row : r.fourth_order_rows) {
    fourth.push_back({{"moment", row.moment},
                      {"form", row.form},
                      {"max_rel_error", row.max_rel_error},
                      {"verdict", row.verdict}});
  }
  nlohmann::json poly = nlohmann::json::array();
  for (const auto& row : r.polynomial_rows) {
    poly.push_back({{"family", "sahai_ray"},
                    {"w", row.w},
                    {"quantity", row.quantity},
                    {"max_rel_error", row.max_rel_error},
                    {"pass", row.pass},
                    {"gating", row.gating}});
  }
  j = nlohmann::json{{"populations", r.populations},
                     {"lemma_exactness", std::move(lemma)},
                     {"fourth_order_audit", std::move(fourth)},
                     {"polynomial_exactness", std::move(poly)},
                     {"lemma_pass", r.lemma_pass()},
                     {"fourth_order_pass", r.fourth_order_pass()},
                     {"polynomial_pass", r.polynomial_pass()}};
}

std::string format_lemma_sweep(const LemmaSweepResult& r) {
  std::string out = fmt::format("Lemma exactness over {} populations (tolerance {:.0e})\n", r.populations,
                                LemmaSweepResult::kLemmaTolerance);
  for (const auto& row : r.lemma_rows) {
    out += fmt::format("  E[e0^{} e1^{}]  max rel error {:.3e}  {}\n", row.a, row.b, row.max_rel_error,
                       row.pass ? "pass" : "FAIL");
  }
  out += "Fourth-order audit\n";
  for (const auto& row : r.fourth_order_rows) {
    out += fmt::format("  {:<13} {:<42} max rel error {:.3e}  {}\n", row.moment, row.form, row.max_rel_error,
                       row.verdict);
  }
  out += "Polynomial exactness, t3 with enumerated moments\n";
  for (const auto& row : r.polynomial_rows) {
    out += fmt::format("  w={} {:<5} max rel error {:.3e}  {}{}\n", row.w, row.quantity, row.max_rel_error,
                       row.pass ? "pass" : "FAIL", row.gating ? "" : " (informational: degree-4 truncation)");
  }
  return out;
}

}  // namespace srsattr
