#include <cmath>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "srsattr/expansion.hpp"
#include "srsattr/population.hpp"
#include "srsattr/sampling.hpp"
#include "test_support.hpp"

using namespace srsattr;
using srsattr::testing::close_rel;
using srsattr::testing::data_path;

namespace {

// Exact bias and MSE of an estimator by walking every subset directly, plus
// E[g(e0, e1)] for an arbitrary polynomial g; no library enumeration code involved.
struct Walk {
  double bias = 0.0;
  double mse = 0.0;
};

template <class F>
double subset_mean(const Population& pop, std::size_t n, F&& f) {
  const std::size_t N = pop.size();
  double total = 0.0;
  std::size_t count = 0;
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
    double sy = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (mask & (1u << i)) {
        sy += pop.y()[i];
        sp += pop.phi()[i];
      }
    }
    const double e0 = (sy / n - pop.ybar()) / pop.ybar();
    const double e1 = (sp / n - pop.proportion()) / pop.proportion();
    total += f(e0, e1);
    ++count;
  }
  return total / count;
}

Walk walk_sahai_ray(const Population& pop, std::size_t n, double w) {
  const double Y = pop.ybar();
  const auto err = [&](double e0, double e1) { return Y * (1 + e0) * (2 - std::pow(1 + e1, w)) - Y; };
  return {subset_mean(pop, n, err), subset_mean(pop, n, [&](double e0, double e1) { return err(e0, e1) * err(e0, e1); })};
}

}  // namespace

TEST_CASE("lemma-based provider mapping") {
  std::mt19937_64 rng(3);
  const Population pop = srsattr::testing::random_population(rng, 40, 13);
  const MomentSet ms = moments(pop);
  const auto dc = design_coefficients(40, 9);
  const auto mp = MomentProvider::lemma_based(ms, dc);
  CHECK(mp.expect(0, 0) == 1.0);
  CHECK(mp.expect(1, 0) == 0.0);
  CHECK(mp.expect(0, 1) == 0.0);
  CHECK(mp.expect(0, 2) == dc.l1 * ms.c(2, 0));
  CHECK(mp.expect(2, 0) == dc.l1 * ms.c(0, 2));
  CHECK(mp.expect(1, 1) == dc.l1 * ms.c(1, 1));
  CHECK(mp.expect(1, 2) == dc.l2 * ms.c(2, 1));
  CHECK(mp.expect(2, 1) == dc.l2 * ms.c(1, 2));
  CHECK(mp.expect(0, 3) == dc.l2 * ms.c(3, 0));
  CHECK(mp.expect(0, 4) == doctest::Approx(dc.l3 * ms.c(4, 0) + 3 * dc.l4 * ms.c(2, 0) * ms.c(2, 0)));
  CHECK(mp.expect(1, 3) == doctest::Approx(dc.l3 * ms.c(3, 1) + 3 * dc.l4 * ms.c(2, 0) * ms.c(1, 1)));
  CHECK(mp.expect(2, 2) == doctest::Approx(dc.l3 * ms.c(2, 2) +
                                           3 * dc.l4 * (ms.c(2, 0) * ms.c(0, 2) + ms.c(1, 1) * ms.c(1, 1))));
  const auto polar = MomentProvider::lemma_based(ms, dc, CrossForm::Polarized);
  CHECK(polar.expect(2, 2) == doctest::Approx(dc.l3 * ms.c(2, 2) +
                                              dc.l4 * (ms.c(2, 0) * ms.c(0, 2) + 2 * ms.c(1, 1) * ms.c(1, 1))));
  CHECK_THROWS(mp.expect(3, 2));
}

TEST_CASE("first-order engine on the tiny population") {
  const Population pop = load_population(data_path("tiny.csv"));
  const auto mp = MomentProvider::lemma_based(moments(pop), design_coefficients(4, 2));
  const auto fo = bias_mse_first_order(SahaiRay{1.0}, mp);
  CHECK(fo.mse == doctest::Approx(6.25 / 3.0 * (0.2 + 1.0 - 0.8)).epsilon(1e-14));
  CHECK(fo.bias == doctest::Approx(-2.5 / 3.0 * 0.4).epsilon(1e-14));
}

TEST_CASE("second-order engine against exhaustive enumeration on the tiny population") {
  const Population pop = load_population(data_path("tiny.csv"));
  const auto mp = enumerated_provider(pop, 2);
  CHECK(bias_second_order(SahaiRay{1.0}, mp) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(mse_second_order(SahaiRay{1.0}, mp) == doctest::Approx(7.0 / 6.0).epsilon(1e-13));
  const Walk w1 = walk_sahai_ray(pop, 2, 1.0);
  CHECK(w1.bias == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(w1.mse == doctest::Approx(7.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("neutral parameters leave only the sample-mean variance") {
  std::mt19937_64 rng(8);
  const Population pop = srsattr::testing::random_population(rng, 25, 7);
  const MomentSet ms = moments(pop);
  const auto dc = design_coefficients(25, 6);
  const auto mp = MomentProvider::lemma_based(ms, dc);
  for (Family f : kAllFamilies) {
    const auto r = approximate(neutral_spec(f), mp);
    CHECK(r.bias1 == 0.0);
    CHECK(r.bias2 == 0.0);
    CHECK(r.mse1 == doctest::Approx(ms.ybar() * ms.ybar() * dc.l1 * ms.c(0, 2)).epsilon(1e-14));
    CHECK(r.mse2 == doctest::Approx(ms.ybar() * ms.ybar() * mp.expect(2, 0)).epsilon(1e-14));
  }
}

TEST_CASE("Chakrabarty second-order bias in closed form") {
  std::mt19937_64 rng(9);
  const Population pop = srsattr::testing::random_population(rng, 30, 11);
  const MomentSet m = moments(pop);
  const auto d = design_coefficients(30, 8);
  const auto mp = MomentProvider::lemma_based(m, d);
  for (double alpha : {-0.7, 0.3, 1.0, 2.2}) {
    const double want = alpha * m.ybar() *
                        (d.l1 * m.c(2, 0) - d.l1 * m.c(1, 1) - d.l2 * m.c(3, 0) + d.l2 * m.c(2, 1) +
                         (d.l3 * m.c(4, 0) + 3 * d.l4 * m.c(2, 0) * m.c(2, 0)) -
                         (d.l3 * m.c(3, 1) + 3 * d.l4 * m.c(2, 0) * m.c(1, 1)));
    CHECK(close_rel(bias_second_order(Chakrabarty{alpha}, mp), want, 1e-12));
  }
  CHECK(mse_second_order(Chakrabarty{1.0}, mp) ==
        doctest::Approx(mse_second_order(KhoshnevisanRatio{1.0, 1.0}, mp)).epsilon(1e-14));
}

TEST_CASE("polynomial estimators are reproduced exactly by the truncated series") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t N = std::uniform_int_distribution<std::size_t>(6, 12)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, N - 2)(rng);
    const std::size_t carriers = std::uniform_int_distribution<std::size_t>(1, N - 1)(rng);
    const Population pop = srsattr::testing::random_population(rng, N, carriers);
    const auto mp = enumerated_provider(pop, n);

    for (double w : {0.0, 1.0, 2.0}) {
      const Walk truth = walk_sahai_ray(pop, n, w);
      CHECK(close_rel(bias_second_order(SahaiRay{w}, mp), truth.bias, 1e-10, 1e-14));
      if (w < 2.0) CHECK(close_rel(mse_second_order(SahaiRay{w}, mp), truth.mse, 1e-10));
    }
    const Walk neutral = walk_sahai_ray(pop, n, 0.0);
    CHECK(close_rel(mse_second_order(Chakrabarty{0.0}, mp), neutral.mse, 1e-10));

    // At w = 2 the error is e0 - 2e1 - e1^2 - 2e0e1 - e0e1^2; its square carries
    // 2e0e1^4 + 4e0^2e1^3 + e0^2e1^4 beyond degree 4, which is exactly what the
    // truncated MSE misses.
    const Walk w2 = walk_sahai_ray(pop, n, 2.0);
    const double Y2 = pop.ybar() * pop.ybar();
    const double dropped = Y2 * subset_mean(pop, n, [](double e0, double e1) {
                             return 2 * e0 * std::pow(e1, 4) + 4 * e0 * e0 * std::pow(e1, 3) +
                                    e0 * e0 * std::pow(e1, 4);
                           });
    CHECK(close_rel(mse_second_order(SahaiRay{2.0}, mp) + dropped, w2.mse, 1e-10));
  }
}

TEST_CASE("bias2 - bias1 shrinks like the second-order design coefficients") {
  // Replicating every unit k times keeps every C_pq, so only L1..L4 move.
  std::mt19937_64 rng(12);
  const Population base = srsattr::testing::random_population(rng, 100, 30);
  const auto replicate = [&](std::size_t k) {
    std::vector<double> y;
    std::vector<std::uint8_t> phi;
    for (std::size_t r = 0; r < k; ++r) {
      y.insert(y.end(), base.y().begin(), base.y().end());
      phi.insert(phi.end(), base.phi().begin(), base.phi().end());
    }
    return Population(std::move(y), std::move(phi));
  };
  const Solanki spec{0.8, 0.5};
  for (std::size_t k : {10, 100, 1000}) {
    const Population pop = replicate(k);
    const MomentSet ms = moments(pop);
    CHECK(close_rel(ms.c(2, 2), moments(base).c(2, 2), 1e-9));
    double previous = 0.0;
    for (std::size_t n : {20, 40, 80}) {
      const auto dc = design_coefficients(pop.size(), n);
      const auto mp = MomentProvider::lemma_based(ms, dc);
      const double gap = std::abs(bias_second_order(spec, mp) - bias_mse_first_order(spec, mp).bias);
      // Leading terms are L2 ~ 1/n^2 and L4 ~ 1/n^2; L3 ~ 1/n^3 is smaller still.
      CHECK(gap < 20.0 * ms.ybar() / (static_cast<double>(n) * n));
      if (previous > 0.0) {
        const double ratio = previous / gap;
        CHECK(ratio > 3.0);
        CHECK(ratio < 8.5);
      }
      previous = gap;
    }
  }
}

TEST_CASE("printed first-order formulas") {
  std::mt19937_64 rng(13);
  const Population pop = srsattr::testing::random_population(rng, 50, 12);
  const MomentSet m = moments(pop);
  const auto d = design_coefficients(50, 10);
  const double Y = m.ybar();
  const auto p1 = as_printed(Chakrabarty{0.7}, m, d, 1);
  CHECK(p1.bias1 == doctest::Approx(Y * (0.35 * d.l1 * m.c(2, 0) - 0.7 * d.l1 * m.c(1, 1))));
  CHECK(std::isnan(p1.bias2));
  CHECK(std::isnan(p1.mse2));
  CHECK(p1.method == Method::AsPrinted);
  const auto p2 = as_printed(KhoshnevisanRatio{1.5, 0.4}, m, d, 1);
  CHECK(p2.mse1 == doctest::Approx(Y * Y * (d.l1 * m.c(0, 2) + 2.25 * 0.16 * d.l1 * m.c(2, 0) - 1.2 * d.l1 * m.c(1, 1))));
  const double k = 1.25;
  const auto p4 = as_printed(Solanki{1.0, 0.5}, m, d, 2);
  const double q31 = d.l3 * m.c(3, 1) + 3 * d.l4 * m.c(2, 0) * m.c(1, 1);
  const double q22 = d.l3 * m.c(2, 2) + 3 * d.l4 * (m.c(2, 0) * m.c(0, 2) + m.c(1, 1) * m.c(1, 1));
  const double q40 = d.l3 * m.c(4, 0) + 3 * d.l4 * m.c(2, 0) * m.c(2, 0);
  const double want = Y * Y *
                      (d.l1 * m.c(0, 2) + k * k * d.l1 * m.c(2, 0) - 2 * k * d.l1 * m.c(1, 1) + k * d.l2 * m.c(2, 1) -
                       2 * k * d.l2 * m.c(1, 2) + k * k * (k - 1) * d.l2 * m.c(3, 0) + 2 * k * k * (k - 1) * q31 +
                       k * q22 + (k * k - k) * (k * k - k) / 4 * q40);
  CHECK(p4.mse2 == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("printed t4 constants under both readings of the stray symbol") {
  const Solanki s{1.0, 2.0};
  const auto lam = printed_solanki_constants(s, AlphaReading::AsLambda);
  const auto zero = printed_solanki_constants(s, AlphaReading::AsZero);
  // M = (1/2){(d^3 - 6d^2)/24 + a(d^2 - 2d)/4 + l(l-1)d/2 + l(l-1)(l-2)/3}; the a-term vanishes at d = 2.
  CHECK(lam.m == doctest::Approx(0.5 * ((8.0 - 24.0) / 24.0)));
  CHECK(zero.m == doctest::Approx(lam.m));
  // N = (1/8){(d^4 - 12d^3 + 12d^2)/48 + a(d^3 - 6d)/6 + l(l-1)(d^2-2d)/2 + l(l-1)(l-2)(l-3)/3}
  CHECK(lam.n == doctest::Approx((1.0 / 8.0) * ((16.0 - 96.0 + 48.0) / 48.0 + (8.0 - 12.0) / 6.0)));
  CHECK(zero.n == doctest::Approx((1.0 / 8.0) * ((16.0 - 96.0 + 48.0) / 48.0)));
}

TEST_CASE("discrepancy report verdicts") {
  std::mt19937_64 rng(14);
  const Population pop = srsattr::testing::random_population(rng, 60, 18);
  const MomentSet m = moments(pop);
  const auto d = design_coefficients(60, 12);
  const auto report = discrepancy_report(m, d, default_parameter_grid());

  for (const char* eq : {"4.6", "4.7", "4.8", "4.10", "4.3", "4.5"}) CHECK_MESSAGE(report.equation_matches(eq), eq);
  for (const char* eq : {"4.1", "4.2", "5.9"}) CHECK_MESSAGE(!report.equation_matches(eq), eq);
  CHECK(report.has_equation("5.6[alpha=0]"));
  const auto mismatched = report.mismatched_equations();
  CHECK(std::find(mismatched.begin(), mismatched.end(), "4.1") != mismatched.end());
  CHECK(std::find(mismatched.begin(), mismatched.end(), "4.6") == mismatched.end());

  // (4.1) at alpha = 1 is short by exactly Ybar (alpha/2) L1 C20.
  bool found = false;
  for (const auto& row : report.rows) {
    if (row.family == Family::Chakrabarty && row.parameter == "alpha=1" && row.quantity == "bias1") {
      found = true;
      CHECK(row.engine - row.printed == doctest::Approx(m.ybar() * 0.5 * d.l1 * m.c(2, 0)).epsilon(1e-12));
      CHECK_FALSE(row.match);
      CHECK(row.equation == "4.1");
      const nlohmann::json j = row;
      for (const char* key : {"family", "parameter", "quantity", "engine", "printed", "abs_diff", "rel_diff", "verdict",
                              "equation"}) {
        CHECK_MESSAGE(j.contains(key), key);
      }
    }
  }
  CHECK(found);
  CHECK(format_discrepancy_table(report).find("MISMATCH") != std::string::npos);
}

TEST_CASE("regression optimum is shared by every family at first order") {
  std::mt19937_64 rng(15);
  const Population pop = srsattr::testing::random_population(rng, 80, 20);
  const MomentSet m = moments(pop);
  const auto d = design_coefficients(80, 15);
  const auto mp = MomentProvider::lemma_based(m, d);
  const double theta = m.c(1, 1) / m.c(2, 0);
  const double floor = m.ybar() * m.ybar() * d.l1 * (m.c(0, 2) - m.c(1, 1) * m.c(1, 1) / m.c(2, 0));
  const EstimatorSpec at_opt[] = {Chakrabarty{theta}, KhoshnevisanRatio{1.0, theta}, KhoshnevisanRatio{2.0, theta / 2},
                                  SahaiRay{theta}, Solanki{theta, 0.0}, Solanki{0.0, 2 * theta}};
  for (const auto& s : at_opt) CHECK(close_rel(bias_mse_first_order(s, mp).mse, floor, 1e-10));
  for (double off : {-0.3, 0.2}) CHECK(bias_mse_first_order(SahaiRay{theta + off}, mp).mse > floor);
}
