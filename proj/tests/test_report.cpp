#include <cmath>
#include <filesystem>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "srsattr/errors.hpp"
#include "srsattr/report.hpp"
#include "test_support.hpp"

using namespace srsattr;
using nlohmann::json;
using srsattr::testing::close_rel;
using srsattr::testing::data_path;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.input = data_path("tiny.csv");
  cfg.n = 2;
  return cfg;
}

}  // namespace

TEST_CASE("spec_from_params fills neutral defaults") {
  const auto kr = std::get<KhoshnevisanRatio>(spec_from_params(Family::KhoshnevisanRatio, {{"beta", 0.4}}));
  CHECK(kr.g == 1.0);
  CHECK(kr.beta == 0.4);
  const auto s = std::get<Solanki>(spec_from_params(Family::Solanki, {{"lambda", 0.5}}));
  CHECK(s.delta == 0.0);
  CHECK(std::get<SahaiRay>(spec_from_params(Family::SahaiRay, {})).w == 0.0);
}

TEST_CASE("analyze with enumerated moments reproduces the exact tiny-population values") {
  RunConfig cfg = tiny_config();
  cfg.families = {Family::SahaiRay};
  cfg.params = {{"w", 1.0}};
  cfg.provider = ProviderKind::Enumerate;
  const Report rep = cmd_analyze(cfg);
  CHECK(rep.exit_code == kExitOk);
  const json& row = rep.json.at("rows").at(0);
  CHECK(row.at("engine").at("bias2").get<double>() == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(row.at("engine").at("mse2").get<double>() == doctest::Approx(7.0 / 6.0).epsilon(1e-13));
  CHECK(row.at("engine").at("mse1").get<double>() == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
  CHECK(rep.json.at("version") == std::string(tool_version()));
  CHECK(rep.json.at("config").at("seed") == cfg.seed);
  CHECK(rep.json.at("input").at("sha256").get<std::string>().size() == 64);
  CHECK(rep.render(OutputFormat::Text).find("t3") != std::string::npos);
}

TEST_CASE("analyze with neutral parameters shows only the sample-mean variance") {
  std::mt19937_64 rng(41);
  const Population pop = srsattr::testing::random_population(rng, 40, 12);
  std::ostringstream os;
  write_population(os, pop);
  RunConfig cfg;
  cfg.input = srsattr::testing::write_file("neutral.csv", os.str());
  cfg.n = 8;
  const Report rep = cmd_analyze(cfg);
  const double Y = pop.ybar();
  const MomentSet ms = moments(pop);
  const auto dc = design_coefficients(40, 8);
  REQUIRE(rep.json.at("rows").size() == 4);
  for (const auto& row : rep.json.at("rows")) {
    CHECK(row.at("engine").at("bias1").get<double>() == 0.0);
    CHECK(row.at("engine").at("bias2").get<double>() == 0.0);
    CHECK(row.at("engine").at("mse1").get<double>() == doctest::Approx(Y * Y * dc.l1 * ms.c(0, 2)).epsilon(1e-13));
  }
}

TEST_CASE("analyze at the first-order optimum gives one MSE for every family") {
  std::mt19937_64 rng(42);
  const Population pop = srsattr::testing::random_population(rng, 60, 20);
  std::ostringstream os;
  write_population(os, pop);
  RunConfig cfg;
  cfg.input = srsattr::testing::write_file("optimal.csv", os.str());
  cfg.n = 12;
  cfg.optimal = true;
  cfg.order = 1;
  const Report rep = cmd_analyze(cfg);
  const double floor = rep.json.at("regression_mse").get<double>();
  for (const auto& row : rep.json.at("rows")) CHECK(close_rel(row.at("engine").at("mse1").get<double>(), floor, 1e-10));
}

TEST_CASE("reports are byte-identical across runs") {
  RunConfig cfg = tiny_config();
  cfg.params = {{"alpha", 0.5}, {"w", 0.7}};
  CHECK(cmd_analyze(cfg).render(OutputFormat::Json) == cmd_analyze(cfg).render(OutputFormat::Json));
  CHECK(cmd_optimize(cfg).render(OutputFormat::Json) == cmd_optimize(cfg).render(OutputFormat::Json));
  cfg.replicates = 2000;
  cfg.threads = 2;
  const auto a = cmd_simulate(cfg).render(OutputFormat::Json);
  cfg.threads = 1;
  CHECK(a == cmd_simulate(cfg).render(OutputFormat::Json));
}

TEST_CASE("optimize lists first- and second-order rows per family") {
  RunConfig cfg = tiny_config();
  cfg.grid2d = true;
  cfg.bracket_lo = -2.0;
  cfg.bracket_hi = 2.0;
  const Report rep = cmd_optimize(cfg);
  CHECK(rep.json.at("rows").size() == 8);
  CHECK(rep.json.contains("solanki_grid"));
  for (const auto& row : rep.json.at("rows")) {
    if (row.at("order") == 1) CHECK(row.at("theta_star").get<double>() == doctest::Approx(0.4));
  }
}

TEST_CASE("simulate reports z-scores and honours the degenerate policy") {
  RunConfig cfg = tiny_config();
  cfg.families = {Family::SahaiRay};
  cfg.params = {{"w", 1.0}};
  cfg.replicates = 100'000;
  const Report rep = cmd_simulate(cfg);
  const json& row = rep.json.at("rows").at(0);
  // bias2 equals the exact bias for this estimator; the lemma-based mse2 does not
  // (the cross fourth moment form is not exact), so only the bias is checked.
  CHECK(row.at("z_bias2").get<double>() < 4.0);
  CHECK(row.at("simulation").at("seed") == cfg.seed);

  cfg.families = {Family::Chakrabarty};
  cfg.params = {{"alpha", 1.0}};
  cfg.policy = DegeneratePolicy::Abort;
  CHECK_THROWS_AS(cmd_simulate(cfg), DegenerateSample);
  CHECK_THROWS_AS(cmd_enumerate(cfg), DegenerateSample);
  cfg.policy = DegeneratePolicy::Skip;
  const Report skipped = cmd_simulate(cfg);
  CHECK(skipped.json.at("rows").at(0).at("simulation").at("degenerate_count").get<std::uint64_t>() > 0);
  CHECK(skipped.text.find("WARNING") != std::string::npos);
}

TEST_CASE("enumerate cross-checks moments and exact values") {
  RunConfig cfg = tiny_config();
  cfg.families = {Family::SahaiRay};
  cfg.params = {{"w", 1.0}};
  const Report rep = cmd_enumerate(cfg);
  CHECK(rep.json.at("subsets") == 6);
  const json& row = rep.json.at("rows").at(0);
  CHECK(row.at("exact_bias").get<double>() == doctest::Approx(-1.0 / 3.0));
  CHECK(row.at("exact_mse").get<double>() == doctest::Approx(7.0 / 6.0));
  for (const auto& m : rep.json.at("moments")) {
    if (m.at("a").get<int>() + m.at("b").get<int>() <= 3) {
      CHECK(std::abs(m.at("enumerated").get<double>() - m.at("lemma").get<double>()) < 1e-14);
    }
  }
  cfg.enumeration_cap = 3;
  CHECK_THROWS_AS(cmd_enumerate(cfg), EnumerationTooLarge);
}

TEST_CASE("verify on the bundled sweep, a single file and a directory") {
  RunConfig cfg;
  const Report rep = cmd_verify(cfg);
  CHECK(rep.exit_code == kExitOk);
  CHECK(rep.json.at("pass") == true);
  const auto& mismatched = rep.json.at("discrepancy").at("mismatched_equations");
  CHECK(std::find(mismatched.begin(), mismatched.end(), "4.1") != mismatched.end());
  CHECK(rep.text.find("verification PASSED") != std::string::npos);

  const auto dir = srsattr::testing::scratch_dir() / "verify_dir";
  std::filesystem::create_directories(dir);
  std::filesystem::copy_file(data_path("tiny.csv"), dir / "a.csv", std::filesystem::copy_options::overwrite_existing);
  std::mt19937_64 rng(43);
  std::ostringstream os;
  write_population(os, srsattr::testing::random_population(rng, 9, 4));
  std::ofstream(dir / "b.csv") << os.str();
  cfg.input = dir;
  cfg.n = 2;
  const Report from_dir = cmd_verify(cfg);
  CHECK(from_dir.json.at("sources").size() == 2);
  CHECK(from_dir.exit_code == kExitOk);

  cfg.input = data_path("tiny.csv");
  CHECK(cmd_verify(cfg).json.at("sources").size() == 1);

  const auto empty = srsattr::testing::scratch_dir() / "empty_dir";
  std::filesystem::create_directories(empty);
  cfg.input = empty;
  CHECK_THROWS_AS(cmd_verify(cfg), Error);
}

TEST_CASE("synthetic populations hit their targets exactly") {
  const auto params = synth_params_for_correlation(200, 0.25, 0.6, 10.0, 3.0, 7);
  const Population a = synthesize_population(params);
  const Population b = synthesize_population(params);
  CHECK(a.attribute_count() == 50);
  CHECK(a.ybar() == doctest::Approx(10.0).epsilon(1e-12));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.y()[i] == b.y()[i]);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Population p = synthesize_population(synth_params_for_correlation(300, 0.2, 0.6, 10.0, 3.0, seed));
    CHECK(std::abs(point_biserial(p) - 0.6) < 0.05);
    CHECK(point_biserial(p) == doctest::Approx(0.6).epsilon(1e-10));
  }
  CHECK(synthesize_population(synth_params_for_correlation(200, 0.25, 0.6, 10.0, 3.0, 8)).y()[0] != a.y()[0]);
  CHECK_THROWS_AS(synth_params_for_correlation(200, 0.001, 0.6, 10.0, 3.0, 1), Error);
  CHECK_THROWS_AS(synth_params_for_correlation(200, 0.25, 1.0, 10.0, 3.0, 1), Error);
}

TEST_CASE("file digests") {
  const auto path = srsattr::testing::write_file("abc.txt", "abc");
  CHECK(file_sha256(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(file_sha256(srsattr::testing::scratch_dir() / "missing"), Error);
}
