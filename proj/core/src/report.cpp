#include "srsattr/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "srsattr/errors.hpp"
#include "srsattr/expansion.hpp"
#include "srsattr/optimizer.hpp"
#include "srsattr/verification.hpp"

#ifndef SRSATTR_VERSION
#define SRSATTR_VERSION "0.0.0"
#endif

namespace srsattr {

namespace {

using nlohmann::json;

struct LoadedInput {
  Population pop;
  std::string sha256;
};

LoadedInput load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error("--input is required");
  Population pop = load_population(cfg.input);
  return LoadedInput{std::move(pop), file_sha256(cfg.input)};
}

std::size_t require_n(const RunConfig& cfg, const Population& pop) {
  if (!cfg.n) throw Error("--n is required");
  if (*cfg.n < 1 || *cfg.n >= pop.size()) {
    throw InvariantError("n=" + std::to_string(*cfg.n) + " must satisfy 1 <= n < N=" + std::to_string(pop.size()));
  }
  return *cfg.n;
}

std::vector<Family> families_of(const RunConfig& cfg) {
  if (cfg.families.empty()) return {kAllFamilies.begin(), kAllFamilies.end()};
  return cfg.families;
}

double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

SearchOptions search_options(const RunConfig& cfg) {
  SearchOptions opt;
  opt.lo = cfg.bracket_lo;
  opt.hi = cfg.bracket_hi;
  opt.tol = cfg.tol;
  opt.g = param_or(cfg.params, "g", 1.0);
  return opt;
}

EstimatorSpec choose_spec(Family family, const RunConfig& cfg, const MomentSet& ms, const DesignCoefficients& dc) {
  if (!cfg.optimal) return spec_from_params(family, cfg.params);
  if (cfg.order == 1) return first_order_optimum(family, ms, dc, param_or(cfg.params, "g", 1.0)).spec;
  return second_order_optimum(family, ms, dc, search_options(cfg)).spec;
}

json header(const std::string& command, const RunConfig& cfg) {
  return json{{"tool", "srsattr"}, {"version", std::string(tool_version())}, {"command", command},
              {"config", config_echo(cfg)}};
}

json input_block(const RunConfig& cfg, const LoadedInput& in) {
  return json{{"path", cfg.input.string()},
              {"sha256", in.sha256},
              {"N", in.pop.size()},
              {"ybar", in.pop.ybar()},
              {"P", in.pop.proportion()}};
}

json design_block(const DesignCoefficients& dc) {
  return json{{"N", dc.population_size}, {"n", dc.sample_size}, {"L1", dc.l1},
              {"L2", dc.l2},             {"L3", dc.l3},         {"L4", dc.l4}};
}

json moments_block(const MomentSet& ms) {
  json out = json::object();
  for (int p = 0; p <= 4; ++p) {
    for (int q = 0; p + q <= 4; ++q) out[fmt::format("C{}{}", p, q)] = ms.c(p, q);
  }
  return out;
}

json approx_block(const ApproxResult& r) {
  return json{{"bias1", r.bias1}, {"mse1", r.mse1}, {"bias2", r.bias2}, {"mse2", r.mse2}};
}

std::string text_header(const std::string& command, const RunConfig& cfg, const std::string& sha) {
  std::string out = fmt::format("srsattr {} {}\n", tool_version(), command);
  if (!cfg.input.empty()) out += fmt::format("input  {}  sha256 {}\n", cfg.input.string(), sha);
  out += fmt::format("config {}\n", config_echo(cfg).dump());
  return out;
}

std::string design_line(const Population& pop, const DesignCoefficients& dc) {
  return fmt::format("N={} n={} Ybar={:.10g} P={:.10g}  L1={:.10g} L2={:.10g} L3={:.10g} L4={:.10g}\n", pop.size(),
                     dc.sample_size, pop.ybar(), pop.proportion(), dc.l1, dc.l2, dc.l3, dc.l4);
}

std::string_view provider_name(ProviderKind kind) { return kind == ProviderKind::Lemma ? "lemma" : "enumerate"; }

}  // namespace

std::string_view tool_version() noexcept { return SRSATTR_VERSION; }

nlohmann::json config_echo(const RunConfig& cfg) {
  json families = json::array();
  for (Family f : cfg.families) families.push_back(std::string(family_name(f)));
  return json{
      {"input", cfg.input.string()},
      {"n", cfg.n ? json(*cfg.n) : json(nullptr)},
      {"families", std::move(families)},
      {"params", cfg.params},
      {"optimal", cfg.optimal},
      {"order", cfg.order},
      {"provider", std::string(provider_name(cfg.provider))},
      {"seed", cfg.seed},
      {"replicates", cfg.replicates},
      {"bracket", {cfg.bracket_lo, cfg.bracket_hi}},
      {"tol", cfg.tol},
      {"policy", std::string(policy_name(cfg.policy))},
      {"grid2d", cfg.grid2d},
      {"enumeration_cap", cfg.enumeration_cap},
  };
}

std::string Report::render(OutputFormat format) const {
  if (format == OutputFormat::Json) return json.dump(2) + "\n";
  return text;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed for " + path.string());
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

EstimatorSpec spec_from_params(Family family, const std::map<std::string, double>& params) {
  switch (family) {
    case Family::Chakrabarty: return Chakrabarty{param_or(params, "alpha", 0.0)};
    case Family::KhoshnevisanRatio:
      return KhoshnevisanRatio{param_or(params, "g", 1.0), param_or(params, "beta", 0.0)};
    case Family::SahaiRay: return SahaiRay{param_or(params, "w", 0.0)};
    case Family::Solanki: return Solanki{param_or(params, "lambda", 0.0), param_or(params, "delta", 0.0)};
  }
  throw Error("unknown family");
}

Report cmd_analyze(const RunConfig& cfg) {
  const LoadedInput in = load_input(cfg);
  const std::size_t n = require_n(cfg, in.pop);
  const MomentSet ms = moments(in.pop);
  const DesignCoefficients dc = design_coefficients(in.pop.size(), n);
  const MomentProvider mp = cfg.provider == ProviderKind::Lemma
                                ? MomentProvider::lemma_based(ms, dc)
                                : enumerated_provider(in.pop, n, cfg.enumeration_cap);

  Report rep;
  rep.json = header("analyze", cfg);
  rep.json["input"] = input_block(cfg, in);
  rep.json["design"] = design_block(dc);
  rep.json["moments"] = moments_block(ms);
  rep.json["regression_mse"] = regression_mse(ms, dc);

  rep.text = text_header("analyze", cfg, in.sha256) + design_line(in.pop, dc);
  rep.text += fmt::format("provider {}  parameters {}\n\n", provider_name(cfg.provider),
                          cfg.optimal ? fmt::format("optimal (order {})", cfg.order) : std::string("as given"));
  rep.text += fmt::format("{:<4} {:<28} {:<8} {:>16} {:>16} {:>16} {:>16}\n", "", "", "", "Bias", "", "MSE", "");
  rep.text += fmt::format("{:<4} {:<28} {:<8} {:>16} {:>16} {:>16} {:>16}\n", "Est.", "Parameters", "Method",
                          "First order", "Second order", "First order", "Second order");

  json rows = json::array();
  for (Family family : families_of(cfg)) {
    const EstimatorSpec spec = choose_spec(family, cfg, ms, dc);
    const ApproxResult engine = approximate(spec, mp);
    const ApproxResult printed = as_printed(spec, ms, dc, 2);
    rows.push_back(json{{"family", std::string(family_name(family))},
                        {"label", std::string(family_label(family))},
                        {"estimator", spec},
                        {"engine", approx_block(engine)},
                        {"printed", approx_block(printed)}});
    const std::string params = describe(spec);
    rep.text += fmt::format("{:<4} {:<28} {:<8} {:>16.9g} {:>16.9g} {:>16.9g} {:>16.9g}\n", family_label(family),
                            params, "engine", engine.bias1, engine.bias2, engine.mse1, engine.mse2);
    rep.text += fmt::format("{:<4} {:<28} {:<8} {:>16.9g} {:>16.9g} {:>16.9g} {:>16.9g}\n", "", "", "printed",
                            printed.bias1, printed.bias2, printed.mse1, printed.mse2);
  }
  rep.json["rows"] = std::move(rows);
  rep.text += fmt::format("\nregression-optimum MSE (first order) {:.12g}\n", regression_mse(ms, dc));
  return rep;
}

Report cmd_optimize(const RunConfig& cfg) {
  const LoadedInput in = load_input(cfg);
  const std::size_t n = require_n(cfg, in.pop);
  const MomentSet ms = moments(in.pop);
  const DesignCoefficients dc = design_coefficients(in.pop.size(), n);
  const SearchOptions opt = search_options(cfg);

  Report rep;
  rep.json = header("optimize", cfg);
  rep.json["input"] = input_block(cfg, in);
  rep.json["design"] = design_block(dc);
  rep.json["regression_mse"] = regression_mse(ms, dc);
  rep.text = text_header("optimize", cfg, in.sha256) + design_line(in.pop, dc);
  rep.text += fmt::format("bracket [{}, {}]  tol {}  (t2 at g={}, t4 along delta=0)\n\n", opt.lo, opt.hi, opt.tol,
                          opt.g);
  rep.text += fmt::format("{:<4} {:>6} {:>16} {:>16} {:>18} {:>6}  {}\n", "Est.", "order", "parameter", "theta*",
                          "MSE at optimum", "iters", "note");

  json rows = json::array();
  for (Family family : families_of(cfg)) {
    const auto first = first_order_optimum(family, ms, dc, opt.g);
    const auto second = second_order_optimum(family, ms, dc, opt);
    for (const auto* r : {&first, &second}) {
      rows.push_back(json{{"family", std::string(family_name(family))},
                          {"order", r->order},
                          {"parameter", r->parameter},
                          {"theta_star", r->theta_star},
                          {"estimator", r->spec},
                          {"mse_at_optimum", r->mse_at_optimum},
                          {"bracket", {r->bracket_lo, r->bracket_hi}},
                          {"iterations", r->iterations},
                          {"boundary", r->boundary}});
      rep.text += fmt::format("{:<4} {:>6} {:>16.10g} {:>16.10g} {:>18.12g} {:>6}  {}\n", family_label(family), r->order,
                              r->parameter, r->theta_star, r->mse_at_optimum, r->iterations,
                              r->boundary ? "no interior minimum: bracket endpoint" : "");
    }
  }
  rep.json["rows"] = std::move(rows);
  if (cfg.grid2d) {
    const auto g2 = solanki_grid_optimum(ms, dc, opt.lo, opt.hi);
    rep.json["solanki_grid"] = json{{"lambda", g2.lambda}, {"delta", g2.delta}, {"mse", g2.mse}};
    rep.text += fmt::format("\nt4 two-parameter grid: lambda={:.6g} delta={:.6g} MSE={:.12g}\n", g2.lambda, g2.delta,
                            g2.mse);
  }
  return rep;
}

Report cmd_simulate(const RunConfig& cfg) {
  const LoadedInput in = load_input(cfg);
  const std::size_t n = require_n(cfg, in.pop);
  const MomentSet ms = moments(in.pop);
  const DesignCoefficients dc = design_coefficients(in.pop.size(), n);
  const auto mp = MomentProvider::lemma_based(ms, dc);

  Report rep;
  rep.json = header("simulate", cfg);
  rep.json["input"] = input_block(cfg, in);
  rep.json["design"] = design_block(dc);
  rep.text = text_header("simulate", cfg, in.sha256) + design_line(in.pop, dc);
  rep.text += fmt::format("replicates {}  seed {}  policy {}\n\n", cfg.replicates, cfg.seed, policy_name(cfg.policy));
  rep.text += fmt::format("{:<4} {:<26} {:>13} {:>11} {:>13} {:>13} {:>8} {:>8} {:>13} {:>13} {:>13} {:>8} {:>8} {:>9}\n",
                          "Est.", "Parameters", "emp bias", "se", "bias1", "bias2", "z1", "z2", "emp MSE", "mse1",
                          "mse2", "z1", "z2", "degen.");

  json rows = json::array();
  for (Family family : families_of(cfg)) {
    const EstimatorSpec spec = choose_spec(family, cfg, ms, dc);
    const SimulationReport sim = simulate(in.pop, n, spec, cfg.replicates, cfg.seed, cfg.policy, cfg.threads);
    const ApproxResult model = approximate(spec, mp);
    const auto z = [](double emp, double model_value, double se) {
      return se > 0.0 ? std::abs(emp - model_value) / se : 0.0;
    };
    const double zb1 = z(sim.empirical_bias, model.bias1, sim.se_bias);
    const double zb2 = z(sim.empirical_bias, model.bias2, sim.se_bias);
    const double zm1 = z(sim.empirical_mse, model.mse1, sim.se_mse);
    const double zm2 = z(sim.empirical_mse, model.mse2, sim.se_mse);
    rows.push_back(json{{"family", std::string(family_name(family))},
                        {"simulation", sim},
                        {"model", approx_block(model)},
                        {"z_bias1", zb1},
                        {"z_bias2", zb2},
                        {"z_mse1", zm1},
                        {"z_mse2", zm2}});
    rep.text += fmt::format(
        "{:<4} {:<26} {:>13.6g} {:>11.4g} {:>13.6g} {:>13.6g} {:>8.3f} {:>8.3f} {:>13.6g} {:>13.6g} {:>13.6g} {:>8.3f} "
        "{:>8.3f} {:>9}\n",
        family_label(family), describe(spec), sim.empirical_bias, sim.se_bias, model.bias1, model.bias2, zb1, zb2,
        sim.empirical_mse, model.mse1, model.mse2, zm1, zm2, sim.degenerate_count);
    if (sim.degenerate_count > 0) {
      rep.text += fmt::format("     WARNING: {} of {} replicates were degenerate and skipped\n", sim.degenerate_count,
                              sim.replicates);
    }
  }
  rep.json["rows"] = std::move(rows);
  rep.text += "z = |empirical - model| / Monte Carlo standard error\n";
  return rep;
}

Report cmd_enumerate(const RunConfig& cfg) {
  const LoadedInput in = load_input(cfg);
  const std::size_t n = require_n(cfg, in.pop);
  const MomentSet ms = moments(in.pop);
  const DesignCoefficients dc = design_coefficients(in.pop.size(), n);
  const MomentTable exact = exact_moment_table(in.pop, n, cfg.enumeration_cap);
  const auto mp = MomentProvider::enumerated(in.pop.ybar(), exact);

  Report rep;
  rep.json = header("enumerate", cfg);
  rep.json["input"] = input_block(cfg, in);
  rep.json["design"] = design_block(dc);
  rep.json["subsets"] = subset_count(in.pop.size(), n);
  rep.text = text_header("enumerate", cfg, in.sha256) + design_line(in.pop, dc);
  rep.text += fmt::format("subsets {}  policy {}\n\n", subset_count(in.pop.size(), n), policy_name(cfg.policy));

  json table = json::array();
  rep.text += fmt::format("{:<16} {:>18} {:>18}\n", "moment", "enumerated", "lemma");
  for (int a = 0; a <= 2; ++a) {
    for (int b = 0; a + b <= 4; ++b) {
      if (a + b < 2) continue;
      const double lemma = lemma_moment(ms, dc, a, b);
      table.push_back(json{{"a", a}, {"b", b}, {"enumerated", exact[a][b]}, {"lemma", lemma}});
      rep.text += fmt::format("E[e0^{} e1^{}]     {:>18.12g} {:>18.12g}\n", a, b, exact[a][b], lemma);
    }
  }
  rep.json["moments"] = std::move(table);

  rep.text += fmt::format("\n{:<4} {:<26} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>9}\n", "Est.", "Parameters",
                          "exact bias", "bias1", "bias2", "exact MSE", "mse1", "mse2", "degen.");
  json rows = json::array();
  for (Family family : families_of(cfg)) {
    const EstimatorSpec spec = choose_spec(family, cfg, ms, dc);
    const ExactResult truth = enumerate_exact(in.pop, n, spec, cfg.policy, cfg.enumeration_cap);
    const ApproxResult model = approximate(spec, mp);
    rows.push_back(json{{"family", std::string(family_name(family))},
                        {"estimator", spec},
                        {"exact_bias", truth.bias},
                        {"exact_mse", truth.mse},
                        {"degenerate_count", truth.degenerate_count},
                        {"engine_enumerated", approx_block(model)}});
    rep.text += fmt::format("{:<4} {:<26} {:>14.9g} {:>14.9g} {:>14.9g} {:>14.9g} {:>14.9g} {:>14.9g} {:>9}\n",
                            family_label(family), describe(spec), truth.bias, model.bias1, model.bias2, truth.mse,
                            model.mse1, model.mse2, truth.degenerate_count);
  }
  rep.json["rows"] = std::move(rows);
  return rep;
}

Report cmd_verify(const RunConfig& cfg) {
  std::vector<SweepCase> cases;
  json sources = json::array();
  if (cfg.input.empty()) {
    cases = bundled_sweep(20, cfg.seed);
    sources.push_back(json{{"bundled_sweep", 20}, {"seed", cfg.seed}});
  } else {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(cfg.input)) {
      for (const auto& entry : std::filesystem::directory_iterator(cfg.input)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw Error("no population files in " + cfg.input.string());
    } else {
      files.push_back(cfg.input);
    }
    for (const auto& f : files) {
      Population pop = load_population(f);
      const std::size_t n = cfg.n ? *cfg.n : std::clamp<std::size_t>(pop.size() / 3, 1, pop.size() - 1);
      if (n < 1 || n >= pop.size()) throw InvariantError(f.string() + ": n must satisfy 1 <= n < N");
      sources.push_back(json{{"path", f.string()}, {"sha256", file_sha256(f)}, {"n", n}});
      cases.push_back(SweepCase{std::move(pop), n});
    }
  }

  const LemmaSweepResult sweep = lemma_sweep(cases);
  const auto& first = cases.front();
  const DiscrepancyReport discrepancies =
      discrepancy_report(moments(first.pop), design_coefficients(first.pop.size(), first.sample_size),
                         default_parameter_grid());

  Report rep;
  rep.json = header("verify", cfg);
  rep.json["sources"] = std::move(sources);
  rep.json["sweep"] = sweep;
  json rows = json::array();
  for (const auto& r : discrepancies.rows) rows.push_back(r);
  rep.json["discrepancy"] = json{{"rows", std::move(rows)}, {"mismatched_equations", discrepancies.mismatched_equations()}};

  const bool ok = sweep.lemma_pass() && sweep.fourth_order_pass() && sweep.polynomial_pass();
  rep.json["pass"] = ok;
  rep.exit_code = ok ? kExitOk : kExitVerifyFailed;

  rep.text = text_header("verify", cfg, "");
  rep.text += format_lemma_sweep(sweep);
  rep.text += "\nPrinted-formula audit (first population, lemma-based engine)\n";
  rep.text += format_discrepancy_table(discrepancies);
  rep.text += fmt::format("\nverification {}\n", ok ? "PASSED" : "FAILED");
  return rep;
}

SynthParams synth_params_for_correlation(std::size_t population_size, double proportion, double rho, double mean,
                                         double sd, std::uint64_t seed) {
  if (!(rho > -1.0 && rho < 1.0)) throw Error("target correlation must lie in (-1, 1)");
  if (!(sd > 0.0)) throw Error("within-group sd must be positive");
  const double carriers = std::round(static_cast<double>(population_size) * proportion);
  const double p = carriers / static_cast<double>(population_size);
  if (!(p > 0.0 && p < 1.0)) throw Error("round(N P) must lie strictly between 0 and N");
  const double gap = rho * sd / std::sqrt(p * (1.0 - p) * (1.0 - rho * rho));
  SynthParams out;
  out.population_size = population_size;
  out.proportion = proportion;
  out.seed = seed;
  out.mean0 = mean - gap * p;
  out.mean1 = out.mean0 + gap;
  out.sd0 = sd;
  out.sd1 = sd;
  return out;
}

Population synthesize_population(const SynthParams& params) {
  const std::size_t N = params.population_size;
  const auto carriers = static_cast<std::size_t>(std::llround(static_cast<double>(N) * params.proportion));
  std::vector<std::uint8_t> phi(N, 0);
  std::fill_n(phi.begin(), std::min(carriers, N), 1);
  Rng rng(substream_seed(params.seed, 0));
  std::shuffle(phi.begin(), phi.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(N);
  for (auto& v : z) v = normal(rng);
  std::vector<double> y(N);
  for (int group = 0; group <= 1; ++group) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (phi[i] == group) {
        sum += z[i];
        ++count;
      }
    }
    if (count == 0) continue;
    const double center = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (phi[i] == group) ss += (z[i] - center) * (z[i] - center);
    }
    const double spread = std::sqrt(ss / static_cast<double>(count));
    const double mu = group == 0 ? params.mean0 : params.mean1;
    const double sd = group == 0 ? params.sd0 : params.sd1;
    for (std::size_t i = 0; i < N; ++i) {
      if (phi[i] == group) y[i] = mu + (spread > 0.0 ? sd * (z[i] - center) / spread : 0.0);
    }
  }
  return Population(std::move(y), std::move(phi));
}

double point_biserial(const Population& pop) {
  const double P = pop.proportion();
  const double Y = pop.ybar();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double dx = pop.phi()[i] - P;
    const double dy = pop.y()[i] - Y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace srsattr
