// srsattr: ratio-type estimators of a finite-population mean with a binary
// auxiliary attribute. See README.md for the subcommands.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srsattr/errors.hpp"
#include "srsattr/report.hpp"

namespace {

using srsattr::RunConfig;

struct CliState {
  RunConfig cfg;
  std::size_t n = 0;
  std::vector<std::string> families;
  std::vector<std::string> params;
  std::string bracket = "-5:5";
  std::string provider = "lemma";
  std::string policy = "skip";
  std::string format = "text";
  std::string output;
  std::string input;
};

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw srsattr::Error("cannot parse " + what + " '" + text + "'");
  }
  return v;
}

void add_common(CLI::App* sub, CliState& st) {
  sub->add_option("--input", st.input, "Population file (y,phi) or, for verify, a directory");
  sub->add_option("--n", st.n, "Sample size");
  sub->add_option("--family", st.families, "Estimator family: chakrabarty|khoshnevisan|sahai_ray|solanki or t1..t4")
      ->take_all();
  sub->add_option("--param", st.params, "Estimator parameter k=v (alpha, g, beta, w, lambda, delta)");
  sub->add_flag("--optimal", st.cfg.optimal, "Use optimal parameters of the chosen --order");
  sub->add_option("--order", st.cfg.order, "Approximation order used by --optimal")->check(CLI::IsMember({1, 2}));
  sub->add_option("--provider", st.provider, "Moment provider")->check(CLI::IsMember({"lemma", "enumerate"}));
  sub->add_option("--seed", st.cfg.seed, "Random seed");
  sub->add_option("--replicates", st.cfg.replicates, "Monte Carlo replicates");
  sub->add_option("--bracket", st.bracket, "Search bracket LO:HI");
  sub->add_option("--tol", st.cfg.tol, "Golden-section tolerance");
  sub->add_option("--policy", st.policy, "Degenerate-sample policy")->check(CLI::IsMember({"skip", "abort"}));
  sub->add_option("--format", st.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  sub->add_option("--output", st.output, "Write the report to PATH instead of stdout");
  sub->add_option("--threads", st.cfg.threads, "Worker threads for simulate (0 = all cores)");
  sub->add_option("--cap", st.cfg.enumeration_cap, "Enumeration cap on C(N, n)");
}

void finalize(CliState& st, bool requires_n) {
  RunConfig& cfg = st.cfg;
  cfg.input = st.input;
  if (st.n > 0) cfg.n = st.n;
  if (requires_n && !cfg.n) throw srsattr::Error("--n is required");
  for (const auto& f : st.families) cfg.families.push_back(srsattr::parse_family(f));
  for (const auto& kv : st.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw srsattr::Error("--param expects k=v, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    static const char* const known[] = {"alpha", "g", "beta", "w", "lambda", "delta"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw srsattr::Error("unknown parameter '" + key + "'");
    }
    cfg.params[key] = parse_double(kv.substr(eq + 1), "parameter " + key);
  }
  const auto colon = st.bracket.find(':');
  if (colon == std::string::npos) throw srsattr::Error("--bracket expects LO:HI");
  cfg.bracket_lo = parse_double(st.bracket.substr(0, colon), "bracket low end");
  cfg.bracket_hi = parse_double(st.bracket.substr(colon + 1), "bracket high end");
  if (!(cfg.bracket_lo < cfg.bracket_hi)) throw srsattr::Error("--bracket needs LO < HI");
  if (!(cfg.tol > 0.0)) throw srsattr::Error("--tol must be positive");
  cfg.provider = st.provider == "lemma" ? srsattr::ProviderKind::Lemma : srsattr::ProviderKind::Enumerate;
  cfg.policy = srsattr::parse_policy(st.policy);
  cfg.format = st.format == "json" ? srsattr::OutputFormat::Json : srsattr::OutputFormat::Text;
}

int emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << output << "\n";
    return srsattr::kExitUsage;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ratio-type estimators with a binary auxiliary attribute under SRSWOR"};
  app.set_version_flag("--version", std::string(srsattr::tool_version()));
  app.require_subcommand(1);

  CliState st;
  auto* analyze = app.add_subcommand("analyze", "First- and second-order bias/MSE, engine and printed formulas");
  auto* optimize = app.add_subcommand("optimize", "First-order closed-form and second-order numerical optima");
  auto* simulate = app.add_subcommand("simulate", "Seeded Monte Carlo against the model approximations");
  auto* enumerate = app.add_subcommand("enumerate", "Exact bias/MSE over every SRSWOR subset");
  auto* verify = app.add_subcommand("verify", "Lemma-vs-enumeration sweep and printed-formula audit");
  for (auto* sub : {analyze, optimize, simulate, enumerate, verify}) add_common(sub, st);
  optimize->add_flag("--grid2d", st.cfg.grid2d, "Also scan t4 over (lambda, delta) in the bracket squared");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic population file");
  std::size_t synth_n = 200;
  double synth_p = 0.25;
  std::uint64_t synth_seed = 1;
  double rho = 0.6, mean = 10.0, sd = 3.0;
  double mean0 = 0.0, sd0 = 0.0, mean1 = 0.0, sd1 = 0.0;
  std::string synth_output;
  synth->add_option("--N", synth_n, "Population size")->check(CLI::Range(4, 100'000'000));
  synth->add_option("--P", synth_p, "Attribute proportion; round(N P) units carry it")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--rho", rho, "Target point-biserial correlation");
  synth->add_option("--mean", mean, "Overall mean of y");
  synth->add_option("--sd", sd, "Within-group standard deviation of y");
  auto* m0 = synth->add_option("--mean0", mean0, "Mean of y when phi=0 (overrides --rho)");
  auto* s0 = synth->add_option("--sd0", sd0, "Sd of y when phi=0");
  auto* m1 = synth->add_option("--mean1", mean1, "Mean of y when phi=1");
  auto* s1 = synth->add_option("--sd1", sd1, "Sd of y when phi=1");
  m0->needs(s0, m1, s1);
  synth->add_option("--output", synth_output, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : srsattr::kExitUsage;
  }

  try {
    if (synth->parsed()) {
      srsattr::SynthParams params =
          *m0 ? srsattr::SynthParams{synth_n, synth_p, synth_seed, mean0, sd0, mean1, sd1}
              : srsattr::synth_params_for_correlation(synth_n, synth_p, rho, mean, sd, synth_seed);
      const srsattr::Population pop = srsattr::synthesize_population(params);
      std::ostringstream os;
      srsattr::write_population(os, pop);
      return emit(os.str(), synth_output);
    }

    srsattr::Report report;
    if (analyze->parsed()) {
      finalize(st, true);
      report = srsattr::cmd_analyze(st.cfg);
    } else if (optimize->parsed()) {
      finalize(st, true);
      report = srsattr::cmd_optimize(st.cfg);
    } else if (simulate->parsed()) {
      finalize(st, true);
      report = srsattr::cmd_simulate(st.cfg);
    } else if (enumerate->parsed()) {
      finalize(st, true);
      report = srsattr::cmd_enumerate(st.cfg);
    } else if (verify->parsed()) {
      finalize(st, false);
      report = srsattr::cmd_verify(st.cfg);
    }
    const int io = emit(report.render(st.cfg.format), st.output);
    return io != 0 ? io : report.exit_code;
  } catch (const srsattr::DegenerateSample& e) {
    std::cerr << "error: degenerate sample: " << e.what() << "\n";
    return srsattr::kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return srsattr::kExitUsage;
  }
}
