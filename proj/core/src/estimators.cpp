#include "srsattr/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "srsattr/errors.hpp"

namespace srsattr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_integer(double x) noexcept { return std::isfinite(x) && std::floor(x) == x; }

// base^exponent where base may be zero or negative; nullopt where the real power is undefined.
std::optional<double> real_power(double base, double exponent) noexcept {
  if (exponent == 0.0) return 1.0;
  if (base == 0.0) {
    if (exponent < 0.0 || !is_integer(exponent)) return std::nullopt;
    return 0.0;
  }
  if (base < 0.0 && !is_integer(exponent)) return std::nullopt;
  return std::pow(base, exponent);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Coefficients of u^lambda exp(delta (u-1)/(u+1)) around u = 1, obtained by
// exponentiating its logarithm  lambda log(1+e) + delta e / (2+e)  as a power series in e.
std::array<double, 5> solanki_series(double lambda, double delta) {
  std::array<double, 5> log_coef{};
  for (int m = 1; m <= 4; ++m) {
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    log_coef[m] = sign * (lambda / m + delta / std::ldexp(1.0, m));
  }
  std::array<double, 5> b{};
  b[0] = 1.0;
  for (int k = 1; k <= 4; ++k) {
    double acc = 0.0;
    for (int m = 1; m <= k; ++m) acc += m * log_coef[m] * b[k - m];
    b[k] = acc / k;
  }
  return b;
}

}  // namespace

Family family_of(const EstimatorSpec& spec) noexcept {
  return static_cast<Family>(spec.index());
}

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::Chakrabarty: return "chakrabarty";
    case Family::KhoshnevisanRatio: return "khoshnevisan";
    case Family::SahaiRay: return "sahai_ray";
    case Family::Solanki: return "solanki";
  }
  return "?";
}

std::string_view family_label(Family family) noexcept {
  switch (family) {
    case Family::Chakrabarty: return "t1";
    case Family::KhoshnevisanRatio: return "t2";
    case Family::SahaiRay: return "t3";
    case Family::Solanki: return "t4";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  const std::string key = lower(text);
  for (Family f : kAllFamilies) {
    if (key == family_name(f) || key == family_label(f)) return f;
  }
  if (key == "khoshnevisanratio" || key == "khoshnevisan_ratio") return Family::KhoshnevisanRatio;
  if (key == "sahairay" || key == "sahai-ray") return Family::SahaiRay;
  throw Error("unknown estimator family '" + std::string(text) + "'");
}

EstimatorSpec neutral_spec(Family family) {
  switch (family) {
    case Family::Chakrabarty: return Chakrabarty{0.0};
    case Family::KhoshnevisanRatio: return KhoshnevisanRatio{1.0, 0.0};
    case Family::SahaiRay: return SahaiRay{0.0};
    case Family::Solanki: return Solanki{0.0, 0.0};
  }
  throw Error("unknown estimator family");
}

std::string describe(const EstimatorSpec& spec) {
  std::ostringstream os;
  os.precision(10);
  std::visit(overloaded{
                 [&](const Chakrabarty& s) { os << "alpha=" << s.alpha; },
                 [&](const KhoshnevisanRatio& s) { os << "g=" << s.g << ", beta=" << s.beta; },
                 [&](const SahaiRay& s) { os << "w=" << s.w; },
                 [&](const Solanki& s) { os << "lambda=" << s.lambda << ", delta=" << s.delta; },
             },
             spec);
  return os.str();
}

void to_json(nlohmann::json& j, const EstimatorSpec& spec) {
  nlohmann::json params = std::visit(
      overloaded{
          [](const Chakrabarty& s) { return nlohmann::json{{"alpha", s.alpha}}; },
          [](const KhoshnevisanRatio& s) { return nlohmann::json{{"beta", s.beta}, {"g", s.g}}; },
          [](const SahaiRay& s) { return nlohmann::json{{"w", s.w}}; },
          [](const Solanki& s) { return nlohmann::json{{"delta", s.delta}, {"lambda", s.lambda}}; },
      },
      spec);
  j = nlohmann::json{{"family", std::string(family_name(family_of(spec)))}, {"params", std::move(params)}};
}

void from_json(const nlohmann::json& j, EstimatorSpec& spec) {
  const Family family = parse_family(j.at("family").get<std::string>());
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  const auto get = [&](const char* key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
  };
  switch (family) {
    case Family::Chakrabarty: spec = Chakrabarty{get("alpha", 0.0)}; break;
    case Family::KhoshnevisanRatio: spec = KhoshnevisanRatio{get("g", 1.0), get("beta", 0.0)}; break;
    case Family::SahaiRay: spec = SahaiRay{get("w", 0.0)}; break;
    case Family::Solanki: spec = Solanki{get("lambda", 0.0), get("delta", 0.0)}; break;
  }
}

std::optional<double> try_point_estimate(const EstimatorSpec& spec, const SampleStats& stats,
                                         double population_proportion) noexcept {
  const double P = population_proportion;
  const double p = stats.p;
  const double ybar = stats.ybar;
  return std::visit(
      overloaded{
          [&](const Chakrabarty& s) -> std::optional<double> {
            if (s.alpha == 0.0) return ybar;
            if (p == 0.0) return std::nullopt;
            // (1 - alpha) ybar + alpha ybar P / p, arranged to be exact at p == P.
            return ybar + s.alpha * ybar * (P / p - 1.0);
          },
          [&](const KhoshnevisanRatio& s) -> std::optional<double> {
            if (s.g == 0.0) return ybar;
            // Written so that p == P gives exactly P.
            const double denom = P + s.beta * (p - P);
            if (denom == 0.0) return std::nullopt;
            const auto factor = real_power(P / denom, s.g);
            if (!factor) return std::nullopt;
            return ybar * *factor;
          },
          [&](const SahaiRay& s) -> std::optional<double> {
            const auto factor = real_power(p / P, s.w);
            if (!factor) return std::nullopt;
            return ybar * (2.0 - *factor);
          },
          [&](const Solanki& s) -> std::optional<double> {
            const auto factor = real_power(p / P, s.lambda);
            if (!factor) return std::nullopt;
            return ybar * (2.0 - *factor * std::exp(s.delta * (p - P) / (p + P)));
          },
      },
      spec);
}

double point_estimate(const EstimatorSpec& spec, const SampleStats& stats, double population_proportion) {
  if (const auto t = try_point_estimate(spec, stats, population_proportion)) return *t;
  throw DegenerateSample(std::string(family_name(family_of(spec))) + " (" + describe(spec) +
                         ") is undefined at sample proportion p=" + std::to_string(stats.p));
}

HCoefficients h_derivatives(const EstimatorSpec& spec) {
  return std::visit(
      overloaded{
          [](const Chakrabarty& s) {
            return HCoefficients{-s.alpha, s.alpha, -s.alpha, s.alpha};
          },
          [](const KhoshnevisanRatio& s) {
            // (1 + beta e)^(-g): rising factorial of g over j!, alternating sign.
            HCoefficients h{};
            double c = 1.0;
            for (int j = 1; j <= 4; ++j) {
              c *= -(s.g + j - 1) * s.beta / j;
              h[j - 1] = c;
            }
            return h;
          },
          [](const SahaiRay& s) {
            HCoefficients h{};
            double c = 1.0;
            for (int j = 1; j <= 4; ++j) {
              c *= (s.w - j + 1) / j;
              h[j - 1] = -c;
            }
            return h;
          },
          [](const Solanki& s) {
            const auto b = solanki_series(s.lambda, s.delta);
            return HCoefficients{-b[1], -b[2], -b[3], -b[4]};
          },
      },
      spec);
}

double shape(const EstimatorSpec& spec, double u) {
  return std::visit(
      overloaded{
          [u](const Chakrabarty& s) { return 1.0 + s.alpha * (1.0 / u - 1.0); },
          [u](const KhoshnevisanRatio& s) { return std::pow(1.0 / (1.0 + s.beta * (u - 1.0)), s.g); },
          [u](const SahaiRay& s) { return 2.0 - std::pow(u, s.w); },
          [u](const Solanki& s) {
            return 2.0 - std::pow(u, s.lambda) * std::exp(s.delta * (u - 1.0) / (u + 1.0));
          },
      },
      spec);
}

}  // namespace srsattr
