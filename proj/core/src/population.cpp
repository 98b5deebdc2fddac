#include "srsattr/population.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "srsattr/errors.hpp"

namespace srsattr {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

Population::Population(std::vector<double> y, std::vector<std::uint8_t> phi)
    : y_(std::move(y)), phi_(std::move(phi)) {
  if (y_.size() != phi_.size()) {
    throw InvariantError("population: y has " + std::to_string(y_.size()) +
                         " values but phi has " + std::to_string(phi_.size()));
  }
  const std::size_t n = y_.size();
  if (n < 4) {
    throw InvariantError("population: N=" + std::to_string(n) + " but at least 4 units are required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (phi_[i] > 1) {
      throw InvariantError("population: unit " + std::to_string(i + 1) + " has non-binary attribute");
    }
    if (!std::isfinite(y_[i])) {
      throw InvariantError("population: unit " + std::to_string(i + 1) + " has non-finite y");
    }
    sum += y_[i];
    attribute_count_ += phi_[i];
  }
  ybar_ = sum / static_cast<double>(n);
  proportion_ = static_cast<double>(attribute_count_) / static_cast<double>(n);
  if (attribute_count_ == 0) throw InvariantError("population: degenerate proportion P=0");
  if (attribute_count_ == n) throw InvariantError("population: degenerate proportion P=1");
  if (ybar_ == 0.0) throw InvariantError("population: mean of y is 0");
}

Population parse_population(std::istream& in, const std::string& source) {
  std::vector<double> y;
  std::vector<std::uint8_t> phi;
  std::string raw;
  std::size_t line_no = 0;
  bool seen_record = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(where(source, line_no) + "expected two comma-separated fields");
    }
    const std::string_view ytext = trim(line.substr(0, comma));
    const std::string_view ptext = trim(line.substr(comma + 1));
    if (!seen_record && ytext == "y" && ptext == "phi") {
      seen_record = true;
      continue;
    }
    seen_record = true;

    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(ytext.data(), ytext.data() + ytext.size(), value);
    if (ec != std::errc() || ptr != ytext.data() + ytext.size() || ytext.empty()) {
      throw ParseError(where(source, line_no) + "cannot parse y value '" + std::string(ytext) + "'");
    }
    if (!std::isfinite(value)) {
      throw ParseError(where(source, line_no) + "y value is not finite");
    }
    if (ptext != "0" && ptext != "1") {
      throw ParseError(where(source, line_no) + "non-binary attribute '" + std::string(ptext) + "'");
    }
    y.push_back(value);
    phi.push_back(ptext == "1" ? 1 : 0);
  }
  try {
    return Population(std::move(y), std::move(phi));
  } catch (const InvariantError& e) {
    throw InvariantError(source + ": " + e.what());
  }
}

Population load_population(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open population file " + path.string());
  return parse_population(in, path.string());
}

void write_population(std::ostream& out, const Population& pop) {
  out << "y,phi\n";
  char buf[64];
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof buf, pop.y()[i]);
    out.write(buf, res.ptr - buf);
    out << ',' << static_cast<int>(pop.phi()[i]) << '\n';
  }
}

MomentSet::MomentSet(std::size_t population_size, double ybar, double proportion,
                     std::array<std::array<double, kMaxOrder + 1>, kMaxOrder + 1> c)
    : population_size_(population_size), ybar_(ybar), proportion_(proportion), c_(c) {}

double MomentSet::c(int p, int q) const {
  if (p < 0 || q < 0 || p + q > kMaxOrder) {
    throw std::out_of_range("C_pq requested with p=" + std::to_string(p) + ", q=" + std::to_string(q));
  }
  return c_[p][q];
}

MomentSet moments(const Population& pop) {
  constexpr int K = MomentSet::kMaxOrder;
  const double ybar = pop.ybar();
  const double prop = pop.proportion();
  const auto n = static_cast<double>(pop.size());

  // Second pass over centered values; the means come from the Population.
  std::array<std::array<double, K + 1>, K + 1> raw{};
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double dx = static_cast<double>(pop.phi()[i]) - prop;
    const double dy = pop.y()[i] - ybar;
    double xp = 1.0;
    for (int p = 0; p <= K; ++p) {
      double term = xp;
      for (int q = 0; p + q <= K; ++q) {
        raw[p][q] += term;
        term *= dy;
      }
      xp *= dx;
    }
  }

  std::array<std::array<double, K + 1>, K + 1> c{};
  for (int p = 0; p <= K; ++p) {
    for (int q = 0; p + q <= K; ++q) {
      c[p][q] = raw[p][q] / n / (std::pow(prop, p) * std::pow(ybar, q));
    }
  }
  c[0][0] = 1.0;
  c[1][0] = 0.0;
  c[0][1] = 0.0;
  return MomentSet(pop.size(), ybar, prop, c);
}

DesignCoefficients design_coefficients(std::size_t population_size, std::size_t sample_size,
                                       bool allow_census) {
  if (population_size < 4) {
    throw InvariantError("design: N=" + std::to_string(population_size) + " must be at least 4");
  }
  if (sample_size < 1 || sample_size > population_size ||
      (sample_size == population_size && !allow_census)) {
    throw InvariantError("design: n=" + std::to_string(sample_size) + " must satisfy 1 <= n < N=" +
                         std::to_string(population_size));
  }
  // Exact integer numerators and denominators, one rounding each before the division.
  using wide = __int128;
  const wide N = static_cast<wide>(population_size);
  const wide n = static_cast<wide>(sample_size);
  const auto ratio = [](wide num, wide den) {
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
  };

  DesignCoefficients dc;
  dc.population_size = population_size;
  dc.sample_size = sample_size;
  dc.l1 = ratio(N - n, (N - 1) * n);
  dc.l2 = ratio((N - n) * (N - 2 * n), (N - 1) * (N - 2) * n * n);
  dc.l3 = ratio((N - n) * (N * N + N - 6 * n * N + 6 * n * n), (N - 1) * (N - 2) * (N - 3) * n * n * n);
  dc.l4 = ratio(N * (N - n) * (N - n - 1) * (n - 1), (N - 1) * (N - 2) * (N - 3) * n * n * n);
  return dc;
}

}  // namespace srsattr
