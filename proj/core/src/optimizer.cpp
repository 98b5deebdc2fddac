#include "srsattr/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "srsattr/errors.hpp"

namespace srsattr {

EstimatorSpec spec_for_parameter(Family family, double parameter, double g) {
  switch (family) {
    case Family::Chakrabarty: return Chakrabarty{parameter};
    case Family::KhoshnevisanRatio: return KhoshnevisanRatio{g, parameter};
    case Family::SahaiRay: return SahaiRay{parameter};
    case Family::Solanki: return Solanki{parameter, 0.0};
  }
  throw std::invalid_argument("unknown family");
}

namespace {

double slope_of(Family family, double parameter, double g) {
  return family == Family::KhoshnevisanRatio ? g * parameter : parameter;
}

}  // namespace

double regression_mse(const MomentSet& ms, const DesignCoefficients& dc) {
  const double c20 = ms.c(2, 0);
  if (c20 == 0.0) throw DegenerateMoments("C20 = 0: the attribute carries no variation");
  const double c11 = ms.c(1, 1);
  return ms.ybar() * ms.ybar() * dc.l1 * (ms.c(0, 2) - c11 * c11 / c20);
}

OptimumResult first_order_optimum(Family family, const MomentSet& ms, const DesignCoefficients& dc, double g) {
  const double c20 = ms.c(2, 0);
  if (c20 == 0.0) throw DegenerateMoments("C20 = 0: the attribute carries no variation");
  if (family == Family::KhoshnevisanRatio && g == 0.0) {
    throw std::invalid_argument("t2 with g = 0 cannot reach the first-order optimum");
  }
  const double theta = ms.c(1, 1) / c20;
  OptimumResult r;
  r.family = family;
  r.theta_star = theta;
  r.parameter = family == Family::KhoshnevisanRatio ? theta / g : theta;
  r.spec = spec_for_parameter(family, r.parameter, g);
  r.mse_at_optimum = bias_mse_first_order(r.spec, MomentProvider::lemma_based(ms, dc)).mse;
  r.order = 1;
  r.bracket_lo = r.bracket_hi = r.parameter;
  return r;
}

std::function<double(double)> second_order_objective(Family family, const MomentSet& ms,
                                                     const DesignCoefficients& dc, double g) {
  return [family, g, mp = MomentProvider::lemma_based(ms, dc)](double x) {
    return mse_second_order(spec_for_parameter(family, x, g), mp);
  };
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("golden section needs lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("golden section needs tol > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > tol && it < 500) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  ScalarMinimum best{c, fc, it};
  if (fd < fc) best = {d, fd, it};
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm < best.fx || (fm == best.fx && mid < best.x)) best = {mid, fm, it};
  return best;
}

OptimumResult second_order_optimum(Family family, const MomentSet& ms, const DesignCoefficients& dc,
                                   const SearchOptions& options) {
  if (!(options.lo < options.hi)) throw std::invalid_argument("bracket must satisfy lo < hi");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (options.grid_points < 3) throw std::invalid_argument("coarse scan needs at least 3 points");
  const auto f = second_order_objective(family, ms, dc, options.g);

  const int m = options.grid_points;
  const double step = (options.hi - options.lo) / (m - 1);
  const auto node = [&](int i) { return i == m - 1 ? options.hi : options.lo + step * i; };
  int best_i = 0;
  double best_f = f(node(0));
  for (int i = 1; i < m; ++i) {
    const double v = f(node(i));
    if (v < best_f) {
      best_f = v;
      best_i = i;
    }
  }

  OptimumResult r;
  r.family = family;
  r.order = 2;
  r.bracket_lo = options.lo;
  r.bracket_hi = options.hi;
  r.parameter = node(best_i);
  r.mse_at_optimum = best_f;

  const auto consider = [&](double x, double fx) {
    if (fx < r.mse_at_optimum || (fx == r.mse_at_optimum && x < r.parameter)) {
      r.parameter = x;
      r.mse_at_optimum = fx;
    }
  };

  if (best_i > 0 && best_i < m - 1) {
    const auto refined = golden_section_minimize(f, node(best_i - 1), node(best_i + 1), options.tol);
    r.iterations = refined.iterations;
    consider(refined.x, refined.fx);
  }

  const auto first = first_order_optimum(family, ms, dc, options.g);
  if (first.parameter >= options.lo && first.parameter <= options.hi) consider(first.parameter, f(first.parameter));

  r.boundary = r.parameter == options.lo || r.parameter == options.hi;
  r.theta_star = slope_of(family, r.parameter, options.g);
  r.spec = spec_for_parameter(family, r.parameter, options.g);
  return r;
}

SolankiGridOptimum solanki_grid_optimum(const MomentSet& ms, const DesignCoefficients& dc, double lo, double hi,
                                        int points) {
  if (!(lo < hi)) throw std::invalid_argument("bracket must satisfy lo < hi");
  if (points < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  const auto mp = MomentProvider::lemma_based(ms, dc);
  const double step = (hi - lo) / (points - 1);
  SolankiGridOptimum best{lo, lo, mse_second_order(Solanki{lo, lo}, mp)};
  for (int i = 0; i < points; ++i) {
    const double lambda = i == points - 1 ? hi : lo + step * i;
    for (int j = 0; j < points; ++j) {
      const double delta = j == points - 1 ? hi : lo + step * j;
      const double v = mse_second_order(Solanki{lambda, delta}, mp);
      if (v < best.mse) best = {lambda, delta, v};
    }
  }
  return best;
}

}  // namespace srsattr
