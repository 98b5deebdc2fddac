#pragma once

#include <functional>

#include "srsattr/estimators.hpp"
#include "srsattr/expansion.hpp"
#include "srsattr/population.hpp"

namespace srsattr {

struct OptimumResult {
  Family family = Family::Chakrabarty;
  /// Optimal first-order slope: alpha, g*beta, w or k.
  double theta_star = 0.0;
  /// The scalar actually searched: alpha, beta (at fixed g), w, or k (lambda = k, delta = 0).
  double parameter = 0.0;
  EstimatorSpec spec;
  double mse_at_optimum = 0.0;
  int order = 1;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  /// The objective had no interior minimum in the bracket; `parameter` is an endpoint.
  bool boundary = false;
};

/// Estimator of the family at searched scalar `parameter`; `g` is used only for t2.
EstimatorSpec spec_for_parameter(Family family, double parameter, double g = 1.0);

/// theta* = C11 / C20 (the regression slope). For t2 the returned beta is theta*/g.
/// mse_at_optimum is the engine's first-order MSE evaluated at that estimator.
OptimumResult first_order_optimum(Family family, const MomentSet& ms, const DesignCoefficients& dc,
                                  double g = 1.0);

/// Ybar^2 L1 (C02 - C11^2 / C20).
double regression_mse(const MomentSet& ms, const DesignCoefficients& dc);

struct SearchOptions {
  double lo = -5.0;
  double hi = 5.0;
  double tol = 1e-8;
  /// Fixed exponent for t2.
  double g = 1.0;
  int grid_points = 201;
};

/// Second-order MSE (engine, lemma-based provider) as a function of the searched scalar.
std::function<double(double)> second_order_objective(Family family, const MomentSet& ms,
                                                     const DesignCoefficients& dc, double g = 1.0);

struct ScalarMinimum {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

/// Golden-section search on [lo, hi] until the bracket is no wider than tol.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Coarse scan of `grid_points` points over the bracket, golden-section
/// refinement around an interior scan minimum, and a final comparison against
/// the first-order optimum when it lies in the bracket. Ties go to the smaller parameter.
OptimumResult second_order_optimum(Family family, const MomentSet& ms, const DesignCoefficients& dc,
                                   const SearchOptions& options = {});

struct SolankiGridOptimum {
  double lambda = 0.0;
  double delta = 0.0;
  double mse = 0.0;
};

/// Two-parameter t4 scan over (lambda, delta) in [lo, hi]^2.
SolankiGridOptimum solanki_grid_optimum(const MomentSet& ms, const DesignCoefficients& dc, double lo, double hi,
                                        int points = 201);

}  // namespace srsattr
