#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/security.hpp"

namespace cvqkd {

struct OptimizationResult {
  double argument = 0.0;   // alpha_opt or beta0_opt
  double objective = 0.0;  // G at the optimum
  int iterations = 0;
  bool converged = false;
  std::pair<double, double> bracket{0.0, 0.0};
};

// Everything the key rate depends on apart from (alpha, eta, threshold).
struct KeyRateModel {
  CascadeModel cascade = CascadeModel::default_table();
  QuadratureConvention convention = QuadratureConvention::half();
  EveKnowledge eve = EveKnowledge::outcome_magnitude;
  QuadratureSettings quadrature;

  SecurityContext context(double alpha, double eta, double threshold = 0.0) const;
};

// Postselection threshold where Bob's and Eve's pointwise information are
// equal: Bob keeps exactly the outcomes that add to the key. Not converged
// when the integrand has no positive region (zero key rate regime).
OptimizationResult optimal_threshold(double alpha, double eta, const KeyRateModel& model = {},
                                     double tolerance = 1e-6);

// Maximizes G(alpha, eta) with the threshold re-optimized at every alpha.
// A coarse scan over `range` locates the best cell, then Brent's method
// narrows it to `tolerance`.
OptimizationResult optimal_alpha(double eta, const KeyRateModel& model = {},
                                 std::pair<double, double> range = {0.05, 3.0}, double tolerance = 1e-3);

// Constant reconciliation efficiency f for which the optimally postselected
// key rate at (alpha, eta) equals target_key_rate.
double calibrate_cascade_constant(double alpha, double eta, double target_key_rate,
                                  const KeyRateModel& model = {});

// Named columns of doubles; the independent variable is the first column.
struct CurveTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write_csv(std::ostream& out) const;
};

// (eta, alpha_opt, key_rate, converged)
CurveTable alpha_curve(std::span<const double> eta_grid, const KeyRateModel& model = {},
                       std::pair<double, double> range = {0.05, 3.0});
// (threshold, key_rate): G integrated from the threshold as given, so values
// below the optimum include the negative contributions.
CurveTable key_rate_curve(std::span<const double> threshold_grid, double alpha, double eta,
                          const KeyRateModel& model = {});
// (threshold, error_rate, acceptance)
CurveTable error_rate_curve(std::span<const double> threshold_grid, double alpha, double eta,
                            const QuadratureConvention& convention = {});

}  // namespace cvqkd
