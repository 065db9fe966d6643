#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cvqkd/errors.hpp"
#include "cvqkd/optimizer.hpp"

using namespace cvqkd;

namespace {

double g_at(double alpha, double eta, const KeyRateModel& model) {
  return optimal_threshold(alpha, eta, model).objective;
}

KeyRateModel ideal_model() {
  KeyRateModel m;
  m.cascade = CascadeModel::ideal();
  return m;
}

}  // namespace

TEST(OptimalThreshold, benchmark_point) {
  const KeyRateModel model;
  const auto r = optimal_threshold(0.8, 0.64, model);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.argument, 1.18, 0.05);
  EXPECT_LT(std::abs(key_integrand(r.argument, model.context(0.8, 0.64))), 1e-6);
  EXPECT_NEAR(r.objective, 0.031756905329547353, 1e-9);
}

TEST(OptimalThreshold, is_a_maximum_of_the_threshold_curve) {
  const KeyRateModel model;
  const auto r = optimal_threshold(0.8, 0.64, model);
  const std::vector<double> grid{r.argument - 0.2, r.argument - 0.02, r.argument + 0.02, r.argument + 0.2};
  const auto curve = key_rate_curve(grid, 0.8, 0.64, model);
  for (const auto& row : curve.rows) EXPECT_LT(row[1], r.objective) << row[0];
}

TEST(OptimalThreshold, lossless_ideal_keeps_all_outcomes) {
  const auto r = optimal_threshold(0.8, 1.0, ideal_model());
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.argument, 0.0);
}

TEST(OptimalThreshold, zero_key_regime_is_flagged) {
  const auto r = optimal_threshold(0.0, 0.64);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.objective, 0.0);
}

TEST(OptimalAlpha, ideal_reconciliation) {
  const auto r = optimal_alpha(0.64, ideal_model());
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.argument, 0.80, 0.02);
  EXPECT_NEAR(r.objective, g_at(r.argument, 0.64, ideal_model()), 1e-12);
}

TEST(OptimalAlpha, local_maximum_certificate) {
  const KeyRateModel model;
  for (double eta : {0.3, 0.64, 0.9}) {
    const auto r = optimal_alpha(eta, model);
    ASSERT_TRUE(r.converged);
    EXPECT_GE(r.objective, g_at(r.argument - 0.01, eta, model));
    EXPECT_GE(r.objective, g_at(r.argument + 0.01, eta, model));
    EXPECT_LE(r.bracket.first, r.argument);
    EXPECT_GE(r.bracket.second, r.argument);
  }
}

TEST(OptimalAlpha, grows_with_transmittance) {
  const KeyRateModel model;
  double previous = 0.0;
  for (double eta = 0.1; eta < 0.95; eta += 0.1) {
    const auto r = optimal_alpha(eta, model);
    ASSERT_TRUE(r.converged) << eta;
    EXPECT_GT(r.argument, previous) << eta;
    previous = r.argument;
  }
}

TEST(OptimalAlpha, edge_of_range_is_not_converged) {
  const auto r = optimal_alpha(0.64, KeyRateModel{}, {0.05, 0.4});
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(optimal_alpha(0.64, KeyRateModel{}, {1.0, 0.5}), ValidationError);
}

TEST(CascadeCalibration, constant_reproduces_target) {
  const double f = calibrate_cascade_constant(0.8, 0.64, 0.032);
  EXPECT_NEAR(f, 1.1525532675255005, 1e-6);
  KeyRateModel m;
  m.cascade = CascadeModel::constant(f);
  EXPECT_NEAR(g_at(0.8, 0.64, m), 0.032, 1e-8);
  EXPECT_THROW(calibrate_cascade_constant(0.8, 0.64, 0.5), ConvergenceError);
}

TEST(Curves, alpha_curve_layout) {
  const std::vector<double> etas{0.3, 0.6};
  const auto t = alpha_curve(etas);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"eta", "alpha_opt", "key_rate", "converged"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_LT(t.rows[0][1], t.rows[1][1]);
  EXPECT_EQ(t.rows[1][3], 1.0);
}

TEST(Curves, key_rate_curve_peaks_near_optimum) {
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(0.05 * i);
  const auto t = key_rate_curve(grid, 0.8, 0.64);
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i][1] > t.rows[best][1]) best = i;
  }
  EXPECT_NEAR(t.rows[best][0], 1.2, 0.051);
  EXPECT_LT(t.rows.front()[1], 0.0);
}

TEST(Curves, error_rate_curve_matches_closed_form) {
  const std::vector<double> grid{0.0, 1.18};
  const auto t = error_rate_curve(grid, 0.8, 0.64, QuadratureConvention::quarter());
  EXPECT_NEAR(t.rows[0][1], 0.10027256795444209, 1e-15);
  EXPECT_NEAR(t.rows[1][1], 0.00097226688169964, 1e-16);
  EXPECT_NEAR(t.rows[1][2], 0.14020740910921485, 1e-14);
}

TEST(Curves, grid_validation_and_csv) {
  const std::vector<double> empty, unsorted{1.0, 0.5};
  EXPECT_THROW(key_rate_curve(empty, 0.8, 0.64), ValidationError);
  EXPECT_THROW(error_rate_curve(unsorted, 0.8, 0.64), ValidationError);
  EXPECT_THROW(alpha_curve(empty), ValidationError);

  CurveTable t{{"x", "y"}, {{0.5, 1.0}, {1.5, -2e-9}}};
  std::ostringstream out;
  t.write_csv(out);
  EXPECT_EQ(out.str(), "x,y\n0.5,1\n1.5,-2e-09\n");
}
