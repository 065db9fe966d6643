#include "cvqkd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "cvqkd/errors.hpp"
#include "cvqkd/format.hpp"

namespace cvqkd {

SecurityContext KeyRateModel::context(double alpha, double eta, double threshold) const {
  SecurityContext ctx;
  ctx.alpha = alpha;
  ctx.eta = eta;
  ctx.threshold = threshold;
  ctx.cascade = cascade;
  ctx.convention = convention;
  ctx.eve = eve;
  return ctx;
}

OptimizationResult optimal_threshold(double alpha, double eta, const KeyRateModel& model, double tolerance) {
  FieldChecker check;
  check.require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  check.require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  check.require(tolerance > 0.0, "tolerance must be > 0");
  check.throw_if_failed();

  const SecurityContext ctx = model.context(alpha, eta);
  const IntegrandRoot root = find_integrand_root(ctx, tolerance);
  OptimizationResult result;
  result.iterations = root.iterations;
  if (!root.found) {
    result.bracket = {root.lower, root.upper};
    return result;
  }
  result.argument = root.root;
  result.bracket = root.root == 0.0 && root.upper == 0.0 ? std::make_pair(0.0, 0.0)
                                                        : std::make_pair(root.lower, root.upper);
  result.converged = result.bracket.second - result.bracket.first <= tolerance;
  result.objective = key_rate(ctx, model.quadrature).key_rate;
  return result;
}

namespace {

double best_key_rate(double alpha, double eta, const KeyRateModel& model) {
  return key_rate(model.context(alpha, eta), model.quadrature).key_rate;
}

}  // namespace

OptimizationResult optimal_alpha(double eta, const KeyRateModel& model, std::pair<double, double> range,
                                 double tolerance) {
  FieldChecker check;
  check.require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  check.require(range.first > 0.0 && range.second > range.first, "alpha range must be positive and increasing");
  check.require(tolerance > 0.0, "tolerance must be > 0");
  check.throw_if_failed();

  constexpr int kScan = 24;
  const double step = (range.second - range.first) / kScan;
  std::vector<double> xs(kScan + 1), gs(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    xs[i] = range.first + step * i;
    gs[i] = best_key_rate(xs[i], eta, model);
  }
  const auto best = static_cast<int>(std::max_element(gs.begin(), gs.end()) - gs.begin());

  OptimizationResult result;
  result.iterations = kScan + 1;
  if (!(gs[best] > 0.0)) {
    result.bracket = range;
    return result;
  }

  // Brent's method on the cell pair around the best scan point.
  const double lo = xs[std::max(best - 1, 0)];
  const double hi = xs[std::min(best + 1, kScan)];
  const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(tolerance / hi))) + 1, 8,
                              std::numeric_limits<double>::digits / 2);
  std::uintmax_t max_iter = 200;
  const auto [x, neg_g] = boost::math::tools::brent_find_minima(
      [&](double a) { return -best_key_rate(a, eta, model); }, lo, hi, bits, max_iter);
  result.iterations += static_cast<int>(max_iter);
  result.argument = x;
  result.objective = -neg_g;
  if (gs[best] > result.objective) {
    result.argument = xs[best];
    result.objective = gs[best];
  }
  result.bracket = {lo, hi};
  // A maximum pinned to the edge of the search range is not an interior
  // optimum.
  const bool at_edge = (best == 0 && result.argument - range.first < tolerance) ||
                       (best == kScan && range.second - result.argument < tolerance);
  result.converged = !at_edge;
  return result;
}

double calibrate_cascade_constant(double alpha, double eta, double target_key_rate, const KeyRateModel& model) {
  auto g_of = [&](double f) {
    KeyRateModel m = model;
    m.cascade = CascadeModel::constant(f);
    return best_key_rate(alpha, eta, m) - target_key_rate;
  };
  const double lo = 1.0;
  const double g_lo = g_of(lo);
  if (g_lo < 0.0) {
    throw ConvergenceError("calibrate_cascade_constant: target key rate exceeds the ideal-reconciliation value " +
                           format_double(g_lo + target_key_rate));
  }
  double hi = 1.5;
  double g_hi = g_of(hi);
  while (g_hi > 0.0) {
    hi *= 1.5;
    if (hi > 100.0) throw ConvergenceError("calibrate_cascade_constant: no f <= 100 reaches the target");
    g_hi = g_of(hi);
  }
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      g_of, lo, hi, g_lo, g_hi, [](double a, double b) { return std::abs(b - a) <= 1e-12; }, iters);
  return 0.5 * (bracket.first + bracket.second);
}

void CurveTable::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

namespace {

void check_grid(std::span<const double> grid, const char* name) {
  FieldChecker check;
  check.require(!grid.empty(), std::string(name) + " grid must not be empty");
  check.require(std::is_sorted(grid.begin(), grid.end()), std::string(name) + " grid must be sorted");
  check.throw_if_failed();
}

}  // namespace

CurveTable alpha_curve(std::span<const double> eta_grid, const KeyRateModel& model,
                       std::pair<double, double> range) {
  check_grid(eta_grid, "eta");
  CurveTable table{{"eta", "alpha_opt", "key_rate", "converged"}, {}};
  for (const double eta : eta_grid) {
    const auto r = optimal_alpha(eta, model, range);
    table.rows.push_back({eta, r.argument, r.objective, r.converged ? 1.0 : 0.0});
  }
  return table;
}

CurveTable key_rate_curve(std::span<const double> threshold_grid, double alpha, double eta,
                          const KeyRateModel& model) {
  check_grid(threshold_grid, "threshold");
  CurveTable table{{"threshold", "key_rate"}, {}};
  for (const double t : threshold_grid) {
    SecurityContext ctx = model.context(alpha, eta, t);
    ctx.positive_part_only = false;
    table.rows.push_back({t, key_rate(ctx, model.quadrature).key_rate});
  }
  return table;
}

CurveTable error_rate_curve(std::span<const double> threshold_grid, double alpha, double eta,
                            const QuadratureConvention& convention) {
  check_grid(threshold_grid, "threshold");
  const BpskOutcomes bob = BpskOutcomes::received(alpha, eta, convention);
  CurveTable table{{"threshold", "error_rate", "acceptance"}, {}};
  for (const double t : threshold_grid) table.rows.push_back({t, bob.error_rate(t), bob.acceptance(t)});
  return table;
}

}  // namespace cvqkd
