#include "cvqkd/security.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/format.hpp"

namespace cvqkd {

// ---------------------------------------------------------------------------
// CascadeModel

CascadeModel CascadeModel::ideal() { return CascadeModel(Mode::ideal, {}); }

CascadeModel CascadeModel::constant(double f) {
  if (!(std::isfinite(f) && f >= 1.0)) throw ValidationError({"cascade constant f must be >= 1"});
  return CascadeModel(Mode::constant, {{0.0, f}});
}

CascadeModel CascadeModel::table(std::vector<std::pair<double, double>> points) {
  FieldChecker check;
  check.require(!points.empty(), "cascade table must have at least one point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [e, f] = points[i];
    check.require(std::isfinite(e) && e >= 0.0 && e <= 0.5,
                  "cascade table error rate " + format_double(e) + " outside [0, 0.5]");
    check.require(std::isfinite(f) && f >= 1.0, "cascade table efficiency " + format_double(f) + " below 1");
    if (i > 0) {
      check.require(e > points[i - 1].first, "cascade table error rates must be strictly increasing");
      check.require(f >= points[i - 1].second, "cascade table efficiency must be non-decreasing");
    }
  }
  check.throw_if_failed();
  return CascadeModel(Mode::table, std::move(points));
}

CascadeModel CascadeModel::default_table() {
  return table({{0.01, 1.16}, {0.05, 1.16}, {0.10, 1.22}, {0.15, 1.35}});
}

CascadeModel CascadeModel::parse(const std::string& spec) {
  if (spec == "ideal") return ideal();
  if (spec.rfind("constant:", 0) == 0) {
    const std::string value = spec.substr(9);
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw ValidationError({"cascade: bad constant '" + value + "'"});
    return constant(f);
  }
  if (spec.rfind("table:", 0) == 0) {
    const std::string path = spec.substr(6);
    std::ifstream in(path);
    if (!in) throw ValidationError({"cascade: cannot read table file '" + path + "'"});
    std::vector<std::pair<double, double>> points;
    std::string line;
    while (std::getline(in, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream fields(line);
      double e = 0.0, f = 0.0;
      if (!(fields >> e >> f)) throw ValidationError({"cascade: bad table line '" + line + "'"});
      points.emplace_back(e, f);
    }
    return table(std::move(points));
  }
  throw ValidationError({"cascade must be ideal, constant:<f> or table:<path>, got '" + spec + "'"});
}

double CascadeModel::efficiency(double error_rate) const {
  switch (mode_) {
    case Mode::ideal:
      return 1.0;
    case Mode::constant:
      return points_.front().second;
    case Mode::table:
      break;
  }
  if (error_rate <= points_.front().first) return points_.front().second;
  if (error_rate >= points_.back().first) return points_.back().second;
  const auto hi = std::upper_bound(points_.begin(), points_.end(), error_rate,
                                   [](double e, const auto& p) { return e < p.first; });
  const auto lo = hi - 1;
  const double t = (error_rate - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

std::string CascadeModel::describe() const {
  switch (mode_) {
    case Mode::ideal:
      return "ideal";
    case Mode::constant:
      return "constant:" + format_double(points_.front().second);
    case Mode::table:
      break;
  }
  std::string s = "table:";
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i) s += ';';
    s += format_double(points_[i].first) + "/" + format_double(points_[i].second);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Outcome statistics

BpskOutcomes::BpskOutcomes(double mean, double variance) : mean_(mean), variance_(variance) {
  if (!(mean >= 0.0)) throw std::domain_error("BpskOutcomes: mean must be >= 0");
  if (!(variance > 0.0)) throw std::domain_error("BpskOutcomes: variance must be > 0");
}

BpskOutcomes BpskOutcomes::received(double alpha, double eta, const QuadratureConvention& convention,
                                    double excess_noise) {
  return BpskOutcomes(convention.outcome_mean(attenuate_amplitude(alpha, eta)),
                      convention.outcome_variance(excess_noise));
}

double BpskOutcomes::density(double beta) const {
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance_);
  const double a = beta - mean_;
  const double b = beta + mean_;
  return 0.5 * norm * (std::exp(-a * a / (2.0 * variance_)) + std::exp(-b * b / (2.0 * variance_)));
}

double BpskOutcomes::folded_density(double beta) const { return beta < 0.0 ? 0.0 : 2.0 * density(beta); }

double BpskOutcomes::acceptance(double threshold) const {
  if (!(threshold >= 0.0)) throw std::domain_error("acceptance: threshold must be >= 0");
  const double s = std::sqrt(2.0 * variance_);
  return 0.5 * (std::erfc((threshold - mean_) / s) + std::erfc((threshold + mean_) / s));
}

double BpskOutcomes::error_rate(double threshold) const {
  if (mean_ == 0.0) return 0.5;
  const double p = acceptance(threshold);
  if (p == 0.0) return 0.0;  // limit exp(-2 m t / var) -> 0
  return 0.5 * std::erfc((threshold + mean_) / std::sqrt(2.0 * variance_)) / p;
}

double BpskOutcomes::conditional_error(double beta) const {
  const double x = 2.0 * mean_ * std::abs(beta) / variance_;
  const double t = std::exp(-x);
  return t / (1.0 + t);
}

// ---------------------------------------------------------------------------
// Entropies

double binary_entropy(double e) {
  if (!(e >= 0.0 && e <= 1.0)) throw std::domain_error("binary_entropy: e must lie in [0, 1]");
  if (e == 0.0 || e == 1.0) return 0.0;
  return -(e * std::log2(e) + (1.0 - e) * std::log2(1.0 - e));
}

double two_state_entropy(double p_plus, double gamma) {
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) throw std::domain_error("two_state_entropy: p must lie in [0, 1]");
  // Eigenvalues of the 2x2 Gram-weighted matrix: (1 +- sqrt(1 - q)) / 2 with
  // q = 4 p (1 - p) (1 - |<gamma|-gamma>|^2).
  const double one_minus_c2 = -std::expm1(2.0 * log_coherent_overlap(gamma));
  const double q = std::clamp(4.0 * p_plus * (1.0 - p_plus) * one_minus_c2, 0.0, 1.0);
  const double small = q / (2.0 * (1.0 + std::sqrt(1.0 - q)));
  return binary_entropy(std::min(small, 0.5));
}

double acceptance_probability(double alpha, double eta, double threshold,
                              const QuadratureConvention& convention) {
  return BpskOutcomes::received(alpha, eta, convention).acceptance(threshold);
}

double error_rate_postselected(double alpha, double eta, double threshold,
                               const QuadratureConvention& convention) {
  return BpskOutcomes::received(alpha, eta, convention).error_rate(threshold);
}

double conditional_error(double beta, double alpha, double eta, const QuadratureConvention& convention) {
  return BpskOutcomes::received(alpha, eta, convention).conditional_error(beta);
}

double eve_holevo(double beta, double alpha, double eta, const QuadratureConvention& convention) {
  const double e = conditional_error(beta, alpha, eta, convention);
  return two_state_entropy(1.0 - e, std::sqrt(1.0 - eta) * alpha);
}

// ---------------------------------------------------------------------------
// Key rate

double SecurityContext::bob_mean() const { return convention.outcome_mean(attenuate_amplitude(alpha, eta)); }

double SecurityContext::eve_amplitude() const { return std::sqrt(1.0 - eta) * alpha; }

void SecurityContext::validate() const {
  FieldChecker check;
  check.require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  check.require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  check.require(std::isfinite(threshold) && threshold >= 0.0, "threshold must be >= 0");
  check.require(std::isfinite(convention.vacuum_variance) && convention.vacuum_variance > 0.0,
                "convention.vacuum_variance must be > 0");
  check.require(std::isfinite(convention.coherent_mean_scale) && convention.coherent_mean_scale > 0.0,
                "convention.coherent_mean_scale must be > 0");
  check.throw_if_failed();
}

double key_integrand(double beta, const SecurityContext& ctx) {
  const BpskOutcomes bob(ctx.bob_mean(), ctx.convention.outcome_variance());
  const double e = bob.conditional_error(beta);
  const double eve_p = ctx.eve == EveKnowledge::outcome_magnitude ? 0.5 : 1.0 - e;
  return 1.0 - ctx.cascade.efficiency(e) * binary_entropy(e) - two_state_entropy(eve_p, ctx.eve_amplitude());
}

IntegrandRoot find_integrand_root(const SecurityContext& ctx, double tolerance) {
  ctx.validate();
  const double sigma = std::sqrt(ctx.convention.outcome_variance());
  IntegrandRoot result;
  result.upper = ctx.bob_mean() + 12.0 * sigma;
  auto f = [&](double beta) { return key_integrand(beta, ctx); };
  const double f_hi = f(result.upper);
  if (!(f_hi > 0.0)) return result;
  const double f_lo = f(0.0);
  result.found = true;
  if (f_lo >= 0.0) {
    result.upper = 0.0;
    return result;
  }
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, 0.0, result.upper, f_lo, f_hi, [tolerance](double a, double b) { return std::abs(b - a) <= tolerance; },
      max_iter);
  result.lower = bracket.first;
  result.upper = bracket.second;
  result.root = 0.5 * (bracket.first + bracket.second);
  result.iterations = static_cast<int>(max_iter);
  return result;
}

void QuadratureSettings::validate() const {
  FieldChecker check;
  check.require(kronrod_points == 15 || kronrod_points == 21 || kronrod_points == 31 ||
                    kronrod_points == 41 || kronrod_points == 51 || kronrod_points == 61,
                "quadrature.kronrod_points must be one of 15, 21, 31, 41, 51, 61");
  check.require(relative_tolerance > 0.0, "quadrature.relative_tolerance must be > 0");
  check.require(absolute_tolerance >= 0.0, "quadrature.absolute_tolerance must be >= 0");
  check.require(max_depth >= 1, "quadrature.max_depth must be >= 1");
  check.throw_if_failed();
}

namespace {

template <unsigned Points, typename F>
double kronrod(F&& f, double a, double b, const QuadratureSettings& s, double& error, double& l1) {
  return boost::math::quadrature::gauss_kronrod<double, Points>::integrate(
      f, a, b, s.max_depth, s.relative_tolerance, &error, &l1);
}

template <typename F>
double integrate(F&& f, double a, double b, const QuadratureSettings& s, double& error, double& l1) {
  switch (s.kronrod_points) {
    case 15: return kronrod<15>(f, a, b, s, error, l1);
    case 21: return kronrod<21>(f, a, b, s, error, l1);
    case 31: return kronrod<31>(f, a, b, s, error, l1);
    case 41: return kronrod<41>(f, a, b, s, error, l1);
    case 51: return kronrod<51>(f, a, b, s, error, l1);
    default: return kronrod<61>(f, a, b, s, error, l1);
  }
}

constexpr double kSigmaSpan = 12.0;

}  // namespace

KeyRateReport key_rate(const SecurityContext& ctx, const QuadratureSettings& settings) {
  ctx.validate();
  settings.validate();

  const BpskOutcomes bob(ctx.bob_mean(), ctx.convention.outcome_variance());
  KeyRateReport report;
  report.alpha = ctx.alpha;
  report.eta = ctx.eta;
  report.threshold_requested = ctx.threshold;

  double lower = ctx.threshold;
  if (ctx.positive_part_only) {
    const IntegrandRoot root = find_integrand_root(ctx);
    if (!root.found) {
      // No positive contribution anywhere: postselection accepts nothing.
      report.threshold = std::numeric_limits<double>::infinity();
      return report;
    }
    lower = std::max(lower, root.root);
  }
  report.threshold = lower;
  report.acceptance = bob.acceptance(lower);
  report.error_rate = bob.error_rate(lower);

  const double sigma = std::sqrt(bob.variance());
  const double upper = std::max(lower, bob.mean()) + kSigmaSpan * sigma;
  auto integrand = [&](double beta) { return key_integrand(beta, ctx) * bob.folded_density(beta); };
  // f[e] is only piecewise smooth: integrate panel by panel between the
  // outcomes where e(beta) hits a table breakpoint.
  std::vector<double> cuts{lower};
  if (ctx.cascade.mode() == CascadeModel::Mode::table && bob.mean() > 0.0) {
    for (const auto& [e, f] : ctx.cascade.points()) {
      if (!(e > 0.0 && e < 0.5)) continue;
      const double beta = bob.variance() / (2.0 * bob.mean()) * std::log(1.0 / e - 1.0);
      if (beta > lower && beta < upper) cuts.push_back(beta);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(upper);
  double error = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double panel_error = 0.0, panel_l1 = 0.0;
    report.key_rate += integrate(integrand, cuts[i], cuts[i + 1], settings, panel_error, panel_l1);
    error += panel_error;
    l1 += panel_l1;
  }
  report.integration_error = error;
  // |integrand| <= 1 + f[1/2] + 1 beyond the cut.
  report.tail_bound = (2.0 + ctx.cascade.efficiency(0.5)) * bob.acceptance(upper);

  if (!(error <= std::max(settings.relative_tolerance * l1, settings.absolute_tolerance))) {
    std::ostringstream msg;
    msg << "key_rate: quadrature did not converge on [" << lower << ", " << upper << "]: estimate " << report.key_rate
        << ", error " << error << ", L1 " << l1 << ", tolerance " << settings.relative_tolerance
        << ", depth " << settings.max_depth;
    throw ConvergenceError(msg.str());
  }
  return report;
}

double KeyRateReport::throughput(double pulse_rate_hz) const { return cvqkd::throughput(key_rate, pulse_rate_hz); }

double throughput(double key_rate_bits_per_pulse, double pulse_rate_hz) {
  if (!(key_rate_bits_per_pulse >= 0.0)) throw std::domain_error("throughput: G must be >= 0");
  if (!(pulse_rate_hz >= 0.0)) throw std::domain_error("throughput: pulse rate must be >= 0");
  return key_rate_bits_per_pulse * pulse_rate_hz;
}

void write_report_text(std::ostream& out, const KeyRateReport& r, double pulse_rate_hz) {
  out << "alpha = " << format_double(r.alpha) << '\n'
      << "eta = " << format_double(r.eta) << '\n'
      << "threshold_requested = " << format_double(r.threshold_requested) << '\n'
      << "threshold = " << format_double(r.threshold) << '\n'
      << "key_rate_bits_per_pulse = " << format_double(r.key_rate) << '\n'
      << "acceptance_probability = " << format_double(r.acceptance) << '\n'
      << "error_rate = " << format_double(r.error_rate) << '\n'
      << "pulse_rate_hz = " << format_double(pulse_rate_hz) << '\n'
      << "throughput_bits_per_s = " << format_double(r.throughput(pulse_rate_hz)) << '\n'
      << "integration_error = " << format_double(r.integration_error) << '\n';
}

std::string report_csv_header() {
  return "alpha,eta,threshold_requested,threshold,key_rate,acceptance,error_rate,pulse_rate_hz,throughput_bps";
}

std::string report_csv_row(const KeyRateReport& r, double pulse_rate_hz) {
  return format_double(r.alpha) + ',' + format_double(r.eta) + ',' + format_double(r.threshold_requested) + ',' +
         format_double(r.threshold) + ',' + format_double(r.key_rate) + ',' + format_double(r.acceptance) + ',' +
         format_double(r.error_rate) + ',' + format_double(pulse_rate_hz) + ',' +
         format_double(r.throughput(pulse_rate_hz));
}

}  // namespace cvqkd
