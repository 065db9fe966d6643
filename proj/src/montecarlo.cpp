#include "cvqkd/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvqkd/errors.hpp"
#include "cvqkd/format.hpp"

namespace cvqkd {

void ExperimentSettings::validate() const {
  FieldChecker check;
  check.require(n_pulses >= 1, "montecarlo.pulses must be >= 1");
  check.require(std::isfinite(alpha) && alpha >= 0.0, "signal.alpha must be >= 0");
  check.require(std::isfinite(reference_excess_noise) && reference_excess_noise >= 0.0,
                "montecarlo.reference_excess_noise must be >= 0");
  check.require(partition_size >= 1, "montecarlo.partition_size must be >= 1");
  check.throw_if_failed();
  channel.validate();
  plan.validate();
  convention.validate();
}

std::vector<PulseRecord> simulate_session(const ExperimentSettings& settings) {
  settings.validate();
  std::vector<PulseRecord> session;
  session.reserve(2 * settings.n_pulses);
  std::uint64_t partition = 0;
  for (std::uint64_t first = 0; first < settings.n_pulses; first += settings.partition_size, ++partition) {
    const std::uint64_t n = std::min(settings.partition_size, settings.n_pulses - first);
    Rng rng = make_stream(settings.seed, partition);
    auto block = generate_session(n, settings.alpha, settings.channel, settings.plan, rng, settings.drift,
                                  settings.convention, first);
    session.insert(session.end(), block.begin(), block.end());
  }
  return calibrate(session, settings.plan.calibration_window);
}

namespace {

double binomial_z(double observed, double expected, double n) {
  const double var = expected * (1.0 - expected) / n;
  if (var > 0.0) return (observed - expected) / std::sqrt(var);
  return observed == expected ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), observed - expected);
}

}  // namespace

SessionSummary score_session(std::span<const PulseRecord> calibrated, const ExperimentSettings& settings,
                             double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError({"threshold must be >= 0"});
  SessionSummary s;
  s.threshold = threshold;
  s.alpha = settings.alpha;
  s.eta = settings.channel.transmittance();
  s.convention = settings.convention;
  for (const auto& r : calibrated) {
    if (!r.is_signal()) continue;
    if (!r.calibrated) throw std::invalid_argument("score_session: session is not calibrated");
    ++s.n_sent;
    const double beta = *r.calibrated;
    if (!(std::abs(beta) > threshold)) continue;
    ++s.n_accepted;
    if ((beta > 0.0) != *r.alice_bit) ++s.n_errors;
    s.accepted_magnitudes.push_back(std::abs(beta));
  }
  std::sort(s.accepted_magnitudes.begin(), s.accepted_magnitudes.end());

  // Subtracting a mean of `window` vacuum outcomes adds V / window to every
  // calibrated variance.
  const double calibration_noise = 1.0 / settings.plan.calibration_window;
  const BpskOutcomes reference = BpskOutcomes::received(
      settings.alpha, s.eta, settings.convention, settings.reference_excess_noise + calibration_noise);
  s.analytic_acceptance = reference.acceptance(threshold);
  s.analytic_error = reference.error_rate(threshold);

  const double sent = static_cast<double>(s.n_sent);
  s.empirical_acceptance = static_cast<double>(s.n_accepted) / sent;
  s.z_acceptance = binomial_z(s.empirical_acceptance, s.analytic_acceptance, sent);
  if (s.n_accepted > 0) {
    const double accepted = static_cast<double>(s.n_accepted);
    s.empirical_error = static_cast<double>(s.n_errors) / accepted;
    s.z_error = binomial_z(*s.empirical_error, s.analytic_error, accepted);
  }
  return s;
}

SessionSummary run_experiment(const ExperimentSettings& settings, double threshold) {
  if (settings.n_pulses < 1000) throw ValidationError({"montecarlo.pulses must be >= 1000"});
  const auto session = simulate_session(settings);
  return score_session(session, settings, threshold);
}

std::vector<SessionSummary> run_threshold_sweep(const ExperimentSettings& settings,
                                                std::span<const double> thresholds) {
  FieldChecker check;
  check.require(!thresholds.empty(), "threshold grid must not be empty");
  check.require(settings.n_pulses >= 1000, "montecarlo.pulses must be >= 1000");
  check.throw_if_failed();
  const auto session = simulate_session(settings);
  std::vector<SessionSummary> out;
  out.reserve(thresholds.size());
  for (const double t : thresholds) out.push_back(score_session(session, settings, t));
  return out;
}

std::string summary_csv_header() {
  return "threshold,n_sent,n_accepted,n_errors,empirical_error,empirical_acceptance,analytic_error,"
         "analytic_acceptance,z_error,z_acceptance";
}

std::string summary_csv_row(const SessionSummary& s) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  return format_double(s.threshold) + ',' + std::to_string(s.n_sent) + ',' + std::to_string(s.n_accepted) + ',' +
         std::to_string(s.n_errors) + ',' + opt(s.empirical_error) + ',' + format_double(s.empirical_acceptance) +
         ',' + format_double(s.analytic_error) + ',' + format_double(s.analytic_acceptance) + ',' + opt(s.z_error) +
         ',' + format_double(s.z_acceptance);
}

double freedman_diaconis_width(std::span<const double> sorted) {
  if (sorted.size() < 4) throw InsufficientDataError("freedman_diaconis_width: need >= 4 samples");
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  return 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(sorted.size()));
}

double empirical_key_rate(const SessionSummary& summary, const CascadeModel& cascade, EveKnowledge eve,
                          const HistogramOptions& options) {
  if (summary.n_accepted < options.min_samples) {
    throw InsufficientDataError("empirical_key_rate: " + std::to_string(summary.n_accepted) +
                                " accepted pulses, need " + std::to_string(options.min_samples));
  }
  SecurityContext ctx;
  ctx.alpha = summary.alpha;
  ctx.eta = summary.eta;
  ctx.cascade = cascade;
  ctx.convention = summary.convention;
  ctx.eve = eve;

  double cut = summary.threshold;
  const IntegrandRoot root = find_integrand_root(ctx);
  if (root.found) cut = std::max(cut, root.root);

  const auto& mags = summary.accepted_magnitudes;
  const auto first = std::lower_bound(mags.begin(), mags.end(), cut);
  const std::span<const double> region(first, mags.end());
  if (root.found && region.size() < options.min_samples) {
    throw InsufficientDataError("empirical_key_rate: only " + std::to_string(region.size()) +
                                " outcomes beyond the zero crossing " + format_double(cut));
  }
  if (region.size() < 4) return 0.0;

  const double width = options.bin_width > 0.0 ? options.bin_width : freedman_diaconis_width(region);
  if (!(width > 0.0)) throw InsufficientDataError("empirical_key_rate: degenerate histogram");
  const auto n_bins = static_cast<std::size_t>(std::floor((region.back() - cut) / width)) + 1;

  std::vector<std::uint64_t> counts(n_bins, 0);
  for (const double b : region) counts[std::min(n_bins - 1, static_cast<std::size_t>((b - cut) / width))]++;
  double g = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (counts[i] == 0) continue;
    const double centre = cut + (static_cast<double>(i) + 0.5) * width;
    g += key_integrand(centre, ctx) * static_cast<double>(counts[i]);
  }
  g /= static_cast<double>(summary.n_sent);
  return std::max(g, 0.0);
}

}  // namespace cvqkd
