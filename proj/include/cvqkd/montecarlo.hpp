#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/homodyne.hpp"
#include "cvqkd/security.hpp"

namespace cvqkd {

struct ExperimentSettings {
  std::uint64_t n_pulses = 1'000'000;
  double alpha = 0.8;
  ChannelParams channel = ChannelParams::rooftop();
  FramePlan plan = FramePlan::operational();
  std::uint64_t seed = 1;
  QuadratureConvention convention = QuadratureConvention::quarter();
  // Excess noise assumed by the analytic reference columns. Injecting noise
  // through `channel` while keeping this at 0 shows up in the z-scores.
  double reference_excess_noise = 0.0;
  Drift drift;
  // Signals per generator sub-stream. Results depend on this value, so it is
  // part of the reproducibility contract.
  std::uint64_t partition_size = 1 << 16;

  void validate() const;
};

struct SessionSummary {
  double threshold = 0.0;
  std::uint64_t n_sent = 0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_errors = 0;
  std::optional<double> empirical_error;  // absent when nothing was accepted
  double empirical_acceptance = 0.0;
  double analytic_error = 0.0;
  double analytic_acceptance = 0.0;
  std::optional<double> z_error;
  double z_acceptance = 0.0;

  // Inputs needed to evaluate the key-rate integrand on the accepted data.
  double alpha = 0.0;
  double eta = 1.0;
  QuadratureConvention convention;
  // |beta| of every accepted pulse, ascending.
  std::vector<double> accepted_magnitudes;
};

// Calibrated session built from independent per-partition sub-streams.
std::vector<PulseRecord> simulate_session(const ExperimentSettings& settings);

// Postselects |beta| > threshold on a calibrated session, decodes sign(beta)
// and compares with Alice's bits and with the analytic error curve.
SessionSummary score_session(std::span<const PulseRecord> calibrated, const ExperimentSettings& settings,
                             double threshold);

SessionSummary run_experiment(const ExperimentSettings& settings, double threshold);
// One session scored at several thresholds.
std::vector<SessionSummary> run_threshold_sweep(const ExperimentSettings& settings,
                                                std::span<const double> thresholds);

std::string summary_csv_header();
std::string summary_csv_row(const SessionSummary& summary);

struct HistogramOptions {
  double bin_width = 0.0;  // 0 selects the Freedman-Diaconis width
  std::uint64_t min_samples = 1000;
};

// Plug-in key rate: the accepted-outcome histogram stands in for p(beta),
// e(beta) and S[rho_E] are analytic. Negative totals are reported as 0.
double empirical_key_rate(const SessionSummary& summary, const CascadeModel& cascade,
                          EveKnowledge eve = EveKnowledge::outcome_magnitude,
                          const HistogramOptions& options = {});

// 2 * IQR * n^(-1/3) on sorted data.
double freedman_diaconis_width(std::span<const double> sorted);

}  // namespace cvqkd
