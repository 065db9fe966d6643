#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/qstate.hpp"

namespace cvqkd {

// Reconciliation (CASCADE) efficiency f[e] >= 1: the classical error
// correction leaks f[e] * H[e] bits per accepted pulse.
class CascadeModel {
 public:
  enum class Mode { ideal, constant, table };

  // f == 1 (Shannon limit).
  static CascadeModel ideal();
  static CascadeModel constant(double f);
  // Piecewise-linear f over an error-rate grid, constant beyond the ends.
  // Points must be sorted by error rate, with f >= 1 and non-decreasing.
  static CascadeModel table(std::vector<std::pair<double, double>> points);
  // Benchmark table {(0.01,1.16),(0.05,1.16),(0.10,1.22),(0.15,1.35)}.
  static CascadeModel default_table();

  // Parses "ideal", "constant:<f>" or "table:<path>" (path holds "e,f" lines).
  static CascadeModel parse(const std::string& spec);

  double efficiency(double error_rate) const;
  Mode mode() const { return mode_; }
  const std::vector<std::pair<double, double>>& points() const { return points_; }
  std::string describe() const;

 private:
  CascadeModel(Mode mode, std::vector<std::pair<double, double>> points)
      : mode_(mode), points_(std::move(points)) {}

  Mode mode_;
  std::vector<std::pair<double, double>> points_;
};

// What Eve conditions her state on when the key rate is evaluated.
enum class EveKnowledge {
  // Eve learns |beta| from the public postselection; Alice's bit stays
  // equiprobable for her, so her state is the equal mixture of |+-gamma>.
  outcome_magnitude,
  // Eve's state weighted by Bob's posterior given the signed outcome beta.
  signed_outcome,
};

// Equal-prior BPSK outcome distribution: N(+mean, var) and N(-mean, var).
class BpskOutcomes {
 public:
  BpskOutcomes(double mean, double variance);
  // Outcome model for amplitude alpha sent through transmittance eta.
  static BpskOutcomes received(double alpha, double eta, const QuadratureConvention& convention = {},
                               double excess_noise = 0.0);

  double mean() const { return mean_; }
  double variance() const { return variance_; }

  double density(double beta) const;
  // Density of |beta| for beta >= 0 (twice the mixture density).
  double folded_density(double beta) const;
  // P(|beta| > threshold).
  double acceptance(double threshold) const;
  // P(wrong sign | |beta| > threshold).
  double error_rate(double threshold) const;
  // Posterior probability that sign(beta) is the wrong bit.
  double conditional_error(double beta) const;

 private:
  double mean_;
  double variance_;
};

// Shannon binary entropy in bits; 0 log 0 = 0.
double binary_entropy(double e);

// Von Neumann entropy (bits) of p_plus |gamma><gamma| + (1 - p_plus) |-gamma><-gamma|.
double two_state_entropy(double p_plus, double gamma);

double acceptance_probability(double alpha, double eta, double threshold,
                              const QuadratureConvention& convention = {});
double error_rate_postselected(double alpha, double eta, double threshold,
                               const QuadratureConvention& convention = {});
double conditional_error(double beta, double alpha, double eta,
                         const QuadratureConvention& convention = {});
// Entropy of Eve's beamsplitter share sqrt(1-eta) alpha, weighted by Bob's
// posterior given outcome beta.
double eve_holevo(double beta, double alpha, double eta, const QuadratureConvention& convention = {});

struct SecurityContext {
  double alpha = 0.0;
  double eta = 1.0;
  double threshold = 0.0;  // beta_0, in outcome units of `convention`
  CascadeModel cascade = CascadeModel::default_table();
  QuadratureConvention convention = QuadratureConvention::half();
  EveKnowledge eve = EveKnowledge::outcome_magnitude;
  // Integrate only where the integrand is positive (beta >= max(threshold,
  // zero crossing)). When false the integral starts at the threshold as
  // given, which is what the key-rate-versus-threshold curve shows.
  bool positive_part_only = true;

  double bob_mean() const;
  double eve_amplitude() const;  // sqrt(1 - eta) * alpha
  void validate() const;
};

// 1 - f[e] H[e] - S[rho_E] at outcome beta.
double key_integrand(double beta, const SecurityContext& ctx);

// Zero crossing of key_integrand in beta >= 0 (where I_AB = I_AE). The
// integrand is non-decreasing in |beta|; `found` is false when it is not
// positive anywhere within mean + 12 sigma.
struct IntegrandRoot {
  bool found = false;
  double root = 0.0;
  double lower = 0.0;  // final bracket
  double upper = 0.0;
  int iterations = 0;
};
IntegrandRoot find_integrand_root(const SecurityContext& ctx, double tolerance = 1e-10);

struct QuadratureSettings {
  int kronrod_points = 31;  // one of 15, 21, 31, 41, 51, 61
  double relative_tolerance = 1e-9;
  // Error floor in bits per pulse; far below any usable key rate.
  double absolute_tolerance = 1e-14;
  unsigned max_depth = 15;

  void validate() const;
};

struct KeyRateReport {
  double alpha = 0.0;
  double eta = 0.0;
  double threshold_requested = 0.0;
  double threshold = 0.0;  // lower integration limit actually used
  double key_rate = 0.0;   // G, bits per pulse
  double acceptance = 0.0;
  double error_rate = 0.0;
  double integration_error = 0.0;
  double tail_bound = 0.0;

  double throughput(double pulse_rate_hz) const;
};

// G = integral over beta >= threshold of (1 - f H - S) p(|beta|) dbeta.
// Throws ConvergenceError when the adaptive quadrature misses its tolerance.
KeyRateReport key_rate(const SecurityContext& ctx, const QuadratureSettings& settings = {});

// Secret bits per second.
double throughput(double key_rate_bits_per_pulse, double pulse_rate_hz);

// Flat `key = value` lines.
void write_report_text(std::ostream& out, const KeyRateReport& report, double pulse_rate_hz);
std::string report_csv_header();
std::string report_csv_row(const KeyRateReport& report, double pulse_rate_hz);

}  // namespace cvqkd
