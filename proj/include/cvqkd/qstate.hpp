#pragma once

// Coherent-state and Stokes-operator helpers shared by the rest of the
// library. Outcomes of the S2 homodyne measurement are real numbers whose
// mean equals the signal amplitude and whose vacuum variance is set by the
// QuadratureConvention.

namespace cvqkd {

struct QuadratureConvention {
  // Variance of a vacuum outcome. A state with excess noise eps has
  // variance (1 + eps) * vacuum_variance.
  double vacuum_variance = 0.25;
  // Outcome mean per unit of coherent amplitude.
  double coherent_mean_scale = 1.0;

  // Mean = amplitude, vacuum variance 1/4. The postselected error-rate
  // curve erfc[sqrt2 (b0 + sqrt(eta) a)] / 2P is exact in this convention.
  static constexpr QuadratureConvention quarter() { return {0.25, 1.0}; }
  // Mean = amplitude, vacuum variance 1/2. Key-rate and threshold numbers of
  // the reference operating point (b0 = 1.18, G = 0.032) live here.
  static constexpr QuadratureConvention half() { return {0.5, 1.0}; }

  double outcome_variance(double excess_noise = 0.0) const {
    return (1.0 + excess_noise) * vacuum_variance;
  }
  double outcome_mean(double amplitude) const { return coherent_mean_scale * amplitude; }

  // Throws ValidationError unless both fields are finite and positive.
  void validate() const;

  friend bool operator==(const QuadratureConvention&, const QuadratureConvention&) = default;
};

// Mean photon-flux Stokes parameters of a beam.
struct StokesMeans {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
};

// |<gamma|-gamma>| = exp(-2 gamma^2) for a real amplitude gamma >= 0.
double coherent_overlap(double gamma);
// Natural log of coherent_overlap; finite for every gamma.
double log_coherent_overlap(double gamma);

// Minimum allowed Var(S2) * Var(S3) for a beam with mean S1.
double stokes_uncertainty_bound(double s1_mean);

// True when the product of the measured variances respects the bound
// (within a relative slack).
bool respects_uncertainty(const StokesMeans& means, double var_s2, double var_s3,
                          double relative_slack = 0.0);

// Coherent-limit certification of a bright S1-polarized beam: the S2 variance
// must match |<S0>| within `tolerance` (relative).
bool shot_noise_check(double s0_mean, double var_s2, double tolerance);

}  // namespace cvqkd
