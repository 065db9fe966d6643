#include "cvqkd/qstate.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cvqkd/errors.hpp"

namespace cvqkd {

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::invalid_argument([&] {
        std::string joined = "validation failed:";
        for (const auto& p : problems) joined += "\n  - " + p;
        return joined;
      }()),
      problems_(std::move(problems)) {}

void QuadratureConvention::validate() const {
  FieldChecker check;
  check.require(std::isfinite(vacuum_variance) && vacuum_variance > 0.0,
                "convention.vacuum_variance must be finite and > 0");
  check.require(std::isfinite(coherent_mean_scale) && coherent_mean_scale > 0.0,
                "convention.coherent_mean_scale must be finite and > 0");
  check.throw_if_failed();
}

double log_coherent_overlap(double gamma) {
  if (!(gamma >= 0.0)) throw std::domain_error("coherent_overlap: gamma must be >= 0");
  return -2.0 * gamma * gamma;
}

double coherent_overlap(double gamma) { return std::exp(log_coherent_overlap(gamma)); }

double stokes_uncertainty_bound(double s1_mean) {
  if (!(s1_mean >= 0.0)) throw std::domain_error("stokes_uncertainty_bound: s1 must be >= 0");
  return s1_mean * s1_mean;
}

bool respects_uncertainty(const StokesMeans& means, double var_s2, double var_s3,
                          double relative_slack) {
  const double bound = stokes_uncertainty_bound(std::abs(means.s1));
  return var_s2 * var_s3 >= bound * (1.0 - relative_slack);
}

bool shot_noise_check(double s0_mean, double var_s2, double tolerance) {
  if (!(s0_mean > 0.0)) throw std::domain_error("shot_noise_check: s0 must be > 0");
  if (!(tolerance >= 0.0)) throw std::domain_error("shot_noise_check: tolerance must be >= 0");
  return std::abs(var_s2 - s0_mean) <= tolerance * s0_mean;
}

}  // namespace cvqkd
