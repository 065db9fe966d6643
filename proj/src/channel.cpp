#include "cvqkd/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "cvqkd/errors.hpp"

namespace cvqkd {

namespace {
constexpr double kUnbalanceDomain = 0.05;

bool in_unit_interval(double x) { return std::isfinite(x) && x > 0.0 && x <= 1.0; }
}  // namespace

void ChannelParams::validate() const {
  FieldChecker check;
  check.require(in_unit_interval(eta_ch), "channel.eta_ch must lie in (0, 1]");
  check.require(in_unit_interval(eta_det), "channel.eta_det must lie in (0, 1]");
  check.require(std::isfinite(excess_noise) && excess_noise >= 0.0,
                "channel.excess_noise must be >= 0");
  check.require(std::isfinite(unbalance) && unbalance >= 0.0 && unbalance <= max_unbalance,
                "channel.unbalance must lie in [0, 0.02]");
  check.throw_if_failed();
}

double ChannelParams::total_excess_noise() const {
  return excess_noise + unbalance_excess_noise(unbalance);
}

double overall_transmittance(const ChannelParams& params) {
  params.validate();
  return params.transmittance();
}

double attenuate_amplitude(double alpha, double eta) {
  if (!(alpha >= 0.0)) throw std::domain_error("attenuate_amplitude: alpha must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::domain_error("attenuate_amplitude: eta must lie in (0, 1]");
  return std::sqrt(eta) * alpha;
}

double unbalance_excess_noise(double unbalance) {
  if (!(unbalance >= 0.0 && unbalance <= kUnbalanceDomain)) {
    throw ValidationError({"unbalance must lie in [0, 0.05]"});
  }
  return unbalance;
}

}  // namespace cvqkd
