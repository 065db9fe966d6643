#pragma once

namespace cvqkd {

// Lossy free-space channel seen by one BPSK pulse. Losses in the channel and
// in Bob's detector are both attributed to the eavesdropper.
struct ChannelParams {
  double eta_ch = 1.0;        // channel transmittance, (0, 1]
  double eta_det = 1.0;       // detection efficiency, (0, 1]
  double excess_noise = 0.0;  // shot-noise units, >= 0
  double unbalance = 0.0;     // homodyne unbalance fraction, [0, 0.02]

  static constexpr double max_unbalance = 0.02;

  // 100 m rooftop link: retro-reflector dominated channel loss and 17%
  // detection loss.
  static constexpr ChannelParams rooftop() { return {0.77, 0.83, 0.0, 0.0}; }

  double transmittance() const { return eta_ch * eta_det; }
  // excess_noise plus the unbalance contribution.
  double total_excess_noise() const;

  // Throws ValidationError listing every out-of-range field.
  void validate() const;
};

double overall_transmittance(const ChannelParams& params);

// sqrt(eta) * alpha: amplitude surviving a channel of transmittance eta.
double attenuate_amplitude(double alpha, double eta);

// Excess noise (shot-noise units) induced by a fractional detector unbalance.
// Linear upper bound: unbalance u contributes at most u.
double unbalance_excess_noise(double unbalance);

}  // namespace cvqkd
