#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"

using namespace cvqkd;

TEST(Channel, rooftop_transmittance) {
  EXPECT_NEAR(overall_transmittance(ChannelParams::rooftop()), 0.6391, 1e-12);
  EXPECT_NEAR(overall_transmittance(ChannelParams::rooftop()), 0.64, 0.005);
  EXPECT_EQ(overall_transmittance({1.0, 1.0, 0.0, 0.0}), 1.0);
  EXPECT_EQ(overall_transmittance({0.5, 0.5, 0.0, 0.0}), 0.25);
}

TEST(Channel, validation_lists_every_field) {
  const ChannelParams bad{0.0, 1.5, -1.0, 0.5};
  try {
    bad.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.problems().size(), 4u);
  }
  EXPECT_THROW(overall_transmittance(bad), ValidationError);
}

TEST(Channel, attenuation) {
  EXPECT_NEAR(attenuate_amplitude(0.80, 0.64), 0.64, 1e-15);
  EXPECT_EQ(attenuate_amplitude(0.7, 1.0), 0.7);
  EXPECT_EQ(attenuate_amplitude(0.0, 0.3), 0.0);
  EXPECT_THROW(attenuate_amplitude(1.0, 0.0), std::domain_error);
  EXPECT_THROW(attenuate_amplitude(-1.0, 0.5), std::domain_error);
}

TEST(Channel, unbalance_bound) {
  EXPECT_EQ(unbalance_excess_noise(0.0), 0.0);
  EXPECT_EQ(unbalance_excess_noise(0.01), 0.01);
  EXPECT_EQ(unbalance_excess_noise(0.02), 0.02);
  EXPECT_THROW(unbalance_excess_noise(0.06), ValidationError);
  EXPECT_THROW(unbalance_excess_noise(-0.01), ValidationError);
  EXPECT_DOUBLE_EQ((ChannelParams{0.9, 0.9, 0.03, 0.01}.total_excess_noise()), 0.04);
}

TEST(Channel, transmittance_commutative_and_monotone) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    EXPECT_EQ(overall_transmittance({a, b, 0, 0}), overall_transmittance({b, a, 0, 0}));
    if (a < c) EXPECT_LE(overall_transmittance({a, b, 0, 0}), overall_transmittance({c, b, 0, 0}));
  }
}

TEST(Channel, loss_composition) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double alpha = 3.0 * u(rng), e1 = u(rng), e2 = u(rng);
    EXPECT_NEAR(attenuate_amplitude(attenuate_amplitude(alpha, e1), e2), attenuate_amplitude(alpha, e1 * e2), 1e-12);
  }
}
