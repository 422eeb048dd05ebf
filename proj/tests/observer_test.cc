#include "vvstab/observer.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_util.h"

namespace vvstab {
namespace {

double Sine(double a, double f, double t) {
  return a * std::sin(2.0 * std::numbers::pi * f * t);
}

// Mean of y over the last `tail` of `steps` samples of a sinusoid.
double SteadySineEnergy(const ObserverParams& params, double a, double f,
                        double offset, int steps = 3000, int tail = 500) {
  OscillationObserver obs(params, 1.0);
  double sum = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double y = obs.Step(offset + Sine(a, f, k));
    if (k >= steps - tail) sum += y;
  }
  return sum / tail;
}

TEST(ObserverTest, ConstantInputGivesZero) {
  OscillationObserver obs({}, 1.0);
  for (int k = 0; k < 1000; ++k) obs.Step(1.037);
  EXPECT_LE(std::abs(obs.y()), 1e-9);
  EXPECT_EQ(obs.y(), 0.0);
}

TEST(ObserverTest, AlternatingSquareWave) {
  // At the alternation frequency the bilinear high-pass passes the wave
  // unchanged, so the squared signal is the constant a^2 and the unit-DC-gain
  // low-pass settles on gain * a^2.
  const double a = 0.03;
  const ObserverParams params{0.05, 0.02, 2.5};
  OscillationObserver obs(params, 1.0);
  for (int k = 0; k < 3000; ++k) obs.Step(1.0 + ((k % 2) ? a : -a));
  EXPECT_NEAR(obs.y(), params.gain * a * a, 1e-9);
}

TEST(ObserverTest, SineMatchesFrequencyResponse) {
  const ObserverParams params{0.05, 0.02, 1.0};
  for (double f : {0.1, 0.2, 0.3}) {
    const double a = 0.02;
    const double g = testing::BilinearHighPassGain(params.f_high, f, 1.0);
    const double expected = params.gain * 0.5 * a * a * g * g;
    EXPECT_NEAR(SteadySineEnergy(params, a, f, 1.0), expected,
                0.03 * expected)
        << f;
  }
}

TEST(ObserverTest, GainIsLinear) {
  const double y1 = SteadySineEnergy({0.05, 0.02, 1.0}, 0.01, 0.2, 1.0);
  const double y2 = SteadySineEnergy({0.05, 0.02, 2.0}, 0.01, 0.2, 1.0);
  EXPECT_NEAR(y2, 2.0 * y1, 1e-12 * y1);
}

TEST(ObserverTest, ConstantOffsetDoesNotChangeEnergy) {
  OscillationObserver a({}, 1.0), b({}, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double s = Sine(0.01, 0.15, k) + Sine(0.004, 0.37, k);
    a.Step(1.0 + s);
    b.Step(0.93 + s);
    EXPECT_NEAR(a.y(), b.y(), 1e-12);
  }
}

TEST(ObserverTest, EnergyScalesQuadratically) {
  const ObserverParams params;
  for (double f : {0.1, 0.25, 0.4}) {
    const double y1 = SteadySineEnergy(params, 0.01, f, 1.0);
    for (double k : {2.0, 5.0}) {
      const double yk = SteadySineEnergy(params, 0.01 * k, f, 1.0);
      EXPECT_NEAR(yk / y1, k * k, 0.05 * k * k) << f << " " << k;
    }
  }
}

TEST(ObserverTest, RejectsBadParameters) {
  EXPECT_THROW(OscillationObserver({0.05, 0.02, 1.0}, 0.0),
               std::invalid_argument);
  EXPECT_THROW(OscillationObserver({0.05, 0.02, 0.0}, 1.0),
               std::invalid_argument);
  EXPECT_THROW(OscillationObserver({-0.05, 0.02, 1.0}, 1.0),
               std::invalid_argument);
  EXPECT_THROW(OscillationObserver({0.5, 0.02, 1.0}, 1.0),
               std::invalid_argument);
}

}  // namespace
}  // namespace vvstab
