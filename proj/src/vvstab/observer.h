#pragma once

namespace vvstab {

struct ObserverParams {
  double f_high = 0.05;  // Hz, high-pass cutoff
  double f_low = 0.02;   // Hz, low-pass cutoff
  double gain = 1.0;

  bool operator==(const ObserverParams&) const = default;
};

// High-pass -> gain * square -> low-pass chain, each pole discretized with
// the bilinear transform. The high-pass memory is seeded with the first
// sample so a constant input produces exactly zero.
class OscillationObserver {
 public:
  // Throws std::invalid_argument for non-positive dt, gain or cutoffs, or
  // cutoffs at or above the point where the low-pass loses positivity.
  OscillationObserver(const ObserverParams& params, double dt);

  double Step(double v);

  double y() const { return lp_out_; }
  double highpass_output() const { return hp_out_; }

 private:
  double gain_;
  double hp_a_, hp_b_;  // y = hp_a * y_prev + hp_b * (x - x_prev)
  double lp_a_, lp_b_;  // y = lp_a * y_prev + lp_b * (x + x_prev)
  bool started_ = false;
  double hp_in_prev_ = 0.0;
  double hp_out_ = 0.0;
  double lp_in_prev_ = 0.0;
  double lp_out_ = 0.0;
};

}  // namespace vvstab
