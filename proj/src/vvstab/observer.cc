#include "vvstab/observer.h"

#include <numbers>
#include <stdexcept>

namespace vvstab {

OscillationObserver::OscillationObserver(const ObserverParams& params,
                                         double dt)
    : gain_(params.gain) {
  if (!(dt > 0.0) || !(params.gain > 0.0) || !(params.f_high > 0.0) ||
      !(params.f_low > 0.0)) {
    throw std::invalid_argument("observer needs positive dt, gain and cutoffs");
  }
  const double k = 2.0 / dt;
  const double wh = 2.0 * std::numbers::pi * params.f_high;
  const double wl = 2.0 * std::numbers::pi * params.f_low;
  if (!(wh < k) || !(wl < k)) {
    throw std::invalid_argument("observer cutoff too high for the time step");
  }
  hp_a_ = (k - wh) / (k + wh);
  hp_b_ = k / (k + wh);
  lp_a_ = (k - wl) / (k + wl);
  lp_b_ = wl / (k + wl);
}

double OscillationObserver::Step(double v) {
  if (!started_) {
    hp_in_prev_ = v;
    started_ = true;
  }
  hp_out_ = hp_a_ * hp_out_ + hp_b_ * (v - hp_in_prev_);
  hp_in_prev_ = v;
  const double energy = gain_ * hp_out_ * hp_out_;
  lp_out_ = lp_a_ * lp_out_ + lp_b_ * (energy + lp_in_prev_);
  lp_in_prev_ = energy;
  return lp_out_;
}

}  // namespace vvstab
