#include "vvstab/adaptive.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vvstab {

namespace {

// Integrator step with clamping. Clamping after every step freezes the
// integral at the bound while the drive keeps pushing outward.
double Integrate(double value, double rate, double dt, double cap) {
  return std::clamp(value + dt * rate, -cap, cap);
}

}  // namespace

SignPair SignHeuristic(double v, double v_crit) {
  if (v > v_crit) return {-1, 1};
  return {1, -1};
}

SignPair UpdateSigns(const SignPair& previous, double v,
                     const AdaptiveParams& params) {
  if (params.hysteresis <= 0.0) return SignHeuristic(v, params.v_crit);
  if (v > params.v_crit + params.hysteresis) return {-1, 1};
  if (v <= params.v_crit - params.hysteresis) return {1, -1};
  return previous;
}

double StepReferenceFilter(double xi, double v, double tau, double dt) {
  if (dt * tau > 1.0) {
    throw std::invalid_argument("reference filter needs dt * tau <= 1");
  }
  return xi + dt * tau * (v - xi);
}

bool AdaptationActive(double v, double xi, double epsilon) {
  return std::abs(v - xi) > epsilon;
}

void StepPowerInjection(AdaptiveControllerState& state, double v,
                        const AdaptiveParams& params, double dt, bool use_p,
                        bool use_q) {
  if (!AdaptationActive(v, state.xi, params.epsilon)) return;
  const double e = std::abs(v - state.xi);
  if (use_p) {
    state.u_p = Integrate(state.u_p, -state.c * params.gamma_p * e, dt,
                          params.u_cap);
  }
  if (use_q) {
    state.u_q = Integrate(state.u_q, -state.c * params.gamma_q * e, dt,
                          params.u_cap);
  }
}

void StepVoltageBias(AdaptiveControllerState& state, double v,
                     const AdaptiveParams& params, double dt) {
  if (!AdaptationActive(v, state.xi, params.epsilon)) return;
  const double e = std::abs(v - state.xi);
  state.w = Integrate(state.w, -state.d * params.gamma_v * e, dt, params.w_cap);
}

double BiasedVoltage(double v, double w) { return v + w; }

void StepController(AdaptiveControllerState& state, AdaptiveMode mode,
                    double v, const AdaptiveParams& params, double dt) {
  SignPair signs = UpdateSigns({state.c, state.d}, v, params);
  state.c = signs.c;
  state.d = signs.d;
  switch (mode) {
    case AdaptiveMode::kBias:
      StepVoltageBias(state, v, params, dt);
      break;
    case AdaptiveMode::kInjectionP:
      StepPowerInjection(state, v, params, dt, true, false);
      break;
    case AdaptiveMode::kInjectionQ:
      StepPowerInjection(state, v, params, dt, false, true);
      break;
    case AdaptiveMode::kInjectionPQ:
      StepPowerInjection(state, v, params, dt, true, true);
      break;
  }
  state.xi = StepReferenceFilter(state.xi, v, params.tau, dt);
}

}  // namespace vvstab
