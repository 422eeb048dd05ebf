#pragma once

namespace vvstab {

enum class AdaptiveMode { kBias, kInjectionP, kInjectionQ, kInjectionPQ };

struct AdaptiveParams {
  double tau = 0.1;  // 1/s
  double gamma_p = 0.0;
  double gamma_q = 0.0;
  double gamma_v = 0.0;
  double epsilon = 1e-4;
  double v_crit = 1.0;
  double hysteresis = 0.0;  // half-width of the sign-switching band
  double u_cap = 0.0;       // |u_p|, |u_q| limit; set from device rating
  double w_cap = 0.1;

  bool operator==(const AdaptiveParams&) const = default;
};

struct AdaptiveControllerState {
  double xi = 1.0;
  double u_p = 0.0;
  double u_q = 0.0;
  double w = 0.0;
  int c = 1;
  int d = -1;
};

struct SignPair {
  int c = 1;
  int d = -1;
};

SignPair SignHeuristic(double v, double v_crit);

// Heuristic with an optional dead zone of +-hysteresis around v_crit where
// the previous selectors are kept.
SignPair UpdateSigns(const SignPair& previous, double v,
                     const AdaptiveParams& params);

// xi + dt tau (v - xi). Requires dt tau <= 1.
double StepReferenceFilter(double xi, double v, double tau, double dt);

// True when |v - xi| > epsilon.
bool AdaptationActive(double v, double xi, double epsilon);

// Integrates u_p (if use_p) and u_q (if use_q) with the current xi and
// selectors; xi itself is not advanced.
void StepPowerInjection(AdaptiveControllerState& state, double v,
                        const AdaptiveParams& params, double dt, bool use_p,
                        bool use_q);

void StepVoltageBias(AdaptiveControllerState& state, double v,
                     const AdaptiveParams& params, double dt);

double BiasedVoltage(double v, double w);

// Full per-step controller update: selectors, integrators from the old xi,
// then the reference filter.
void StepController(AdaptiveControllerState& state, AdaptiveMode mode,
                    double v, const AdaptiveParams& params, double dt);

}  // namespace vvstab
