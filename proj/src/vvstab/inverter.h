#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vvstab {

struct Breakpoint {
  double v = 0.0;       // per-unit voltage
  double output = 0.0;  // fraction of available capacity

  bool operator==(const Breakpoint&) const = default;
};

// Piecewise-linear droop curve with flat extension outside the breakpoints.
// Voltages strictly increase and outputs weakly decrease.
class PiecewiseCurve {
 public:
  PiecewiseCurve() = default;

  // Throws ConfigError when the breakpoints break the curve invariants.
  explicit PiecewiseCurve(std::vector<Breakpoint> breakpoints,
                          double v_nom = 1.0);

  // Empty optional when valid, otherwise the first violated invariant.
  static std::optional<std::string> Check(
      const std::vector<Breakpoint>& breakpoints);

  // Volt-VAR droop: zero inside v_nom +- deadband, full injection below
  // v_nom - deadband - droop_width, full absorption above the mirror point.
  static PiecewiseCurve VoltVar(double deadband, double droop_width,
                                double v_nom = 1.0);
  // Volt-Watt curtailment: full output below v_start, zero above v_end.
  static PiecewiseCurve VoltWatt(double v_start, double v_end,
                                 double v_nom = 1.0);

  double Eval(double v) const;
  // Slope of the segment containing v; right-continuous at breakpoints and
  // zero on the flat extensions.
  double SlopeAt(double v) const;
  double MaxAbsSlope() const;

  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  double v_nom() const { return v_nom_; }

  bool operator==(const PiecewiseCurve&) const = default;

 private:
  std::vector<Breakpoint> breakpoints_;
  double v_nom_ = 1.0;
};

struct InverterRating {
  double s_bar = 1.0;
  double lambda = 1.0;
  double q_lim = 1.0;

  double p_bar() const { return lambda * s_bar; }
  // Conservative reactive capacity used for Lipschitz bounds.
  double q_max() const;
  std::optional<std::string> Check() const;

  bool operator==(const InverterRating&) const = default;
};

struct InverterState {
  double p = 0.0;
  double q = 0.0;
  double t_p = 1.0;
  double t_q = 1.0;
};

struct Setpoint {
  double p = 0.0;
  double q = 0.0;
};

double EvalVoltWatt(const PiecewiseCurve& curve, double v, double p_bar);

// min(q_lim, sqrt(s_bar^2 - p_set^2)); DomainError when p_set > s_bar.
double AvailableReactive(const InverterRating& rating, double p_set);

double EvalVoltVar(const PiecewiseCurve& curve, double v, double q_bar);

// Max absolute segment slope times max_output.
double LipschitzConstant(const PiecewiseCurve& curve, double max_output);

// Volt-Watt first, its setpoint sets the reactive headroom for Volt-VAR.
Setpoint EvalSetpoint(const PiecewiseCurve& volt_var,
                      const PiecewiseCurve& volt_watt,
                      const InverterRating& rating, double v);

// One explicit Euler step of T s_dot = target - s.
// Throws std::invalid_argument unless 0 < dt < 2 min(T_p, T_q).
InverterState StepFilter(const InverterState& state, double target_p,
                         double target_q, double dt);

}  // namespace vvstab
