#include "vvstab/inverter.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vvstab/errors.h"

namespace vvstab {

PiecewiseCurve::PiecewiseCurve(std::vector<Breakpoint> breakpoints,
                               double v_nom)
    : breakpoints_(std::move(breakpoints)), v_nom_(v_nom) {
  if (auto problem = Check(breakpoints_)) throw ConfigError(*problem);
}

std::optional<std::string> PiecewiseCurve::Check(
    const std::vector<Breakpoint>& breakpoints) {
  if (breakpoints.empty()) return "curve has no breakpoints";
  for (size_t k = 0; k < breakpoints.size(); ++k) {
    if (!std::isfinite(breakpoints[k].v) ||
        !std::isfinite(breakpoints[k].output)) {
      return "breakpoint " + std::to_string(k) + " is not finite";
    }
    if (k == 0) continue;
    if (!(breakpoints[k].v > breakpoints[k - 1].v)) {
      return "breakpoint voltages must strictly increase (index " +
             std::to_string(k) + ")";
    }
    if (breakpoints[k].output > breakpoints[k - 1].output) {
      return "breakpoint outputs must not increase with voltage (index " +
             std::to_string(k) + ")";
    }
  }
  return std::nullopt;
}

PiecewiseCurve PiecewiseCurve::VoltVar(double deadband, double droop_width,
                                       double v_nom) {
  return PiecewiseCurve({{v_nom - deadband - droop_width, 1.0},
                         {v_nom - deadband, 0.0},
                         {v_nom + deadband, 0.0},
                         {v_nom + deadband + droop_width, -1.0}},
                        v_nom);
}

PiecewiseCurve PiecewiseCurve::VoltWatt(double v_start, double v_end,
                                        double v_nom) {
  return PiecewiseCurve({{v_start, 1.0}, {v_end, 0.0}}, v_nom);
}

double PiecewiseCurve::Eval(double v) const {
  if (v <= breakpoints_.front().v) return breakpoints_.front().output;
  if (v >= breakpoints_.back().v) return breakpoints_.back().output;
  auto hi = std::upper_bound(
      breakpoints_.begin(), breakpoints_.end(), v,
      [](double value, const Breakpoint& b) { return value < b.v; });
  auto lo = hi - 1;
  const double t = (v - lo->v) / (hi->v - lo->v);
  return lo->output + t * (hi->output - lo->output);
}

double PiecewiseCurve::SlopeAt(double v) const {
  if (v < breakpoints_.front().v || v >= breakpoints_.back().v) return 0.0;
  auto hi = std::upper_bound(
      breakpoints_.begin(), breakpoints_.end(), v,
      [](double value, const Breakpoint& b) { return value < b.v; });
  auto lo = hi - 1;
  return (hi->output - lo->output) / (hi->v - lo->v);
}

double PiecewiseCurve::MaxAbsSlope() const {
  double worst = 0.0;
  for (size_t k = 1; k < breakpoints_.size(); ++k) {
    const double slope = (breakpoints_[k].output - breakpoints_[k - 1].output) /
                         (breakpoints_[k].v - breakpoints_[k - 1].v);
    worst = std::max(worst, std::abs(slope));
  }
  return worst;
}

double InverterRating::q_max() const { return std::min(q_lim, s_bar); }

std::optional<std::string> InverterRating::Check() const {
  if (!(s_bar > 0.0)) return "s_bar must be > 0";
  if (!(lambda > 0.0 && lambda <= 1.0)) return "lambda must be in (0, 1]";
  if (!(q_lim >= 0.0)) return "q_lim must be >= 0";
  return std::nullopt;
}

double EvalVoltWatt(const PiecewiseCurve& curve, double v, double p_bar) {
  return p_bar * std::clamp(curve.Eval(v), 0.0, 1.0);
}

double AvailableReactive(const InverterRating& rating, double p_set) {
  if (p_set > rating.s_bar || p_set < 0.0) {
    std::ostringstream msg;
    msg << "active setpoint " << p_set << " outside [0, " << rating.s_bar
        << "]";
    throw DomainError(msg.str());
  }
  return std::min(rating.q_lim,
                  std::sqrt(rating.s_bar * rating.s_bar - p_set * p_set));
}

double EvalVoltVar(const PiecewiseCurve& curve, double v, double q_bar) {
  return q_bar * std::clamp(curve.Eval(v), -1.0, 1.0);
}

double LipschitzConstant(const PiecewiseCurve& curve, double max_output) {
  return curve.MaxAbsSlope() * max_output;
}

Setpoint EvalSetpoint(const PiecewiseCurve& volt_var,
                      const PiecewiseCurve& volt_watt,
                      const InverterRating& rating, double v) {
  Setpoint out;
  out.p = EvalVoltWatt(volt_watt, v, rating.p_bar());
  out.q = EvalVoltVar(volt_var, v, AvailableReactive(rating, out.p));
  return out;
}

InverterState StepFilter(const InverterState& state, double target_p,
                         double target_q, double dt) {
  if (!(dt > 0.0) || !(dt < 2.0 * std::min(state.t_p, state.t_q))) {
    throw std::invalid_argument("filter step dt must satisfy 0 < dt < 2 min(T)");
  }
  InverterState next = state;
  next.p += (dt / state.t_p) * (target_p - state.p);
  next.q += (dt / state.t_q) * (target_q - state.q);
  return next;
}

}  // namespace vvstab
