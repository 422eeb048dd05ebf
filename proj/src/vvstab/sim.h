#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vvstab/feeder.h"
#include "vvstab/scenario.h"
#include "vvstab/stability.h"

namespace vvstab {

// Per-node sums of device Lipschitz constants (conservative outputs) and the
// per-node filter constants (smallest over the node's devices). Nodes without
// devices get zero constants and T = 1.
struct NodeLipschitz {
  Eigen::VectorXd c_p;
  Eigen::VectorXd c_q;
  Eigen::VectorXd t;  // 2n, [T_p; T_q]

  Eigen::MatrixXd C_s() const { return StackLipschitz(c_p, c_q); }
};

NodeLipschitz AggregateLipschitz(const ScenarioConfig& config,
                                 const std::vector<CurvePair>& curves);

// The sigma <= 1 test with M = T for the given curve set.
StabilityReport CurveSetReport(const ScenarioConfig& config,
                               const ImpedanceMatrices& mats,
                               const std::vector<CurvePair>& curves);

struct TraceRow {
  double t = 0.0;
  std::vector<double> v, p, q, xi, up, uq, w, y;  // per node
};

struct EventRecord {
  double time = 0.0;
  std::string description;
  bool rejected = false;
  std::optional<StabilityReport> report;
};

// Device filter states and controller outputs at the end of the run.
struct FinalState {
  std::vector<double> dev_p, dev_q;
  std::vector<double> u_p, u_q, w;  // per device, zero for non-adaptive
  std::vector<double> load_p, load_q;
  std::vector<CurvePair> curves;
};

struct SimulationTrace {
  std::vector<std::string> node_names;
  std::vector<TraceRow> rows;
  std::vector<EventRecord> events;
  std::vector<std::string> warnings;
  bool diverged = false;
  double divergence_time = 0.0;
  std::string divergence_note;
  double attack_time = 0.0;  // first event time, 0 without events
  std::string scenario_hash;
  std::string parameter_echo;  // serialized scenario
  FinalState final_state;
};

// Throws ConfigError when the scenario fails validation, NumericalError when
// the requested equilibrium start cannot be solved.
SimulationTrace RunScenario(const ScenarioConfig& config);

// Largest |target - state| over all device channels at the trace's final
// state, with adaptive terms frozen.
double EquilibriumResidual(const ScenarioConfig& config,
                           const SimulationTrace& trace);

struct NodeSummary {
  std::string node;
  double peak_y = 0.0;
  double peak_time = 0.0;
  std::optional<double> settling_time;  // empty: not settled
};

struct TraceSummary {
  double attack_time = 0.0;
  double threshold_fraction = 0.01;
  double hold = 30.0;
  bool diverged = false;
  std::vector<NodeSummary> nodes;
  std::vector<double> t, p25, p50, p75;  // feeder-wide y percentiles per step
};

// Peaks are taken over t >= attack time. A node whose peak is at or below
// 1e-12 never exceeded the threshold and settles at the attack time.
TraceSummary ComputeSummary(const SimulationTrace& trace,
                            double threshold_fraction = 0.01,
                            double hold = 30.0);

// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double Percentile(std::vector<double> values, double q);

}  // namespace vvstab
