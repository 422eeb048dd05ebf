#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vvstab {

// A line between two node ids. The substation is id 0; load nodes are 1..n.
struct Line {
  int from = 0;
  int to = 0;
  double r = 0.0;  // per-unit
  double x = 0.0;  // per-unit

  bool operator==(const Line&) const = default;
};

struct FeederTopology {
  // Labels for nodes 1..n; node_names[i] belongs to node id i + 1.
  std::vector<std::string> node_names;
  std::vector<Line> lines;
  double v0 = 1.0;
  std::string substation = "0";  // label of node id 0

  int num_nodes() const { return static_cast<int>(node_names.size()); }
  bool operator==(const FeederTopology&) const = default;
};

struct RadialityReport {
  std::vector<std::vector<int>> cycles;
  std::vector<int> disconnected;
  std::vector<std::pair<int, int>> duplicates;
  // Out-of-range ids, self loops, negative impedances, wrong line count.
  std::vector<std::string> other;

  bool ok() const {
    return cycles.empty() && disconnected.empty() && duplicates.empty() &&
           other.empty();
  }
  std::string Describe() const;
};

struct ImpedanceMatrices {
  Eigen::MatrixXd R;  // n x n
  Eigen::MatrixXd X;  // n x n
  Eigen::MatrixXd Z;  // n x 2n, [R, X]

  int n() const { return static_cast<int>(R.rows()); }
};

// Net injections in per-unit, generation positive. Stacked as [p; q].
struct InjectionVector {
  Eigen::VectorXd p;
  Eigen::VectorXd q;

  static InjectionVector Zero(int n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
  Eigen::VectorXd Stacked() const;
};

RadialityReport ValidateRadial(const FeederTopology& topology);

// Throws StructuralError naming the offending cycle or disconnected node.
ImpedanceMatrices BuildImpedanceMatrices(const FeederTopology& topology);

// v = v0 1 + Z (s_g - s_c). Throws std::invalid_argument on size mismatch.
Eigen::VectorXd SolveVoltages(const ImpedanceMatrices& mats,
                              const InjectionVector& s_g,
                              const InjectionVector& s_c, double v0);

// Same map on an already stacked net injection s = s_g - s_c.
Eigen::VectorXd SolveVoltages(const ImpedanceMatrices& mats,
                              const Eigen::VectorXd& s_net, double v0);

}  // namespace vvstab
