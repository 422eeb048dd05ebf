#include "test_util.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "vvstab/io.h"

namespace vvstab::testing {

std::string ScenarioPath(const std::string& name) {
  return std::string(VVSTAB_SCENARIO_DIR) + "/" + name + ".json";
}

ScenarioConfig LoadScenario(const std::string& name) {
  return ParseScenario(ScenarioPath(name));
}

FeederTopology RandomTree(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> imp(0.001, 0.05);
  std::bernoulli_distribution flip(0.5);
  FeederTopology topo;
  topo.v0 = 1.0;
  for (int k = 1; k <= n; ++k) {
    topo.node_names.push_back("n" + std::to_string(k));
    std::uniform_int_distribution<int> pick(0, k - 1);
    const int parent = pick(rng);
    Line line{parent, k, imp(rng), imp(rng)};
    if (flip(rng)) std::swap(line.from, line.to);
    topo.lines.push_back(line);
  }
  std::shuffle(topo.lines.begin(), topo.lines.end(), rng);
  return topo;
}

void BruteForceImpedance(const FeederTopology& topology, Eigen::MatrixXd* R,
                         Eigen::MatrixXd* X) {
  const int n = topology.num_nodes();
  // Root path of every node as an ordered list of line indices, found by
  // depth-first search over the raw line list.
  std::vector<std::vector<int>> path(n + 1);
  std::vector<bool> seen(n + 1, false);
  std::function<void(int, std::vector<int>&)> walk =
      [&](int node, std::vector<int>& current) {
        seen[node] = true;
        path[node] = current;
        for (int k = 0; k < static_cast<int>(topology.lines.size()); ++k) {
          const Line& l = topology.lines[k];
          int other = -1;
          if (l.from == node) other = l.to;
          if (l.to == node) other = l.from;
          if (other < 0 || seen[other]) continue;
          current.push_back(k);
          walk(other, current);
          current.pop_back();
        }
      };
  std::vector<int> start;
  walk(0, start);

  R->setZero(n, n);
  X->setZero(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      double r = 0.0;
      double x = 0.0;
      for (int k : path[i]) {
        if (std::find(path[j].begin(), path[j].end(), k) == path[j].end()) {
          continue;
        }
        r += topology.lines[k].r;
        x += topology.lines[k].x;
      }
      (*R)(i - 1, j - 1) = r;
      (*X)(i - 1, j - 1) = x;
    }
  }
}

double DenseSamplingLipschitz(const PiecewiseCurve& curve, double max_output,
                              int samples) {
  const auto& bps = curve.breakpoints();
  const double lo = bps.front().v - 0.1;
  const double hi = bps.back().v + 0.1;
  const double h = (hi - lo) / (samples - 1);
  double worst = 0.0;
  double prev = curve.Eval(lo);
  for (int k = 1; k < samples; ++k) {
    const double v = lo + k * h;
    const double cur = curve.Eval(v);
    worst = std::max(worst, std::abs(cur - prev) / h);
    prev = cur;
  }
  return worst * max_output;
}

OracleEquilibrium DampedFixedPoint(const ScenarioConfig& config,
                                   const FinalState& state) {
  const int n = config.num_nodes();
  const int m = static_cast<int>(config.devices.size());
  Eigen::MatrixXd R, X;
  BruteForceImpedance(config.feeder, &R, &X);

  OracleEquilibrium out;
  out.p.assign(m, 0.0);
  out.q.assign(m, 0.0);
  const double beta = 0.02;
  for (int it = 1; it <= 2000000; ++it) {
    Eigen::VectorXd p_net = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_net = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      p_net(i) = -state.load_p[i];
      q_net(i) = -state.load_q[i];
    }
    for (int d = 0; d < m; ++d) {
      const int node = config.devices[d].node - 1;
      p_net(node) += out.p[d] + state.u_p[d];
      q_net(node) += out.q[d] + state.u_q[d];
    }
    const Eigen::VectorXd v =
        Eigen::VectorXd::Constant(n, config.feeder.v0) + R * p_net + X * q_net;
    double change = 0.0;
    for (int d = 0; d < m; ++d) {
      const DeviceConfig& dc = config.devices[d];
      const Setpoint target =
          EvalSetpoint(state.curves[d].volt_var, state.curves[d].volt_watt,
                       dc.rating, v(dc.node - 1) + state.w[d]);
      const double np = out.p[d] + beta * (target.p - out.p[d]);
      const double nq = out.q[d] + beta * (target.q - out.q[d]);
      change = std::max({change, std::abs(np - out.p[d]),
                         std::abs(nq - out.q[d])});
      out.p[d] = np;
      out.q[d] = nq;
    }
    out.iterations = it;
    if (change < 1e-14) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double BilinearHighPassGain(double f_cut, double f_hz, double dt) {
  const double k = 2.0 / dt;
  const double w = 2.0 * std::numbers::pi * f_cut;
  const std::complex<double> z_inv =
      std::polar(1.0, -2.0 * std::numbers::pi * f_hz * dt);
  const std::complex<double> s = k * (1.0 - z_inv) / (1.0 + z_inv);
  return std::abs(s / (s + w));
}

double MedianFeederEnergy(const SimulationTrace& trace, double t0, double t1) {
  std::vector<double> medians;
  for (const TraceRow& row : trace.rows) {
    if (row.t < t0 || row.t >= t1) continue;
    medians.push_back(Percentile(row.y, 0.5));
  }
  return Percentile(medians, 0.5);
}

}  // namespace vvstab::testing
