#include "vvstab/feeder.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "vvstab/errors.h"

namespace vvstab {

namespace {

// Path between a and b in a forest given as an adjacency list, or empty.
std::vector<int> ForestPath(const std::vector<std::vector<int>>& adj, int a,
                            int b) {
  std::vector<int> prev(adj.size(), -1);
  std::vector<bool> seen(adj.size(), false);
  std::queue<int> frontier;
  frontier.push(a);
  seen[a] = true;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    if (u == b) break;
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = true;
        prev[w] = u;
        frontier.push(w);
      }
    }
  }
  if (!seen[b]) return {};
  std::vector<int> path;
  for (int u = b; u != -1; u = prev[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

int FindRoot(std::vector<int>& parent, int u) {
  while (parent[u] != u) {
    parent[u] = parent[parent[u]];
    u = parent[u];
  }
  return u;
}

}  // namespace

std::string RadialityReport::Describe() const {
  std::ostringstream out;
  for (const auto& cycle : cycles) {
    out << "cycle through nodes";
    for (int u : cycle) out << ' ' << u;
    out << "; ";
  }
  if (!disconnected.empty()) {
    out << "nodes not reachable from the substation:";
    for (int u : disconnected) out << ' ' << u;
    out << "; ";
  }
  for (const auto& [a, b] : duplicates) {
    out << "duplicate line " << a << "-" << b << "; ";
  }
  for (const auto& msg : other) out << msg << "; ";
  std::string s = out.str();
  if (s.size() >= 2) s.resize(s.size() - 2);
  return s;
}

Eigen::VectorXd InjectionVector::Stacked() const {
  Eigen::VectorXd s(p.size() + q.size());
  s << p, q;
  return s;
}

RadialityReport ValidateRadial(const FeederTopology& topology) {
  RadialityReport report;
  const int n = topology.num_nodes();
  if (!(topology.v0 > 0.0)) report.other.push_back("v0 must be positive");
  if (static_cast<int>(topology.lines.size()) != n) {
    std::ostringstream msg;
    msg << "expected " << n << " lines for " << n << " nodes, got "
        << topology.lines.size();
    report.other.push_back(msg.str());
  }

  std::vector<std::vector<int>> adj(n + 1);
  std::vector<int> uf(n + 1);
  std::iota(uf.begin(), uf.end(), 0);
  std::map<std::pair<int, int>, int> seen_pairs;
  for (const Line& line : topology.lines) {
    const bool in_range = line.from >= 0 && line.from <= n && line.to >= 0 &&
                          line.to <= n;
    if (!in_range) {
      std::ostringstream msg;
      msg << "line " << line.from << "-" << line.to << " references an unknown node";
      report.other.push_back(msg.str());
      continue;
    }
    if (line.from == line.to) {
      std::ostringstream msg;
      msg << "self loop at node " << line.from;
      report.other.push_back(msg.str());
      continue;
    }
    if (line.r < 0.0 || line.x < 0.0) {
      std::ostringstream msg;
      msg << "line " << line.from << "-" << line.to << " has negative impedance";
      report.other.push_back(msg.str());
    }
    auto key = std::minmax(line.from, line.to);
    if (seen_pairs[key]++ > 0) {
      report.duplicates.emplace_back(key.first, key.second);
      continue;
    }
    int ra = FindRoot(uf, line.from);
    int rb = FindRoot(uf, line.to);
    if (ra == rb) {
      std::vector<int> cycle = ForestPath(adj, line.from, line.to);
      report.cycles.push_back(cycle);
      continue;
    }
    uf[ra] = rb;
    adj[line.from].push_back(line.to);
    adj[line.to].push_back(line.from);
  }

  const int root = FindRoot(uf, 0);
  for (int u = 1; u <= n; ++u) {
    if (FindRoot(uf, u) != root) report.disconnected.push_back(u);
  }
  return report;
}

ImpedanceMatrices BuildImpedanceMatrices(const FeederTopology& topology) {
  RadialityReport report = ValidateRadial(topology);
  if (!report.ok()) {
    throw StructuralError("non-radial feeder: " + report.Describe());
  }
  const int n = topology.num_nodes();
  std::vector<std::vector<std::pair<int, const Line*>>> adj(n + 1);
  for (const Line& line : topology.lines) {
    adj[line.from].emplace_back(line.to, &line);
    adj[line.to].emplace_back(line.from, &line);
  }

  // Parent pointers and cumulative impedance from a single traversal.
  std::vector<int> parent(n + 1, -1);
  std::vector<int> depth(n + 1, 0);
  std::vector<double> r_to_root(n + 1, 0.0);
  std::vector<double> x_to_root(n + 1, 0.0);
  std::vector<bool> visited(n + 1, false);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = true;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (const auto& [w, line] : adj[u]) {
      if (visited[w]) continue;
      visited[w] = true;
      parent[w] = u;
      depth[w] = depth[u] + 1;
      r_to_root[w] = r_to_root[u] + line->r;
      x_to_root[w] = x_to_root[u] + line->x;
      frontier.push(w);
    }
  }

  // The shared path of i and j ends at their lowest common ancestor.
  auto lca = [&](int a, int b) {
    while (depth[a] > depth[b]) a = parent[a];
    while (depth[b] > depth[a]) b = parent[b];
    while (a != b) {
      a = parent[a];
      b = parent[b];
    }
    return a;
  };

  ImpedanceMatrices mats;
  mats.R.resize(n, n);
  mats.X.resize(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      int a = lca(i, j);
      mats.R(i - 1, j - 1) = mats.R(j - 1, i - 1) = r_to_root[a];
      mats.X(i - 1, j - 1) = mats.X(j - 1, i - 1) = x_to_root[a];
    }
  }
  mats.Z.resize(n, 2 * n);
  mats.Z << mats.R, mats.X;
  return mats;
}

Eigen::VectorXd SolveVoltages(const ImpedanceMatrices& mats,
                              const Eigen::VectorXd& s_net, double v0) {
  const int n = mats.n();
  if (s_net.size() != 2 * n) {
    throw std::invalid_argument("injection vector has length " +
                                std::to_string(s_net.size()) + ", expected " +
                                std::to_string(2 * n));
  }
  return Eigen::VectorXd::Constant(n, v0) + mats.Z * s_net;
}

Eigen::VectorXd SolveVoltages(const ImpedanceMatrices& mats,
                              const InjectionVector& s_g,
                              const InjectionVector& s_c, double v0) {
  const int n = mats.n();
  for (const auto* vec : {&s_g.p, &s_g.q, &s_c.p, &s_c.q}) {
    if (vec->size() != n) {
      throw std::invalid_argument("injection component has length " +
                                  std::to_string(vec->size()) +
                                  ", expected " + std::to_string(n));
    }
  }
  return SolveVoltages(mats, s_g.Stacked() - s_c.Stacked(), v0);
}

}  // namespace vvstab
