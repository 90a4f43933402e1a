#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cutplane/driver.hpp"
#include "cutplane/network.hpp"
#include "cutplane/prng.hpp"
#include "cutplane/relaxation.hpp"

namespace cutplane {

// Active-power flows on the subdivided network: every branch {k,m} gets a
// node n_km; each half-edge is oriented along its flow sign.
struct DirectedFlowGraph {
  struct Arc {
    int tail, head;
    double flow;  // >= 0
  };
  int num_buses = 0;  // nodes [0, num_buses) are buses, the rest subdivisions
  std::vector<Arc> arcs;
  std::vector<double> imbalance;  // net supply per node
  std::vector<std::vector<int>> out_arcs;

  int num_nodes() const { return static_cast<int>(imbalance.size()); }
};

inline DirectedFlowGraph subdivide_and_orient(const Network& net,
                                              const SolutionPoint& pt) {
  DirectedFlowGraph g;
  const int nb = static_cast<int>(net.buses.size());
  const int ne = static_cast<int>(net.branches.size());
  g.num_buses = nb;
  g.imbalance.assign(nb + ne, 0.0);
  for (int k = 0; k < nb; ++k) {
    double gen = 0.0;
    for (int gi : net.gens_at[k]) gen += pt.pg[gi];
    // bus shunts consume Gs * v2 on the injection side
    g.imbalance[k] = gen - net.buses[k].Pd - net.buses[k].Gs * pt.v2[k];
  }
  for (int e = 0; e < ne; ++e) {
    const int k = net.branches[e].from, m = net.branches[e].to;
    const int n = nb + e;
    const double Pkm = pt.Pkm[e], Pmk = pt.Pmk[e];
    if (Pkm >= 0.0) {
      if (Pkm > 0.0) g.arcs.push_back({k, n, Pkm});
    } else {
      g.arcs.push_back({n, k, -Pkm});
    }
    if (Pmk >= 0.0) {
      if (Pmk > 0.0) g.arcs.push_back({m, n, Pmk});
    } else {
      g.arcs.push_back({n, m, -Pmk});
    }
    g.imbalance[n] = -(Pkm + Pmk);  // the node absorbs the loss
  }
  g.out_arcs.assign(g.num_nodes(), {});
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    g.out_arcs[g.arcs[a].tail].push_back(static_cast<int>(a));
  return g;
}

struct PathDecomposition {
  struct Path {
    std::vector<int> nodes;
    double flow;
  };
  std::vector<Path> paths;   // source -> sink
  std::vector<Path> cycles;  // closed
  double residual = 0.0;     // max leftover arc flow
};

// Classic flow decomposition: peel source-to-sink paths (largest-imbalance
// source first, largest-remaining-flow arc first), then leftover cycles.
inline PathDecomposition decompose(const DirectedFlowGraph& g) {
  const double tol = 1e-9;
  const int nn = g.num_nodes();
  std::vector<double> flow(g.arcs.size());
  for (std::size_t a = 0; a < g.arcs.size(); ++a) flow[a] = g.arcs[a].flow;
  std::vector<double> surplus = g.imbalance;

  double total = 0.0;
  for (double v : surplus) total += v;
  if (std::abs(total) > 1e-6) {
    int worst = 0;
    for (int i = 1; i < nn; ++i)
      if (std::abs(surplus[i]) > std::abs(surplus[worst])) worst = i;
    throw ModelError("flow conservation violated, worst node " +
                     std::to_string(worst));
  }

  PathDecomposition out;
  auto next_arc = [&](int node) {
    int best = -1;
    for (int a : g.out_arcs[node])
      if (flow[a] > tol && (best < 0 || flow[a] > flow[best])) best = a;
    return best;
  };

  // walk from `start`; returns a path ending at a sink, or a cycle if a node
  // repeats first
  std::vector<int> mark(nn, -1);
  int stamp = 0;
  auto walk = [&](int start, bool need_sink) {
    ++stamp;
    std::vector<int> nodes{start};
    std::vector<int> arcs;
    int node = start;
    mark[node] = stamp;
    while (true) {
      if (need_sink && node != start && surplus[node] < -tol) break;
      const int a = next_arc(node);
      if (a < 0) break;  // dead end: treat as sink
      arcs.push_back(a);
      node = g.arcs[a].head;
      if (mark[node] == stamp) {
        // cycle: trim the stem before the first repeat
        std::size_t i = 0;
        while (nodes[i] != node) ++i;
        std::vector<int> cnodes(nodes.begin() + i, nodes.end());
        cnodes.push_back(node);
        std::vector<int> carcs(arcs.begin() + i, arcs.end());
        double amt = flow[carcs.front()];
        for (int ca : carcs) amt = std::min(amt, flow[ca]);
        for (int ca : carcs) flow[ca] -= amt;
        out.cycles.push_back({cnodes, amt});
        return false;  // retry the walk
      }
      nodes.push_back(node);
      mark[node] = stamp;
      if (!need_sink && arcs.empty()) break;
    }
    if (arcs.empty()) return true;  // nothing to extract from this start
    double amt = flow[arcs.front()];
    for (int a : arcs) amt = std::min(amt, flow[a]);
    if (need_sink) {
      amt = std::min(amt, surplus[start]);
      amt = std::min(amt, -surplus[nodes.back()]);
    }
    if (amt <= tol) return true;
    for (int a : arcs) flow[a] -= amt;
    surplus[start] -= amt;
    surplus[nodes.back()] += amt;
    out.paths.push_back({nodes, amt});
    return false;
  };

  // peel paths from sources
  while (true) {
    int src = -1;
    for (int i = 0; i < nn; ++i)
      if (surplus[i] > tol && (src < 0 || surplus[i] > surplus[src])) src = i;
    if (src < 0) break;
    bool stuck = true;
    for (int guard = 0; guard < 4 * static_cast<int>(g.arcs.size()) + 4; ++guard) {
      if (surplus[src] <= tol) { stuck = false; break; }
      if (walk(src, true)) break;  // no extractable path from this source
      stuck = false;
    }
    if (stuck || surplus[src] > tol) {
      // source cannot reach a sink with remaining flow; conservation says the
      // leftover is below tolerance
      if (surplus[src] > 1e-6)
        throw ModelError("decomposition stuck at node " + std::to_string(src));
      surplus[src] = 0.0;
    }
  }
  // leftover circulations
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    int guard = 0;
    while (flow[a] > tol && guard++ < 1000)
      if (walk(g.arcs[a].tail, false)) break;
  }
  for (double f : flow) out.residual = std::max(out.residual, f);
  return out;
}

struct LossReport {
  double total_generation = 0.0;
  double total_load = 0.0;
  double total_shunt_consumption = 0.0;  // active power into bus shunts
  double positive_losses = 0.0;
  double negative_losses = 0.0;  // absolute magnitude
  int negative_loss_branches = 0;
  std::vector<double> branch_loss;
  // aggregate reactive ledger
  double reactive_generation = 0.0;
  double reactive_load = 0.0;
  double reactive_shunt_production = 0.0;
  double reactive_loss = 0.0;

  double total_loss() const { return positive_losses - negative_losses; }
};

inline LossReport loss_report(const Network& net, const SolutionPoint& pt) {
  LossReport rep;
  for (const auto& g : pt.pg) rep.total_generation += g;
  for (const auto& g : pt.qg) rep.reactive_generation += g;
  for (std::size_t k = 0; k < net.buses.size(); ++k) {
    rep.total_load += net.buses[k].Pd;
    rep.reactive_load += net.buses[k].Qd;
    rep.total_shunt_consumption += net.buses[k].Gs * pt.v2[k];
    rep.reactive_shunt_production += net.buses[k].Bs * pt.v2[k];
  }
  rep.branch_loss.resize(net.branches.size());
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const double l = branch_loss(pt.Pkm[e], pt.Pmk[e]);
    rep.branch_loss[e] = l;
    if (l >= 0.0)
      rep.positive_losses += l;
    else {
      rep.negative_losses += -l;
      ++rep.negative_loss_branches;
    }
    rep.reactive_loss += pt.Qkm[e] + pt.Qmk[e];
  }
  return rep;
}

// Table mirroring the single-branch relaxation experiment: per trial one
// uniformly random branch has its jabr and i2 cuts suppressed (limit cuts
// retained) and the cutting-plane run is repeated.
struct RelaxOneExperiment {
  struct Trial {
    int branch;
    double objective;
    double total_loss;
    double branch_loss;
    RunStatus status;
  };
  double baseline_objective = 0.0;
  double baseline_loss = 0.0;
  std::vector<Trial> trials;

  double avg_loss() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.total_loss;
    return trials.empty() ? 0.0 : s / trials.size();
  }
  double avg_branch_loss() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.branch_loss;
    return trials.empty() ? 0.0 : s / trials.size();
  }
  double avg_objective() const {
    double s = 0.0;
    for (const auto& t : trials) s += t.objective;
    return trials.empty() ? 0.0 : s / trials.size();
  }

  void write_csv(std::ostream& os) const {
    char b[64];
    os << "Case,SOC Loss,Avg Loss,Avg br. Loss,SOC Obj,relSOC Obj\n";
    auto f = [&b](double v) {
      std::snprintf(b, sizeof(b), "%.6g", v);
      return std::string(b);
    };
    os << "adapted-LP," << f(baseline_loss) << "," << f(avg_loss()) << ","
       << f(avg_branch_loss()) << "," << f(baseline_objective) << ","
       << f(avg_objective()) << "\n";
  }
};

inline RelaxOneExperiment single_branch_relaxation_experiment(
    const Network& net, int trials, std::uint64_t seed,
    const AlgorithmParams& params, const BuildOptions& opts = {}) {
  if (trials < 1) throw ModelError("experiment requires trials >= 1");
  RelaxOneExperiment exp;
  {
    RelaxationModel rm = build_base_model(net, opts);
    RunReport rep = cutplane(rm, params);
    exp.baseline_objective = rep.best_bound;
    exp.baseline_loss = loss_report(net, rep.final_point).total_loss();
  }
  SplitMix64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const int branch =
        static_cast<int>(rng.next() % net.branches.size());
    AlgorithmParams p = params;
    p.suppress_cone_branches = {branch};
    RelaxationModel rm = build_base_model(net, opts);
    RunReport rep = cutplane(rm, p);
    RelaxOneExperiment::Trial trial;
    trial.branch = branch;
    trial.status = rep.status;
    trial.objective = rep.best_bound;
    if (rep.status == RunStatus::Converged || rep.status == RunStatus::Stalled ||
        rep.status == RunStatus::TimeLimit) {
      const LossReport lr = loss_report(net, rep.final_point);
      trial.total_loss = lr.total_loss();
      trial.branch_loss = lr.branch_loss[branch];
    } else {
      trial.total_loss = trial.branch_loss = 0.0;
    }
    exp.trials.push_back(trial);
  }
  return exp;
}

}  // namespace cutplane
