#pragma once

#include <cmath>
#include <vector>

#include "cutplane/network.hpp"
#include "cutplane/qp.hpp"
#include "cutplane/separation.hpp"

namespace cutplane {

struct BuildOptions {
  enum class Objective { QP, PWL };
  Objective objective = Objective::QP;
  int pwl_segments = 32;
  bool loss_rows = true;     // static P_km + P_mk >= 0 rows
  bool c_lower_bound = true; // c_km >= 0 (valid for |angle| <= pi/2)
};

struct PwlSegment {
  double slope;      // $/p.u.
  double intercept;  // $
};

// Secant (over-estimating) PWL form of a convex quadratic cost over
// [pmin, pmax] in per-unit power, with equally spaced breakpoints.
inline std::vector<PwlSegment> pwl_objective(const GeneratorCost& cost,
                                             int segments, double pmin,
                                             double pmax, double base_mva) {
  if (segments < 1) throw ModelError("pwl_objective: segments must be >= 1");
  std::vector<PwlSegment> out;
  if (pmax <= pmin) {
    out.push_back({0.0, cost.eval_mw(pmin * base_mva)});
    return out;
  }
  if (cost.c2 == 0.0) segments = 1;
  for (int i = 0; i < segments; ++i) {
    const double a = pmin + (pmax - pmin) * i / segments;
    const double b = pmin + (pmax - pmin) * (i + 1) / segments;
    const double fa = cost.eval_mw(a * base_mva);
    const double fb = cost.eval_mw(b * base_mva);
    const double slope = (fb - fa) / (b - a);
    out.push_back({slope, fa - slope * a});
  }
  return out;
}

// Variable registry of the relaxation: one v2 per bus, (Pg, Qg) per
// generator, (c, s, i2, Pkm, Pmk, Qkm, Qmk) per branch.
struct VariableRegistry {
  std::vector<VarId> v2;
  std::vector<VarId> pg, qg;
  std::vector<VarId> c, s, i2, Pkm, Pmk, Qkm, Qmk;
};

struct SolutionPoint {
  std::vector<double> v2, pg, qg;
  std::vector<double> c, s, i2, Pkm, Pmk, Qkm, Qmk;
  double objective = 0.0;
  int round = 0;

  BranchPoint branch_point(int e) const {
    return {c[e], s[e], vk2_[e], vm2_[e], i2[e], Pkm[e], Qkm[e], Pmk[e], Qmk[e]};
  }
  // cached endpoint voltages, filled by snapshot()
  std::vector<double> vk2_, vm2_;
};

struct RelaxationModel {
  Network net;
  std::vector<BranchAdmittance> adm;
  QpModel model;
  VariableRegistry vars;
  BuildOptions opts;
  double objective_offset = 0.0;  // constant cost terms (c0 of QP objective)
  std::size_t base_constraints = 0;
  SolveOutcome last;

  SolveOutcome solve(bool warm = false) {
    last = model.solve(warm);
    if (last.status == SolveStatus::Optimal)
      last.objective += objective_offset;
    return last;
  }

  double value(VarId id) const { return last.primal[id.v]; }
};

// Base model M0: cost objective, balance rows, linearized flow definitions,
// the linear i2 definition, variable boxes, and optional loss rows. The
// rotated cones themselves are never added; cuts approximate them later.
inline RelaxationModel build_base_model(const Network& net,
                                        const BuildOptions& opts = {}) {
  RelaxationModel rm;
  rm.net = net;
  rm.opts = opts;
  const double base = net.base_mva;
  QpModel& M = rm.model;
  const int nb = static_cast<int>(net.buses.size());
  const int ne = static_cast<int>(net.branches.size());
  const int ng = static_cast<int>(net.generators.size());

  rm.adm.reserve(ne);
  for (const Branch& br : net.branches) rm.adm.push_back(branch_admittance(br));

  // bus voltage squares
  rm.vars.v2.resize(nb);
  for (int k = 0; k < nb; ++k)
    rm.vars.v2[k] = M.add_variable(net.buses[k].Vmin * net.buses[k].Vmin,
                                   net.buses[k].Vmax * net.buses[k].Vmax, 0.0, 0.0);

  // generator outputs with cost
  rm.vars.pg.resize(ng);
  rm.vars.qg.resize(ng);
  for (int g = 0; g < ng; ++g) {
    const Generator& gen = net.generators[g];
    const GeneratorCost& cost = gen.cost;
    const bool quad_native = opts.objective == BuildOptions::Objective::QP &&
                             cost.kind == GeneratorCost::Kind::Quadratic;
    if (quad_native) {
      // f(P_pu) = c2 (P_pu base)^2 + c1 (P_pu base) + c0
      rm.vars.pg[g] = M.add_variable(gen.Pmin, gen.Pmax, cost.c1 * base,
                                     cost.c2 * base * base);
      rm.objective_offset += cost.c0;
    } else {
      rm.vars.pg[g] = M.add_variable(gen.Pmin, gen.Pmax, 0.0, 0.0);
      // epigraph variable t >= each secant piece
      VarId t = M.add_variable(-kNoLimit, kNoLimit, 1.0, 0.0);
      std::vector<PwlSegment> pieces;
      if (cost.kind == GeneratorCost::Kind::Quadratic) {
        pieces = pwl_objective(cost, opts.pwl_segments, gen.Pmin, gen.Pmax, base);
      } else {
        for (std::size_t i = 1; i < cost.points.size(); ++i) {
          const auto& a = cost.points[i - 1];
          const auto& b = cost.points[i];
          const double slope = (b.cost - a.cost) / (b.p - a.p) * base;
          pieces.push_back({slope, a.cost - slope * a.p / base});
        }
        if (pieces.empty()) pieces.push_back({0.0, cost.points.empty() ? 0.0 : cost.points[0].cost});
      }
      for (const PwlSegment& seg : pieces)
        M.add_linear_constraint({{t, 1.0}, {rm.vars.pg[g], -seg.slope}},
                                Sense::GE, seg.intercept);
    }
    rm.vars.qg[g] = M.add_variable(gen.Qmin, gen.Qmax, 0.0, 0.0);
  }

  // branch variables
  rm.vars.c.resize(ne);
  rm.vars.s.resize(ne);
  rm.vars.i2.resize(ne);
  rm.vars.Pkm.resize(ne);
  rm.vars.Pmk.resize(ne);
  rm.vars.Qkm.resize(ne);
  rm.vars.Qmk.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const Branch& br = net.branches[e];
    const Bus& bk = net.buses[br.from];
    const Bus& bm = net.buses[br.to];
    const double vv = bk.Vmax * bm.Vmax;
    rm.vars.c[e] = M.add_variable(opts.c_lower_bound ? 0.0 : -vv, vv, 0.0, 0.0);
    rm.vars.s[e] = M.add_variable(-vv, vv, 0.0, 0.0);
    const double i2ub = std::isfinite(br.limit)
                            ? (br.limit / bk.Vmin) * (br.limit / bk.Vmin)
                            : kNoLimit;
    rm.vars.i2[e] = M.add_variable(0.0, i2ub, 0.0, 0.0);
    const double flow = std::isfinite(br.limit) ? br.limit : kNoLimit;
    rm.vars.Pkm[e] = M.add_variable(-flow, flow, 0.0, 0.0);
    rm.vars.Pmk[e] = M.add_variable(-flow, flow, 0.0, 0.0);
    rm.vars.Qkm[e] = M.add_variable(-flow, flow, 0.0, 0.0);
    rm.vars.Qmk[e] = M.add_variable(-flow, flow, 0.0, 0.0);
  }

  // flow definitions and the i2 definition
  for (int e = 0; e < ne; ++e) {
    const Branch& br = net.branches[e];
    const BranchAdmittance& a = rm.adm[e];
    const VarId vk2 = rm.vars.v2[br.from];
    const VarId vm2 = rm.vars.v2[br.to];
    const VarId c = rm.vars.c[e], s = rm.vars.s[e];
    M.add_linear_constraint({{rm.vars.Pkm[e], 1.0}, {vk2, -a.Gkk}, {c, -a.Gkm}, {s, -a.Bkm}},
                            Sense::EQ, 0.0);
    M.add_linear_constraint({{rm.vars.Pmk[e], 1.0}, {vm2, -a.Gmm}, {c, -a.Gmk}, {s, a.Bmk}},
                            Sense::EQ, 0.0);
    M.add_linear_constraint({{rm.vars.Qkm[e], 1.0}, {vk2, a.Bkk}, {c, a.Bkm}, {s, -a.Gkm}},
                            Sense::EQ, 0.0);
    M.add_linear_constraint({{rm.vars.Qmk[e], 1.0}, {vm2, a.Bmm}, {c, a.Bmk}, {s, a.Gmk}},
                            Sense::EQ, 0.0);
    M.add_linear_constraint({{rm.vars.i2[e], 1.0},
                             {vk2, -a.alpha},
                             {vm2, -a.beta},
                             {c, -a.gamma},
                             {s, -a.zeta}},
                            Sense::EQ, 0.0);
  }

  // power balance per bus (shunt terms on the injection side)
  for (int k = 0; k < nb; ++k) {
    const Bus& bus = net.buses[k];
    std::vector<std::pair<VarId, double>> pterms, qterms;
    for (int e : net.branches_at[k]) {
      const bool from = net.branches[e].from == k;
      pterms.push_back({from ? rm.vars.Pkm[e] : rm.vars.Pmk[e], 1.0});
      qterms.push_back({from ? rm.vars.Qkm[e] : rm.vars.Qmk[e], 1.0});
    }
    pterms.push_back({rm.vars.v2[k], bus.Gs});
    qterms.push_back({rm.vars.v2[k], -bus.Bs});
    for (int g : net.gens_at[k]) {
      pterms.push_back({rm.vars.pg[g], -1.0});
      qterms.push_back({rm.vars.qg[g], -1.0});
    }
    M.add_linear_constraint(pterms, Sense::EQ, -bus.Pd);
    M.add_linear_constraint(qterms, Sense::EQ, -bus.Qd);
  }

  // static loss rows
  if (opts.loss_rows) {
    for (int e = 0; e < ne; ++e) {
      const BranchAdmittance& a = rm.adm[e];
      if (a.Gkk >= 0.0 && a.Gmm >= 0.0)
        M.add_linear_constraint({{rm.vars.Pkm[e], 1.0}, {rm.vars.Pmk[e], 1.0}},
                                Sense::GE, 0.0);
    }
  }

  rm.base_constraints = rm.model.num_live_constraints();
  return rm;
}

inline SolutionPoint snapshot(const RelaxationModel& rm, int round = 0) {
  if (rm.last.status != SolveStatus::Optimal)
    throw ModelError("snapshot requires an optimal solve");
  SolutionPoint pt;
  pt.objective = rm.last.objective;
  pt.round = round;
  auto grab = [&](const std::vector<VarId>& ids) {
    std::vector<double> v(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) v[i] = rm.value(ids[i]);
    return v;
  };
  pt.v2 = grab(rm.vars.v2);
  pt.pg = grab(rm.vars.pg);
  pt.qg = grab(rm.vars.qg);
  pt.c = grab(rm.vars.c);
  pt.s = grab(rm.vars.s);
  pt.i2 = grab(rm.vars.i2);
  pt.Pkm = grab(rm.vars.Pkm);
  pt.Pmk = grab(rm.vars.Pmk);
  pt.Qkm = grab(rm.vars.Qkm);
  pt.Qmk = grab(rm.vars.Qmk);
  pt.vk2_.resize(rm.net.branches.size());
  pt.vm2_.resize(rm.net.branches.size());
  for (std::size_t e = 0; e < rm.net.branches.size(); ++e) {
    pt.vk2_[e] = pt.v2[rm.net.branches[e].from];
    pt.vm2_[e] = pt.v2[rm.net.branches[e].to];
  }
  return pt;
}

}  // namespace cutplane
