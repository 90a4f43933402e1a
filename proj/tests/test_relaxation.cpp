#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "cutplane/matpower.hpp"
#include "cutplane/relaxation.hpp"

using namespace cutplane;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string data_path(const char* name) {
  return std::string(DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("case14 base model has the expected shape") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel rm = build_base_model(net);
  // per bus: v2; per generator: Pg, Qg; per branch: c, s, i2, 4 flows
  CHECK(rm.model.num_variables() == 14 + 2 * 5 + 7 * 20);
  // per branch: 4 flow defs + i2 def + loss row; per bus: P and Q balance
  CHECK(rm.model.num_live_constraints() == 20 * 6 + 2 * 14);
  CHECK(rm.base_constraints == rm.model.num_live_constraints());
}

TEST_CASE("case14 base model is a lower bound") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel rm = build_base_model(net);
  auto out = rm.solve();
  REQUIRE(out.status == SolveStatus::Optimal);
  CHECK(out.objective <= 8075.13);
  CHECK(out.objective >= 7000.0);
}

TEST_CASE("loss rows hold at the base optimum") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel rm = build_base_model(net);
  REQUIRE(rm.solve().status == SolveStatus::Optimal);
  SolutionPoint pt = snapshot(rm);
  for (std::size_t e = 0; e < net.branches.size(); ++e)
    CHECK(pt.Pkm[e] + pt.Pmk[e] >= -1e-7);
}

TEST_CASE("an AC-feasible point satisfies the base constraints") {
  // two buses joined by a line; loads chosen to match an exact AC state
  Branch br;
  br.r = 0.02;
  br.x = 0.2;
  br.b_sh = 0.04;
  const BranchAdmittance a = branch_admittance(br);
  const double vk = 1.03, vm = 0.98, th = 0.07;
  const BranchFlows f = polar_flows(a, vk, vm, th);

  std::string text =
      "mpc.baseMVA = 100;\n"
      "mpc.bus = [\n"
      " 1 3 0 0 0 0 1 1 0 1 1 1.06 0.94;\n"
      " 2 1 " +
      std::to_string(-f.Pmk * 100) + " " + std::to_string(-f.Qmk * 100) +
      " 0 0 1 1 0 1 1 1.06 0.94;\n"
      "];\n"
      "mpc.gen = [\n 1 0 0 100 -100 1 100 1 300 0;\n];\n"
      "mpc.branch = [\n 1 2 0.02 0.2 0.04 0 0 0 0 0 1 0 0;\n];\n"
      "mpc.gencost = [\n 2 0 0 3 0.01 20 0;\n];\n";
  Network net = to_network(parse_matpower(text));
  RelaxationModel rm = build_base_model(net);
  auto out = rm.solve();
  REQUIRE(out.status == SolveStatus::Optimal);
  // the relaxation can only undercut the AC-feasible generation cost
  const double ac_cost = net.generators[0].cost.eval_mw(f.Pkm * 100);
  CHECK(out.objective <= ac_cost + 1e-6 * (1.0 + std::abs(ac_cost)));

  // the AC state itself satisfies every definitional row
  const double c = vk * vm * std::cos(th), s = vk * vm * std::sin(th);
  CHECK_THAT(f.Pkm, WithinAbs(a.Gkk * vk * vk + a.Gkm * c + a.Bkm * s, 1e-12));
  CHECK_THAT(i2_value(a, vk * vk, vm * vm, c, s),
             WithinAbs((f.Pkm * f.Pkm + f.Qkm * f.Qkm) / (vk * vk), 1e-9));
  CHECK(c * c + s * s <= vk * vk * vm * vm + 1e-12);
}

TEST_CASE("secant pwl over-estimates the quadratic between breakpoints") {
  GeneratorCost cost;
  cost.kind = GeneratorCost::Kind::Quadratic;
  cost.c2 = 0.04;
  cost.c1 = 18.0;
  cost.c0 = 50.0;
  const double pmin = 0.0, pmax = 3.0, base = 100.0;
  auto pieces = pwl_objective(cost, 8, pmin, pmax, base);
  REQUIRE(pieces.size() == 8);
  for (int k = 0; k <= 200; ++k) {
    const double p = pmin + (pmax - pmin) * k / 200.0;
    double env = -1e30;
    for (const auto& seg : pieces)
      env = std::max(env, seg.slope * p + seg.intercept);
    const double f = cost.eval_mw(p * base);
    CHECK(env >= f - 1e-9);
    // secant error of a quadratic is bounded by c2 (base h)^2 / 4
    const double h = (pmax - pmin) / 8.0;
    CHECK(env <= f + cost.c2 * base * base * h * h / 4.0 + 1e-9);
  }
  // exact at breakpoints
  for (int i = 0; i <= 8; ++i) {
    const double p = pmin + (pmax - pmin) * i / 8.0;
    double env = -1e30;
    for (const auto& seg : pieces)
      env = std::max(env, seg.slope * p + seg.intercept);
    CHECK_THAT(env, WithinRel(cost.eval_mw(p * base), 1e-12));
  }
}

TEST_CASE("linear costs collapse to one pwl segment") {
  GeneratorCost cost;
  cost.kind = GeneratorCost::Kind::Quadratic;
  cost.c1 = 40.0;
  auto pieces = pwl_objective(cost, 32, 0.0, 1.0, 100.0);
  CHECK(pieces.size() == 1);
  CHECK_THAT(pieces[0].slope, WithinRel(4000.0, 1e-12));
}

TEST_CASE("pwl objective mode stays within a tenth percent of qp mode") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel qp = build_base_model(net);
  REQUIRE(qp.solve().status == SolveStatus::Optimal);
  BuildOptions opts;
  opts.objective = BuildOptions::Objective::PWL;
  RelaxationModel pwl = build_base_model(net, opts);
  REQUIRE(pwl.solve().status == SolveStatus::Optimal);
  CHECK_THAT(pwl.last.objective,
             WithinRel(qp.last.objective, 1e-3));
  // the secant envelope over-estimates, so pwl can only sit above
  CHECK(pwl.last.objective >= qp.last.objective - 1e-4 * qp.last.objective);
}

TEST_CASE("free c lower bound relaxes the model") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel tight = build_base_model(net);
  BuildOptions opts;
  opts.c_lower_bound = false;
  RelaxationModel loose = build_base_model(net, opts);
  REQUIRE(tight.solve().status == SolveStatus::Optimal);
  REQUIRE(loose.solve().status == SolveStatus::Optimal);
  CHECK(loose.last.objective <= tight.last.objective + 1e-5 * tight.last.objective);
}

TEST_CASE("snapshot requires an optimal solve") {
  Network net = load_network(data_path("case14.m"));
  RelaxationModel rm = build_base_model(net);
  CHECK_THROWS_AS(snapshot(rm), ModelError);
  REQUIRE(rm.solve().status == SolveStatus::Optimal);
  SolutionPoint pt = snapshot(rm, 3);
  CHECK(pt.round == 3);
  REQUIRE(pt.v2.size() == 14);
  REQUIRE(pt.c.size() == 20);
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    CHECK(pt.vk2_[e] == pt.v2[net.branches[e].from]);
    CHECK(pt.vm2_[e] == pt.v2[net.branches[e].to]);
  }
  // voltage boxes hold
  for (std::size_t k = 0; k < net.buses.size(); ++k) {
    CHECK(pt.v2[k] >= net.buses[k].Vmin * net.buses[k].Vmin - 1e-7);
    CHECK(pt.v2[k] <= net.buses[k].Vmax * net.buses[k].Vmax + 1e-7);
  }
}
