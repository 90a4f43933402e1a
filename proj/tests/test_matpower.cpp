#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "cutplane/matpower.hpp"

using namespace cutplane;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const char* kTwoBus = R"(
function mpc = twobus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0  0 0 1 1 0 1 1 1.1 0.9;
  2 1 50 20  0 0 1 1 0 1 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 100 -100 1 100 1 200 0;
];
mpc.branch = [
  1 2 0.01 0.1 0.02 120 0 0 0 0 1 0 0;
];
mpc.gencost = [
  2 0 0 3 0.02 15 100;
];
)";

std::string data_path(const char* name) {
  return std::string(DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("two-bus case parses and converts to per-unit") {
  Network net = to_network(parse_matpower(std::string(kTwoBus)));
  REQUIRE(net.buses.size() == 2);
  REQUIRE(net.branches.size() == 1);
  REQUIRE(net.generators.size() == 1);
  CHECK_THAT(net.buses[1].Pd, WithinRel(0.5, 1e-15));
  CHECK_THAT(net.buses[1].Qd, WithinRel(0.2, 1e-15));
  CHECK_THAT(net.branches[0].limit, WithinRel(1.2, 1e-15));
  CHECK(net.branches[0].tau == 1.0);
  CHECK(net.branches[0].sigma == 0.0);
  CHECK_THAT(net.generators[0].Pmax, WithinRel(2.0, 1e-15));
  CHECK(net.generators[0].cost.kind == GeneratorCost::Kind::Quadratic);
  CHECK_THAT(net.generators[0].cost.c1, WithinRel(15.0, 1e-15));
}

TEST_CASE("missing table raises a parse error") {
  const char* text = "mpc.baseMVA = 100;\nmpc.gen = [];\nmpc.branch = [];\n";
  CHECK_THROWS_WITH(parse_matpower(std::string(text)),
                    Catch::Matchers::ContainsSubstring("missing table: bus"));
}

TEST_CASE("malformed rows carry line numbers") {
  std::string text = kTwoBus;
  const auto pos = text.find("0.01");
  text.replace(pos, 4, "zzzz");
  CHECK_THROWS_AS(parse_matpower(text), ParseError);
}

TEST_CASE("duplicate bus ids rejected") {
  std::string text = kTwoBus;
  const auto pos = text.find("  2 1 50");
  text.replace(pos, 5, "  1 1 ");
  CHECK_THROWS_WITH(parse_matpower(text),
                    Catch::Matchers::ContainsSubstring("duplicate bus id"));
}

TEST_CASE("out-of-service equipment is dropped, gencost stays aligned") {
  const char* text = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1 0 1 1 1.1 0.9;
  2 1 10 0 0 0 1 1 0 1 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 50 -50 1 100 0 100 0;
  2 0 0 50 -50 1 100 1 80  0;
];
mpc.branch = [
  1 2 0.01 0.1 0 0 0 0 0 0 1 0 0;
  1 2 0.02 0.2 0 0 0 0 0 0 0 0 0;
];
mpc.gencost = [
  2 0 0 2 10 0;
  2 0 0 2 25 0;
];
)";
  Network net = to_network(parse_matpower(std::string(text)));
  REQUIRE(net.generators.size() == 1);
  REQUIRE(net.branches.size() == 1);
  CHECK_THAT(net.generators[0].Pmax, WithinRel(0.8, 1e-15));
  // the surviving generator keeps row 2 of gencost, not row 1
  CHECK_THAT(net.generators[0].cost.c1, WithinRel(25.0, 1e-15));
  CHECK_THAT(net.branches[0].r, WithinRel(0.01, 1e-15));
}

TEST_CASE("case14 loads with expected dimensions") {
  Network net = load_network(data_path("case14.m"));
  CHECK(net.buses.size() == 14);
  CHECK(net.branches.size() == 20);
  CHECK(net.generators.size() == 5);
  // bus 9 carries the synchronous condenser shunt
  bool found = false;
  for (const Bus& b : net.buses)
    if (b.original_id == 9) {
      found = true;
      CHECK_THAT(b.Bs, WithinRel(0.19, 1e-12));
    }
  CHECK(found);
  // transformer taps
  int taps = 0;
  for (const Branch& br : net.branches)
    if (br.tau != 1.0) ++taps;
  CHECK(taps == 3);
}

TEST_CASE("quadratic gencost evaluates in MW") {
  Network net = to_network(parse_matpower(std::string(kTwoBus)));
  const GeneratorCost& c = net.generators[0].cost;
  for (double pg : {0.0, 57.3, 180.0}) {
    CHECK_THAT(c.eval_mw(pg), WithinRel(0.02 * pg * pg + 15.0 * pg + 100.0,
                                        1e-12));
  }
}

TEST_CASE("pwl gencost convexity enforced") {
  std::string text = kTwoBus;
  const auto pos = text.find("2 0 0 3 0.02 15 100;");
  SECTION("valid convex pwl") {
    std::string t = text;
    t.replace(pos, 20, "1 0 0 3 0 0 100 1000 200 2500;");
    Network net = to_network(parse_matpower(t));
    const GeneratorCost& c = net.generators[0].cost;
    REQUIRE(c.kind == GeneratorCost::Kind::PiecewiseLinear);
    CHECK_THAT(c.eval_mw(50.0), WithinRel(500.0, 1e-12));
    CHECK_THAT(c.eval_mw(150.0), WithinRel(1750.0, 1e-12));
  }
  SECTION("non-convex pwl rejected") {
    std::string t = text;
    t.replace(pos, 20, "1 0 0 3 0 0 100 2000 200 2500;");
    CHECK_THROWS_AS(to_network(parse_matpower(t)), ParseError);
  }
}

TEST_CASE("load perturbation is a deterministic per-bus stream") {
  Network net = load_network(data_path("case14.m"));
  PerturbationSpec spec;
  spec.seed = 42;
  Network a = perturb_loads(net, spec);
  Network b = perturb_loads(net, spec);
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    CHECK(a.buses[i].Pd == b.buses[i].Pd);
    if (net.buses[i].Pd == 0.0) CHECK(a.buses[i].Pd == 0.0);
    CHECK(a.buses[i].Pd >= 0.0);
    CHECK(a.buses[i].Qd == net.buses[i].Qd);
  }
  spec.seed = 43;
  Network c = perturb_loads(net, spec);
  bool differs = false;
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    differs = differs || a.buses[i].Pd != c.buses[i].Pd;
  CHECK(differs);
}

TEST_CASE("perturbation mean shifts loads up about five percent") {
  Network net = to_network(parse_matpower(std::string(kTwoBus)));
  double sum = 0.0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    PerturbationSpec spec;
    spec.seed = 1000 + t;
    sum += perturb_loads(net, spec).buses[1].Pd;
  }
  const double mean = sum / trials;
  // Pd = 0.5; expected mean 0.525, sd of the sample mean ~ 0.0004
  CHECK_THAT(mean, WithinAbs(0.525, 0.002));
}

TEST_CASE("write/parse round-trip preserves the network") {
  Network net = load_network(data_path("case14.m"));
  std::ostringstream os;
  write_network(net, os);
  Network back = to_network(parse_matpower(os.str()));
  REQUIRE(back.buses.size() == net.buses.size());
  REQUIRE(back.branches.size() == net.branches.size());
  REQUIRE(back.generators.size() == net.generators.size());
  auto near = [](double a, double b) {
    return a == b || std::abs(a - b) <= 4.0 * std::abs(b) *
                                            std::numeric_limits<double>::epsilon();
  };
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    CHECK(near(back.buses[i].Pd, net.buses[i].Pd));
    CHECK(near(back.buses[i].Qd, net.buses[i].Qd));
    CHECK(near(back.buses[i].Bs, net.buses[i].Bs));
    CHECK(back.buses[i].Vmin == net.buses[i].Vmin);
  }
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    CHECK(back.branches[i].r == net.branches[i].r);
    CHECK(back.branches[i].x == net.branches[i].x);
    CHECK(near(back.branches[i].sigma, net.branches[i].sigma));
    CHECK(back.branches[i].tau == net.branches[i].tau);
    if (std::isinf(net.branches[i].limit))
      CHECK(std::isinf(back.branches[i].limit));
    else
      CHECK(near(back.branches[i].limit, net.branches[i].limit));
  }
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    CHECK(near(back.generators[i].Pmax, net.generators[i].Pmax));
    CHECK(back.generators[i].cost.c2 == net.generators[i].cost.c2);
    CHECK(back.generators[i].cost.c1 == net.generators[i].cost.c1);
  }
}

TEST_CASE("bound sanity checks on conversion") {
  std::string text = kTwoBus;
  SECTION("Vmin > Vmax") {
    auto t = text;
    const auto pos = t.find("1.1 0.9;\n  2");
    t.replace(pos, 7, "0.8 0.9");
    CHECK_THROWS_AS(to_network(parse_matpower(t)), ModelError);
  }
  SECTION("unknown bus in branch") {
    auto t = text;
    const auto pos = t.find("1 2 0.01");
    t.replace(pos, 3, "1 7");
    CHECK_THROWS_AS(to_network(parse_matpower(t)), ModelError);
  }
}
