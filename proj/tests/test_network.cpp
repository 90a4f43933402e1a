#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "cutplane/network.hpp"
#include "cutplane/prng.hpp"

using namespace cutplane;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("simple line admittance") {
  Branch br;
  br.r = 0.01;
  br.x = 0.1;
  const BranchAdmittance a = branch_admittance(br);
  const double g = 0.01 / (0.01 * 0.01 + 0.1 * 0.1);
  const double b = -0.1 / (0.01 * 0.01 + 0.1 * 0.1);
  CHECK_THAT(a.Gkk, WithinRel(g, 1e-12));
  CHECK_THAT(a.Gmm, WithinRel(g, 1e-12));
  CHECK_THAT(a.Gkm, WithinRel(-g, 1e-12));
  CHECK_THAT(a.Gmk, WithinRel(-g, 1e-12));
  CHECK_THAT(a.Bkk, WithinRel(b, 1e-12));
  CHECK_THAT(a.alpha, WithinRel(g * g + b * b, 1e-12));
  CHECK_THAT(a.beta, WithinRel(g * g + b * b, 1e-12));
  CHECK_THAT(a.gamma, WithinRel(-2.0 * (g * g + b * b), 1e-12));
  CHECK_THAT(a.zeta, WithinAbs(0.0, 1e-12));
}

TEST_CASE("i2_value arithmetic") {
  BranchAdmittance a;
  a.alpha = a.beta = 1.0;
  a.gamma = -2.0;
  a.zeta = 0.0;
  CHECK_THAT(i2_value(a, 1, 1, 1, 0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(i2_value(a, 1, 1, 0.9, 0), WithinAbs(0.2, 1e-12));
}

TEST_CASE("i2 coefficients match the complex-arithmetic oracle") {
  SplitMix64 rng(20240817);
  for (int trial = 0; trial < 1000; ++trial) {
    Branch br;
    br.r = rng.uniform(1e-3, 1.0);
    br.x = rng.uniform(1e-3, 1.0);
    br.b_sh = rng.uniform(0.0, 0.5);
    br.g_sh = trial % 3 == 0 ? rng.uniform(0.0, 0.1) : 0.0;
    br.tau = rng.uniform(0.9, 1.1);
    br.sigma = rng.uniform(-0.3, 0.3);
    const BranchAdmittance a = branch_admittance(br);
    const double vk = rng.uniform(0.9, 1.1), vm = rng.uniform(0.9, 1.1);
    const double thk = rng.uniform(-M_PI / 4, M_PI / 4);
    const double thm = rng.uniform(-M_PI / 4, M_PI / 4);
    const double c = vk * vm * std::cos(thk - thm);
    const double s = vk * vm * std::sin(thk - thm);
    const double lin = i2_value(a, vk * vk, vm * vm, c, s);

    using C = std::complex<double>;
    const C Vk = std::polar(vk, thk), Vm = std::polar(vm, thm);
    const C y = 1.0 / C(br.r, br.x);
    const C ysh(br.g_sh, br.b_sh);
    const C Yff = (y + 0.5 * ysh) / (br.tau * br.tau);
    const C Yft = -y / (br.tau * std::polar(1.0, -br.sigma));
    const double oracle = std::norm(Yff * Vk + Yft * Vm);
    REQUIRE_THAT(lin, WithinRel(oracle, 1e-9));
  }
}

TEST_CASE("linearized flows equal polar flows under the substitution") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Branch br;
    br.r = rng.uniform(1e-3, 0.3);
    br.x = rng.uniform(1e-2, 0.5);
    br.b_sh = rng.uniform(0.0, 0.3);
    br.tau = rng.uniform(0.9, 1.1);
    br.sigma = rng.uniform(-0.2, 0.2);
    const BranchAdmittance a = branch_admittance(br);
    const double vk = rng.uniform(0.9, 1.1), vm = rng.uniform(0.9, 1.1);
    const double th = rng.uniform(-M_PI / 3, M_PI / 3);
    const BranchFlows f = polar_flows(a, vk, vm, th);

    // complex-power oracle S = V (Y V)*
    using C = std::complex<double>;
    const C Vk = std::polar(vk, th), Vm = std::polar(vm, 0.0);
    const C Yff(a.Gkk, a.Bkk), Yft(a.Gkm, a.Bkm), Ytf(a.Gmk, a.Bmk),
        Ytt(a.Gmm, a.Bmm);
    const C Skm = Vk * std::conj(Yff * Vk + Yft * Vm);
    const C Smk = Vm * std::conj(Ytf * Vk + Ytt * Vm);
    REQUIRE_THAT(f.Pkm, WithinAbs(Skm.real(), 1e-9));
    REQUIRE_THAT(f.Qkm, WithinAbs(Skm.imag(), 1e-9));
    REQUIRE_THAT(f.Pmk, WithinAbs(Smk.real(), 1e-9));
    REQUIRE_THAT(f.Qmk, WithinAbs(Smk.imag(), 1e-9));
  }
}

TEST_CASE("loss identity for simple lines") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    Branch br;
    br.r = rng.uniform(1e-3, 0.3);
    br.x = rng.uniform(1e-2, 0.5);
    const BranchAdmittance a = branch_admittance(br);
    const double vk = rng.uniform(0.9, 1.1), vm = rng.uniform(0.9, 1.1);
    const double th = rng.uniform(-M_PI / 3, M_PI / 3);
    const BranchFlows f = polar_flows(a, vk, vm, th);
    const double c = vk * vm * std::cos(th);
    const double g = a.Gkk;
    REQUIRE_THAT(branch_loss(f.Pkm, f.Pmk),
                 WithinAbs(g * (vk * vk + vm * vm - 2.0 * c), 1e-9));
  }
}

TEST_CASE("branch_loss basics") {
  CHECK_THAT(branch_loss(0.5, -0.48), WithinAbs(0.02, 1e-15));
  CHECK_THAT(branch_loss(0.5, -0.5), WithinAbs(0.0, 1e-15));
}

TEST_CASE("invalid branches rejected") {
  Branch br;
  br.r = 0.0;
  br.x = 0.0;
  CHECK_THROWS_AS(branch_admittance(br), ModelError);
  br.x = 0.1;
  br.tau = 0.0;
  CHECK_THROWS_AS(branch_admittance(br), ModelError);
}
