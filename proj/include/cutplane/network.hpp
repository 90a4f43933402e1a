#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cutplane {

inline constexpr double kNoLimit = std::numeric_limits<double>::infinity();

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cost of one generator, applied to base-scaled active power (MW).
struct GeneratorCost {
  enum class Kind { Quadratic, PiecewiseLinear };
  struct Point {
    double p;     // MW
    double cost;  // $/h
  };

  Kind kind = Kind::Quadratic;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // cost = c2*P^2 + c1*P + c0, P in MW
  std::vector<Point> points;            // PWL breakpoints, strictly increasing p

  double eval_mw(double p_mw) const {
    if (kind == Kind::Quadratic) return (c2 * p_mw + c1) * p_mw + c0;
    if (points.size() < 2) return points.empty() ? 0.0 : points.front().cost;
    std::size_t i = 1;
    while (i + 1 < points.size() && p_mw > points[i].p) ++i;
    const Point& a = points[i - 1];
    const Point& b = points[i];
    const double t = (p_mw - a.p) / (b.p - a.p);
    return a.cost + t * (b.cost - a.cost);
  }
};

struct Bus {
  int index = -1;        // dense index in Network::buses
  int original_id = -1;  // id as written in the case file
  double Pd = 0.0, Qd = 0.0;  // loads, p.u.
  double Gs = 0.0, Bs = 0.0;  // bus shunt, p.u.
  double Vmin = 0.0, Vmax = 0.0;
};

struct Branch {
  int from = -1, to = -1;  // dense bus indices
  double r = 0.0, x = 0.0;
  double b_sh = 0.0;           // total line-charging susceptance, p.u.
  double g_sh = 0.0;           // shunt conductance (0 for MATPOWER input)
  double tau = 1.0;            // tap ratio, from side
  double sigma = 0.0;          // phase shift, rad
  double limit = kNoLimit;     // thermal limit U, p.u. apparent power
  double angle_bound = M_PI;   // |theta_k - theta_m| bound, stored only
};

struct Generator {
  int bus = -1;
  double Pmin = 0.0, Pmax = 0.0;
  double Qmin = 0.0, Qmax = 0.0;
  GeneratorCost cost;
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<std::vector<int>> branches_at;  // bus -> incident branch indices
  std::vector<std::vector<int>> gens_at;      // bus -> generator indices

  void rebuild_incidence() {
    branches_at.assign(buses.size(), {});
    gens_at.assign(buses.size(), {});
    for (std::size_t e = 0; e < branches.size(); ++e) {
      const Branch& br = branches[e];
      if (br.from < 0 || br.from >= static_cast<int>(buses.size()) ||
          br.to < 0 || br.to >= static_cast<int>(buses.size()))
        throw ModelError("branch endpoint references unknown bus");
      branches_at[br.from].push_back(static_cast<int>(e));
      branches_at[br.to].push_back(static_cast<int>(e));
    }
    for (std::size_t g = 0; g < generators.size(); ++g) {
      if (generators[g].bus < 0 ||
          generators[g].bus >= static_cast<int>(buses.size()))
        throw ModelError("generator references unknown bus");
      gens_at[generators[g].bus].push_back(static_cast<int>(g));
    }
  }
};

// 2x2 branch admittance entries plus the linear i2 coefficients.
struct BranchAdmittance {
  double Gkk = 0, Bkk = 0, Gkm = 0, Bkm = 0;
  double Gmk = 0, Bmk = 0, Gmm = 0, Bmm = 0;
  double alpha = 0, beta = 0, gamma = 0, zeta = 0;
};

// Y = [ (y + y_sh/2)/tau^2        -y/(tau e^{-j sigma}) ]
//     [ -y/(tau e^{j sigma})       y + y_sh/2           ]
// with y = 1/(r + jx), y_sh = g_sh + j b_sh.
inline BranchAdmittance branch_admittance(const Branch& br) {
  if (!(br.tau > 0.0)) throw ModelError("branch tap ratio must be positive");
  if (br.r * br.r + br.x * br.x <= 0.0)
    throw ModelError("branch series impedance is zero");
  using C = std::complex<double>;
  const C y = 1.0 / C(br.r, br.x);
  const C ysh(br.g_sh, br.b_sh);
  const C rot(std::cos(br.sigma), std::sin(br.sigma));
  const C Yff = (y + 0.5 * ysh) / (br.tau * br.tau);
  const C Yft = -y / (br.tau * std::conj(rot));
  const C Ytf = -y / (br.tau * rot);
  const C Ytt = y + 0.5 * ysh;

  BranchAdmittance a;
  a.Gkk = Yff.real();
  a.Bkk = Yff.imag();
  a.Gkm = Yft.real();
  a.Bkm = Yft.imag();
  a.Gmk = Ytf.real();
  a.Bmk = Ytf.imag();
  a.Gmm = Ytt.real();
  a.Bmm = Ytt.imag();

  const double g = y.real(), b = y.imag();
  const double gsh = br.g_sh, bsh = br.b_sh;
  const double y2 = g * g + b * b;
  const double mix = g * gsh + b * bsh;
  const double cross = b * gsh - g * bsh;
  const double t2 = br.tau * br.tau;
  const double t3 = t2 * br.tau;
  const double t4 = t2 * t2;
  const double cs = std::cos(br.sigma), sn = std::sin(br.sigma);
  a.alpha = (y2 + mix + 0.25 * (gsh * gsh + bsh * bsh)) / t4;
  a.beta = y2 / t2;
  a.gamma = (cs * (-2.0 * y2 - mix) + sn * cross) / t3;
  a.zeta = (sn * (-2.0 * y2 - mix) - cs * cross) / t3;
  return a;
}

// i2 = alpha vk2 + beta vm2 + gamma c + zeta s
inline double i2_value(const BranchAdmittance& a, double vk2, double vm2,
                       double c, double s) {
  return a.alpha * vk2 + a.beta * vm2 + a.gamma * c + a.zeta * s;
}

// active-power loss on a branch
inline double branch_loss(double Pkm, double Pmk) { return Pkm + Pmk; }

// Polar-form flows on one branch for a voltage assignment; used by tests and
// by the flow-equivalence checks.
struct BranchFlows {
  double Pkm, Pmk, Qkm, Qmk;
};

inline BranchFlows polar_flows(const BranchAdmittance& a, double vk, double vm,
                               double theta_km) {
  const double c = vk * vm * std::cos(theta_km);
  const double s = vk * vm * std::sin(theta_km);
  const double vk2 = vk * vk, vm2 = vm * vm;
  BranchFlows f;
  f.Pkm = a.Gkk * vk2 + a.Gkm * c + a.Bkm * s;
  f.Pmk = a.Gmm * vm2 + a.Gmk * c - a.Bmk * s;
  f.Qkm = -a.Bkk * vk2 - a.Bkm * c + a.Gkm * s;
  f.Qmk = -a.Bmm * vm2 - a.Bmk * c - a.Gmk * s;
  return f;
}

}  // namespace cutplane
