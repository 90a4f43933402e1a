#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutplane/network.hpp"

namespace cutplane {

enum class CutFamily { Jabr, I2, Limit };

inline const char* to_string(CutFamily f) {
  switch (f) {
    case CutFamily::Jabr: return "jabr";
    case CutFamily::I2: return "i2";
    case CutFamily::Limit: return "limit";
  }
  return "?";
}

// Variable roles a cut coefficient may attach to, all per-branch.
enum class VarRole : int { C, S, Vk2, Vm2, I2, Pkm, Qkm, Pmk, Qmk };
inline constexpr int kNumRoles = 9;

inline const char* to_string(VarRole r) {
  static const char* names[kNumRoles] = {"c",  "s",   "vk2", "vm2", "i2",
                                         "Pkm", "Qkm", "Pmk", "Qmk"};
  return names[static_cast<int>(r)];
}

inline VarRole role_from_string(const std::string& s) {
  for (int i = 0; i < kNumRoles; ++i)
    if (s == to_string(static_cast<VarRole>(i))) return static_cast<VarRole>(i);
  throw std::invalid_argument("unknown variable role: " + s);
}

// A linear inequality sum(coeff * var) <= rhs over at most 5 per-branch
// variables. Coefficients are normalized to unit Euclidean norm at birth.
struct LinearCut {
  CutFamily family = CutFamily::Jabr;
  int branch = -1;
  std::vector<std::pair<VarRole, double>> terms;
  double rhs = 0.0;
  double violation_at_birth = 0.0;

  // lhs - with values supplied per role
  double lhs(const std::array<double, kNumRoles>& vals) const {
    double s = 0.0;
    for (const auto& [role, coeff] : terms) s += coeff * vals[static_cast<int>(role)];
    return s;
  }
};

namespace detail {

inline void normalize(LinearCut& cut) {
  double n2 = 0.0;
  for (const auto& [role, coeff] : cut.terms) n2 += coeff * coeff;
  const double norm = std::sqrt(n2);
  if (!(norm > 0.0)) throw std::logic_error("cut with zero normal");
  for (auto& [role, coeff] : cut.terms) coeff /= norm;
  cut.rhs /= norm;
}

}  // namespace detail

// Projection of (x', s') onto the second-order cone ||x|| <= s.
// Requires ||x'|| > s' (outside the cone) and s' > 0.
inline std::pair<std::vector<double>, double> project_to_soc(
    const std::vector<double>& xprime, double sprime) {
  double nx = 0.0;
  for (double v : xprime) nx += v * v;
  nx = std::sqrt(nx);
  if (!(sprime > 0.0))
    throw std::invalid_argument("project_to_soc: s' must be positive");
  if (!(nx > sprime))
    throw std::invalid_argument("project_to_soc: point not outside the cone");
  const double s0 = 0.5 * (nx + sprime);
  std::vector<double> x0(xprime.size());
  for (std::size_t i = 0; i < xprime.size(); ++i) x0[i] = s0 * xprime[i] / nx;
  return {x0, s0};
}

namespace detail {

// Maximum-distance cut for the rotated cone x^2 + y^2 <= w z at the violated
// point (x', y', w', z'):
//   4x' x + 4y' y + ((w'-z') - n0) w + (-(w'-z') - n0) z <= 0,
// n0 = ||(2x', 2y', w'-z')||.
inline LinearCut rotated_cone_cut(CutFamily family, int branch, double xp,
                                  double yp, double wp, double zp,
                                  std::array<VarRole, 4> roles) {
  const double viol = xp * xp + yp * yp - wp * zp;
  if (!(viol > 0.0))
    throw std::invalid_argument("rotated-cone cut: point not violated");
  if (!(wp + zp > 0.0))
    throw std::invalid_argument("rotated-cone cut: w' + z' must be positive");
  const double d = wp - zp;
  const double n0 = std::sqrt(4.0 * xp * xp + 4.0 * yp * yp + d * d);
  LinearCut cut;
  cut.family = family;
  cut.branch = branch;
  cut.terms = {{roles[0], 4.0 * xp},
               {roles[1], 4.0 * yp},
               {roles[2], d - n0},
               {roles[3], -d - n0}};
  cut.rhs = 0.0;
  cut.violation_at_birth = viol;
  normalize(cut);
  return cut;
}

}  // namespace detail

// Jabr cone c^2 + s^2 <= vk2 * vm2.
inline LinearCut jabr_cut(int branch, double cp, double sp, double vkp,
                          double vmp) {
  return detail::rotated_cone_cut(
      CutFamily::Jabr, branch, cp, sp, vkp, vmp,
      {VarRole::C, VarRole::S, VarRole::Vk2, VarRole::Vm2});
}

// i2 cone Pkm^2 + Qkm^2 <= vk2 * i2.
inline LinearCut i2_cut(int branch, double Pp, double Qp, double vkp,
                        double i2p) {
  return detail::rotated_cone_cut(
      CutFamily::I2, branch, Pp, Qp, vkp, i2p,
      {VarRole::Pkm, VarRole::Qkm, VarRole::Vk2, VarRole::I2});
}

// Thermal disk P^2 + Q^2 <= U^2, tangent cut P' P + Q' Q <= U ||(P', Q')||.
inline LinearCut limit_cut(int branch, double Pp, double Qp, double U,
                           bool from_side = true) {
  if (std::isinf(U)) throw std::invalid_argument("limit_cut: no thermal limit");
  const double n = std::hypot(Pp, Qp);
  if (!(n > U)) throw std::invalid_argument("limit_cut: point inside the disk");
  LinearCut cut;
  cut.family = CutFamily::Limit;
  cut.branch = branch;
  cut.terms = {{from_side ? VarRole::Pkm : VarRole::Pmk, Pp},
               {from_side ? VarRole::Qkm : VarRole::Qmk, Qp}};
  cut.rhs = U * n;
  cut.violation_at_birth = Pp * Pp + Qp * Qp - U * U;
  detail::normalize(cut);
  return cut;
}

struct Violation {
  int branch;
  double violation;
  bool from_side = true;  // relevant for limit cuts only
};

struct ViolationLists {
  std::vector<Violation> jabr;
  std::vector<Violation> i2;
  std::vector<Violation> limit;

  bool empty() const { return jabr.empty() && i2.empty() && limit.empty(); }
  double max_jabr() const { return jabr.empty() ? 0.0 : jabr.front().violation; }
  double max_i2() const { return i2.empty() ? 0.0 : i2.front().violation; }
  double max_limit() const {
    return limit.empty() ? 0.0 : limit.front().violation;
  }
};

// Per-branch values of a solution point, supplied by the relaxation model.
struct BranchPoint {
  double c, s, vk2, vm2, i2;
  double Pkm, Qkm, Pmk, Qmk;

  std::array<double, kNumRoles> roles() const {
    return {c, s, vk2, vm2, i2, Pkm, Qkm, Pmk, Qmk};
  }
};

// Violated-branch sets, sorted by raw algebraic violation descending,
// ties broken by branch index. Limit violations examine both orientations
// and keep the larger.
template <class BranchPointFn>
ViolationLists find_violations(int num_branches, const std::vector<Branch>& branches,
                               BranchPointFn&& at, double eps_jabr,
                               double eps_i2, double eps_lim) {
  ViolationLists lists;
  for (int e = 0; e < num_branches; ++e) {
    const BranchPoint p = at(e);
    const double vj = p.c * p.c + p.s * p.s - p.vk2 * p.vm2;
    if (vj > eps_jabr) lists.jabr.push_back({e, vj, true});
    const double vi = p.Pkm * p.Pkm + p.Qkm * p.Qkm - p.vk2 * p.i2;
    if (vi > eps_i2) lists.i2.push_back({e, vi, true});
    const double U = branches[e].limit;
    if (std::isfinite(U)) {
      const double vf = p.Pkm * p.Pkm + p.Qkm * p.Qkm - U * U;
      const double vt = p.Pmk * p.Pmk + p.Qmk * p.Qmk - U * U;
      const double v = std::max(vf, vt);
      if (v > eps_lim) lists.limit.push_back({e, v, vf >= vt});
    }
  }
  auto order = [](const Violation& a, const Violation& b) {
    if (a.violation != b.violation) return a.violation > b.violation;
    return a.branch < b.branch;
  };
  std::sort(lists.jabr.begin(), lists.jabr.end(), order);
  std::sort(lists.i2.begin(), lists.i2.end(), order);
  std::sort(lists.limit.begin(), lists.limit.end(), order);
  return lists;
}

}  // namespace cutplane
