#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cutplane {

struct VarId {
  int v = -1;
  bool valid() const { return v >= 0; }
};
struct ConstrId {
  int v = -1;
  bool valid() const { return v >= 0; }
};

enum class Sense { LE, EQ, GE };

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  NumericFailure
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::NumericFailure: return "numeric-failure";
  }
  return "?";
}

struct SolveOutcome {
  SolveStatus status = SolveStatus::NumericFailure;
  double objective = 0.0;
  std::vector<double> primal;  // indexed by VarId; present iff Optimal
  double solve_time = 0.0;     // seconds
  int iterations = 0;
};

// Incremental convex-QP model solved by a primal-dual barrier method
// (Mehrotra predictor-corrector on the bound-constrained standard form).
// Single-owner: mutations and solves must be serialized by the caller.
class QpModel {
 public:
  VarId add_variable(double lb, double ub, double linear_cost,
                     double quadratic_cost) {
    if (lb > ub) throw std::invalid_argument("add_variable: lb > ub");
    if (quadratic_cost < 0.0)
      throw std::invalid_argument("add_variable: quadratic cost < 0");
    vars_.push_back({lb, ub, linear_cost, quadratic_cost});
    return {static_cast<int>(vars_.size()) - 1};
  }

  ConstrId add_linear_constraint(
      const std::vector<std::pair<VarId, double>>& terms, Sense sense,
      double rhs) {
    Row row;
    row.sense = sense;
    row.rhs = rhs;
    std::map<int, double> merged;  // duplicate VarIds are summed
    for (const auto& [vid, coeff] : terms) {
      if (!vid.valid() || vid.v >= static_cast<int>(vars_.size()))
        throw std::invalid_argument("add_linear_constraint: unknown VarId");
      if (!std::isfinite(coeff))
        throw std::invalid_argument("add_linear_constraint: coefficient not finite");
      merged[vid.v] += coeff;
    }
    row.terms.assign(merged.begin(), merged.end());
    rows_.push_back(std::move(row));
    return {static_cast<int>(rows_.size()) - 1};
  }

  void remove_constraint(ConstrId id) {
    if (!id.valid() || id.v >= static_cast<int>(rows_.size()) ||
        !rows_[id.v].alive)
      throw std::invalid_argument("remove_constraint: invalid or removed id");
    rows_[id.v].alive = false;
  }

  std::size_t num_variables() const { return vars_.size(); }

  std::size_t num_live_constraints() const {
    std::size_t n = 0;
    for (const auto& r : rows_)
      if (r.alive) ++n;
    return n;
  }

  // The warm flag is advisory; this backend re-solves from a cold interior
  // point, which trivially satisfies the warm/cold equivalence contract.
  SolveOutcome solve(bool warm = false) {
    (void)warm;
    const auto t0 = std::chrono::steady_clock::now();
    SolveOutcome out = solve_barrier();
    out.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  }

  // LP-format text dump, for debugging.
  void dump_lp(std::ostream& os) const {
    os << "Minimize\n obj:";
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (vars_[j].c != 0.0)
        os << (vars_[j].c >= 0 ? " + " : " - ") << std::abs(vars_[j].c) << " x"
           << j;
    }
    bool quad = false;
    for (const auto& v : vars_) quad = quad || v.q != 0.0;
    if (quad) {
      os << " + [";
      for (std::size_t j = 0; j < vars_.size(); ++j)
        if (vars_[j].q != 0.0) os << " + " << 2.0 * vars_[j].q << " x" << j << "^2";
      os << " ]/2";
    }
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!rows_[i].alive) continue;
      os << " c" << i << ":";
      for (const auto& [j, a] : rows_[i].terms)
        os << (a >= 0 ? " + " : " - ") << std::abs(a) << " x" << j;
      os << (rows_[i].sense == Sense::LE   ? " <= "
             : rows_[i].sense == Sense::EQ ? " = "
                                           : " >= ")
         << rows_[i].rhs << "\n";
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      os << " ";
      if (std::isinf(vars_[j].lb) && std::isinf(vars_[j].ub))
        os << "x" << j << " free";
      else
        os << vars_[j].lb << " <= x" << j << " <= " << vars_[j].ub;
      os << "\n";
    }
    os << "End\n";
  }

 private:
  struct Var {
    double lb, ub, c, q;
  };
  struct Row {
    std::vector<std::pair<int, double>> terms;
    Sense sense = Sense::EQ;
    double rhs = 0.0;
    bool alive = true;
  };

  std::vector<Var> vars_;
  std::vector<Row> rows_;

  using SpMat = Eigen::SparseMatrix<double>;
  using Vec = Eigen::VectorXd;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  SolveOutcome solve_barrier() const {
    SolveOutcome out;

    // ---- assemble standard form: min 1/2 x'Qx + c'x, Ax = b, l <= x <= u
    const int nv = static_cast<int>(vars_.size());
    std::vector<const Row*> live;
    for (const auto& r : rows_)
      if (r.alive) live.push_back(&r);
    const int m = static_cast<int>(live.size());

    // trivial contradictions on empty rows
    for (const Row* r : live) {
      if (!r->terms.empty()) continue;
      const bool ok = (r->sense == Sense::EQ && r->rhs == 0.0) ||
                      (r->sense == Sense::LE && r->rhs >= 0.0) ||
                      (r->sense == Sense::GE && r->rhs <= 0.0);
      if (!ok) {
        out.status = SolveStatus::Infeasible;
        return out;
      }
    }

    int n = nv;  // slacks appended
    std::vector<double> lb(vars_.size()), ub(vars_.size()), cl(vars_.size()),
        qd(vars_.size());
    for (int j = 0; j < nv; ++j) {
      lb[j] = vars_[j].lb;
      ub[j] = vars_[j].ub;
      cl[j] = vars_[j].c;
      qd[j] = 2.0 * vars_[j].q;  // objective carries q * x^2
    }
    std::vector<Eigen::Triplet<double>> trips;
    Vec b(m);
    for (int i = 0; i < m; ++i) {
      const Row& r = *live[i];
      double scale = 1.0;
      for (const auto& [j, a] : r.terms) scale = std::max(scale, std::abs(a));
      scale = 1.0 / scale;
      for (const auto& [j, a] : r.terms) trips.emplace_back(i, j, a * scale);
      b(i) = r.rhs * scale;
      if (r.sense != Sense::EQ) {
        // a'x + w = rhs with w >= 0 (LE) / w <= 0 (GE)
        trips.emplace_back(i, n, 1.0);
        lb.push_back(r.sense == Sense::LE ? 0.0 : -kInf);
        ub.push_back(r.sense == Sense::LE ? kInf : 0.0);
        cl.push_back(0.0);
        qd.push_back(0.0);
        ++n;
      }
    }
    SpMat A(m, n);
    A.setFromTriplets(trips.begin(), trips.end());
    SpMat At = A.transpose();

    const Vec c = Eigen::Map<const Vec>(cl.data(), n);
    const Vec q = Eigen::Map<const Vec>(qd.data(), n);
    const Vec l = Eigen::Map<const Vec>(lb.data(), n);
    const Vec u = Eigen::Map<const Vec>(ub.data(), n);

    std::vector<int> hasL, hasU;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(l(j))) hasL.push_back(j);
      if (std::isfinite(u(j))) hasU.push_back(j);
    }
    const int nb = static_cast<int>(hasL.size() + hasU.size());

    const double kFixPad = 1e-10;
    Vec lw = l, uw = u;
    for (int j = 0; j < n; ++j)
      if (std::isfinite(l(j)) && std::isfinite(u(j)) && uw(j) - lw(j) < kFixPad) {
        lw(j) -= kFixPad;
        uw(j) += kFixPad;
      }

    const double bnorm = 1.0 + b.lpNorm<Eigen::Infinity>();
    const double cnorm = 1.0 + c.lpNorm<Eigen::Infinity>();
    const double tol = 1e-8;

    // KKT matrix pattern: [[Q + D + rho, A'], [A, -delta]]
    double reg_floor = 1e-12;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
    bool analyzed = false;

    // ---- starting point: x, y from a regularized equality-constrained
    // solve (bounds ignored), then z chosen to absorb the dual residual so
    // the first iterate is nearly dual feasible
    Vec x(n), zl = Vec::Zero(n), zu = Vec::Zero(n), y = Vec::Zero(m);
    {
      std::vector<Eigen::Triplet<double>> kt;
      kt.reserve(A.nonZeros() + n + m);
      for (int j = 0; j < n; ++j) kt.emplace_back(j, j, q(j) + 1.0);
      for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator iter(A, k); iter; ++iter)
          kt.emplace_back(n + iter.row(), iter.col(), iter.value());
      for (int i = 0; i < m; ++i) kt.emplace_back(n + i, n + i, -1e-8);
      SpMat K0(n + m, n + m);
      K0.setFromTriplets(kt.begin(), kt.end());
      ldlt.analyzePattern(K0);
      analyzed = true;
      ldlt.factorize(K0);
      Vec xh = Vec::Zero(n);
      if (ldlt.info() == Eigen::Success) {
        Vec rhs(n + m);
        rhs.head(n) = -c;
        rhs.tail(m) = b;
        Vec sol = ldlt.solve(rhs);
        xh = sol.head(n);
        y = -sol.tail(m);
      }
      const Vec r = q.cwiseProduct(xh) + c - At * y;
      const double dz = 0.1 * cnorm;
      for (int j = 0; j < n; ++j) {
        const bool fl = std::isfinite(lw(j)), fu = std::isfinite(uw(j));
        if (fl && fu) {
          const double margin = std::min(0.25 * (uw(j) - lw(j)), 1.0);
          x(j) = std::clamp(xh(j), lw(j) + margin, uw(j) - margin);
        } else if (fl) {
          x(j) = std::max(xh(j), lw(j) + 1.0);
        } else if (fu) {
          x(j) = std::min(xh(j), uw(j) - 1.0);
        } else {
          x(j) = xh(j);
        }
        if (fl) zl(j) = dz + std::max(r(j), 0.0);
        if (fu) zu(j) = dz + std::max(-r(j), 0.0);
      }
    }

    auto objective = [&](const Vec& xx) {
      return 0.5 * xx.dot(q.cwiseProduct(xx)) + c.dot(xx);
    };

    const int maxit = 200;
    double best_rp = kInf;
    int stall = 0;

    for (int it = 0; it < maxit; ++it) {
      out.iterations = it + 1;
      Vec rd = q.cwiseProduct(x) + c - At * y - zl + zu;  // dual residual
      Vec rp = A * x - b;                                 // primal residual
      double mu = 0.0;
      for (int j : hasL) mu += (x(j) - lw(j)) * zl(j);
      for (int j : hasU) mu += (uw(j) - x(j)) * zu(j);
      if (nb > 0) mu /= nb;

      const double rpn = rp.lpNorm<Eigen::Infinity>();
      const double rdn = rd.lpNorm<Eigen::Infinity>();
      const double obj = objective(x);
      const double gap_tol = tol * (1.0 + std::abs(obj));
#ifdef CUTPLANE_QP_TRACE
      std::fprintf(stderr, "it=%d obj=%.6g rp=%.3g rd=%.3g mu=%.3g\n", it, obj,
                   rpn, rdn, mu);
#endif

      const double xs = 1.0 + x.lpNorm<Eigen::Infinity>();
      const bool strict = rpn <= tol * bnorm && rdn <= tol * cnorm &&
                          (nb == 0 || mu * nb <= gap_tol);
      // once complementarity is exhausted the regularized system cannot
      // improve the primal residual further; accept a slightly looser point
      const bool exhausted = rpn <= 1e-5 * xs && rdn <= 1e-6 * cnorm &&
                             (nb == 0 || mu * nb <= 1e-9 * (1.0 + std::abs(obj)));
      if (strict || exhausted) {
        out.status = SolveStatus::Optimal;
        out.objective = obj;
        out.primal.assign(x.data(), x.data() + nv);
        return out;
      }

      // divergence / infeasibility heuristics
      if (x.lpNorm<Eigen::Infinity>() > 1e13 || obj < -1e13) {
        out.status = SolveStatus::Unbounded;
        return out;
      }
      const double dualnorm =
          y.lpNorm<Eigen::Infinity>() +
          zl.lpNorm<Eigen::Infinity>() + zu.lpNorm<Eigen::Infinity>();
      if (it > 10 && nb > 0 &&
          ((mu < 1e-10 && rpn > tol * bnorm * 1e2) ||
           (dualnorm > 1e12 && rpn > tol * bnorm))) {
        out.status = SolveStatus::Infeasible;
        return out;
      }
      const double merit = rpn + rdn + mu;
      if (merit < best_rp * 0.9999) {
        best_rp = merit;
        stall = 0;
      } else if (++stall > 40) {
        out.status = rpn > tol * bnorm * 1e2 ? SolveStatus::Infeasible
                                             : SolveStatus::NumericFailure;
        return out;
      }

      // barrier diagonal; distances floored so late iterates stay finite
      auto gl = [&](int j) { return std::max(x(j) - lw(j), 1e-14); };
      auto gu = [&](int j) { return std::max(uw(j) - x(j), 1e-14); };
      Vec D = Vec::Zero(n);
      for (int j : hasL) D(j) += zl(j) / gl(j);
      for (int j : hasU) D(j) += zu(j) / gu(j);

      // shrink the proximal shifts with the barrier parameter so they do not
      // bias late iterates, but never below what the factorization tolerates
      const double rho_it =
          std::clamp(1e-2 * mu, reg_floor, std::max(1e-8, reg_floor));
      const double delta_it = rho_it;
      std::vector<Eigen::Triplet<double>> kt;
      kt.reserve(A.nonZeros() + n + m);
      for (int j = 0; j < n; ++j)
        kt.emplace_back(j, j, q(j) + D(j) + rho_it);
      for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator iter(A, k); iter; ++iter)
          kt.emplace_back(n + iter.row(), iter.col(), iter.value());
      for (int i = 0; i < m; ++i) kt.emplace_back(n + i, n + i, -delta_it);
      SpMat K(n + m, n + m);
      K.setFromTriplets(kt.begin(), kt.end());

      if (!analyzed) {
        ldlt.analyzePattern(K);
        analyzed = true;
      }
      ldlt.factorize(K);
#ifdef CUTPLANE_QP_TRACE
      if (ldlt.info() != Eigen::Success)
        std::fprintf(stderr, "  factorize failed, floor=%g\n", reg_floor);
#endif
      if (ldlt.info() != Eigen::Success) {
        reg_floor = std::max(reg_floor * 100.0, 1e-10);
        if (reg_floor > 1e-2) {
          out.status = SolveStatus::NumericFailure;
          return out;
        }
        continue;
      }

      auto kkt_solve = [&](const Vec& rx, const Vec& ry, Vec& dx, Vec& dy) {
        Vec rhs(n + m);
        rhs.head(n) = rx;
        rhs.tail(m) = ry;
        // refine against the unregularized system so the rho/delta shifts do
        // not bias the step (K stores the lower triangle only)
        Vec sol = ldlt.solve(rhs);
        for (int pass = 0; pass < 3; ++pass) {
          Vec resid = rhs - K.selfadjointView<Eigen::Lower>() * sol;
          resid.head(n) += rho_it * sol.head(n);
          resid.tail(m) -= delta_it * sol.tail(m);
          sol += ldlt.solve(resid);
        }
        dx = sol.head(n);
        dy = -sol.tail(m);
      };

      // predictor (affine scaling) direction; eliminating dzl, dzu against a
      // zero complementarity target reduces the x-row rhs to -(Qx + c - A'y)
      Vec rdz = q.cwiseProduct(x) + c - At * y;
      Vec dx_a, dy_a;
      kkt_solve(-rdz, -rp, dx_a, dy_a);
      Vec dzl_a = Vec::Zero(n), dzu_a = Vec::Zero(n);
      for (int j : hasL)
        dzl_a(j) = (-(x(j) - lw(j)) * zl(j) - zl(j) * dx_a(j)) / gl(j);
      for (int j : hasU)
        dzu_a(j) = (-(uw(j) - x(j)) * zu(j) + zu(j) * dx_a(j)) / gu(j);

      auto step_to_boundary = [&](const Vec& dx, const Vec& dzl,
                                  const Vec& dzu) {
        double ap = 1.0, ad = 1.0;
        for (int j : hasL) {
          if (dx(j) < 0) ap = std::min(ap, -(x(j) - lw(j)) / dx(j));
          if (dzl(j) < 0) ad = std::min(ad, -zl(j) / dzl(j));
        }
        for (int j : hasU) {
          if (dx(j) > 0) ap = std::min(ap, (uw(j) - x(j)) / dx(j));
          if (dzu(j) < 0) ad = std::min(ad, -zu(j) / dzu(j));
        }
        return std::pair<double, double>{ap, ad};
      };

      double sigma = 0.0, mu_target = 0.0;
      if (nb > 0) {
        auto [apa, ada] = step_to_boundary(dx_a, dzl_a, dzu_a);
        double mu_aff = 0.0;
        for (int j : hasL)
          mu_aff += (x(j) - lw(j) + apa * dx_a(j)) * (zl(j) + ada * dzl_a(j));
        for (int j : hasU)
          mu_aff += (uw(j) - x(j) - apa * dx_a(j)) * (zu(j) + ada * dzu_a(j));
        mu_aff /= nb;
        sigma = mu > 0 ? std::pow(mu_aff / mu, 3.0) : 0.0;
        sigma = std::clamp(sigma, 1e-8, 1.0);
        mu_target = sigma * mu;
      }

      // corrector
      Vec rx_c = -rdz;
      for (int j : hasL)
        rx_c(j) += (mu_target - dx_a(j) * dzl_a(j)) / gl(j);
      for (int j : hasU)
        rx_c(j) -= (mu_target + dx_a(j) * dzu_a(j)) / gu(j);
      Vec dx, dy;
      kkt_solve(rx_c, -rp, dx, dy);
      Vec dzl = Vec::Zero(n), dzu = Vec::Zero(n);
      for (int j : hasL)
        dzl(j) = (mu_target - dx_a(j) * dzl_a(j) - (x(j) - lw(j)) * zl(j) -
                  zl(j) * dx(j)) /
                 gl(j);
      for (int j : hasU)
        dzu(j) = (mu_target + dx_a(j) * dzu_a(j) - (uw(j) - x(j)) * zu(j) +
                  zu(j) * dx(j)) /
                 gu(j);

      auto [ap, ad] = step_to_boundary(dx, dzl, dzu);
      const double frac = it < 5 ? 0.9 : 0.995;
      ap = std::min(1.0, frac * ap);
      ad = std::min(1.0, frac * ad);
      if (nb == 0) ap = ad = 1.0;

#ifdef CUTPLANE_QP_TRACE
      {
        Vec chk = q.cwiseProduct(dx) + D.cwiseProduct(dx) - At * dy - rx_c;
        Vec chk2 = A * dx + rp;
        std::fprintf(stderr,
                     "  ap=%.3g ad=%.3g |dy|=%.3g sigma=%.3g kktres=%.3g/%.3g\n",
                     ap, ad, dy.lpNorm<Eigen::Infinity>(), sigma,
                     chk.lpNorm<Eigen::Infinity>(),
                     chk2.lpNorm<Eigen::Infinity>());
      }
#endif
      x += ap * dx;
      y += ad * dy;
      for (int j : hasL) zl(j) += ad * dzl(j);
      for (int j : hasU) zu(j) += ad * dzu(j);

      if (!x.allFinite() || !y.allFinite()) {
        out.status = SolveStatus::NumericFailure;
        return out;
      }
    }
    out.status = SolveStatus::IterationLimit;
    out.objective = objective(x);
    return out;
  }
};

}  // namespace cutplane
