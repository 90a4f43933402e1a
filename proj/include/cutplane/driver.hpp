#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "cutplane/cut_manager.hpp"
#include "cutplane/relaxation.hpp"
#include "cutplane/separation.hpp"

namespace cutplane {

struct AlgorithmParams {
  double time_limit = 1000.0;  // seconds
  int stall_rounds = 5;        // T_ftol
  int cut_age = 5;             // T_age
  double eps_jabr = 1e-5;
  double eps_i2 = 1e-5;
  double eps_lim = 1e-5;
  double eps_par = 1e-2;
  double eps_ftol = 1e-5;
  double p_jabr = 15.0;  // percent
  double p_i2 = 15.0;
  double p_lim = 15.0;
  // branches whose jabr and i2 cones are not separated (relax-one experiment)
  std::vector<int> suppress_cone_branches;

  void validate() const {
    if (!(time_limit > 0)) throw ModelError("time limit must be positive");
    for (double p : {p_jabr, p_i2, p_lim})
      if (!(p > 0.0 && p <= 100.0))
        throw ModelError("top-percentages must lie in (0, 100]");
    for (double e : {eps_jabr, eps_i2, eps_lim, eps_ftol})
      if (!(e > 0.0)) throw ModelError("tolerances must be positive");
    if (!(eps_par > 0.0 && eps_par < 1.0))
      throw ModelError("eps-par must lie in (0, 1)");
  }
};

enum class RunStatus { Converged, Stalled, TimeLimit, Infeasible, NumericFailure };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::Stalled: return "stalled";
    case RunStatus::TimeLimit: return "time-limit";
    case RunStatus::Infeasible: return "infeasible";
    case RunStatus::NumericFailure: return "numeric-failure";
  }
  return "?";
}

struct RoundLog {
  int round = 0;
  double z = 0.0;
  int computed = 0;
  int added = 0;
  int dropped = 0;
  double solve_time = 0.0;
  double max_viol_jabr = 0.0, max_viol_i2 = 0.0, max_viol_lim = 0.0;
};

struct RunReport {
  RunStatus status = RunStatus::NumericFailure;
  double best_bound = -std::numeric_limits<double>::infinity();
  int total_solves = 0;
  int cut_rounds = 0;  // rounds in which cuts were computed
  double wall_time = 0.0;
  bool warm = false;
  double round0_bound = 0.0;
  int total_computed = 0, total_added = 0, total_dropped = 0;
  std::vector<RoundLog> rounds;
  SolutionPoint final_point;  // valid unless status is Infeasible/NumericFailure

  void write_text(std::ostream& os) const {
    for (const RoundLog& r : rounds) {
      os << "round=" << r.round << " z=" << r.z << " computed=" << r.computed
         << " added=" << r.added << " dropped=" << r.dropped
         << " solve_time=" << r.solve_time << " max_viol_jabr=" << r.max_viol_jabr
         << " max_viol_i2=" << r.max_viol_i2 << " max_viol_lim=" << r.max_viol_lim
         << "\n";
    }
    os << "status=" << to_string(status) << " bound=" << best_bound
       << " solves=" << total_solves << " cut_rounds=" << cut_rounds
       << " computed=" << total_computed << " added=" << total_added
       << " dropped=" << total_dropped << " wall_time=" << wall_time
       << " warm=" << (warm ? 1 : 0) << "\n";
  }

  void write_csv(std::ostream& os) const {
    os << "round,z,computed,added,dropped,time\n";
    char buf[64];
    for (const RoundLog& r : rounds) {
      std::snprintf(buf, sizeof(buf), "%.10g", r.z);
      os << r.round << "," << buf << "," << r.computed << "," << r.added << ","
         << r.dropped << ",";
      std::snprintf(buf, sizeof(buf), "%.6g", r.solve_time);
      os << buf << "\n";
    }
  }
};

namespace detail {

inline ViolationLists separate(const RelaxationModel& rm,
                               const SolutionPoint& pt,
                               const AlgorithmParams& p) {
  ViolationLists lists = find_violations(
      static_cast<int>(rm.net.branches.size()), rm.net.branches,
      [&](int e) { return pt.branch_point(e); }, p.eps_jabr, p.eps_i2,
      p.eps_lim);
  if (!p.suppress_cone_branches.empty()) {
    auto filter = [&](std::vector<Violation>& list) {
      std::erase_if(list, [&](const Violation& v) {
        for (int b : p.suppress_cone_branches)
          if (b == v.branch) return true;
        return false;
      });
    };
    filter(lists.jabr);
    filter(lists.i2);
  }
  return lists;
}

}  // namespace detail

// The outer cutting-plane loop. The manager is caller-owned so warm starts
// can preload archived cuts and the CLI can export the archive afterwards.
inline RunReport cutplane(RelaxationModel& rm, CutManager& manager,
                          const AlgorithmParams& params) {
  params.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  RunReport rep;
  double z_prev = std::numeric_limits<double>::infinity();
  int stall = 0;
  int round = 0;

  while (true) {
    if (elapsed() >= params.time_limit) {
      rep.status = RunStatus::TimeLimit;
      break;
    }
    SolveOutcome outcome = rm.solve(round > 0);
    ++rep.total_solves;
    if (outcome.status == SolveStatus::Infeasible) {
      rep.status = RunStatus::Infeasible;
      break;
    }
    if (outcome.status != SolveStatus::Optimal) {
      rep.status = RunStatus::NumericFailure;
      break;
    }
    const double z = outcome.objective;
    SolutionPoint pt = snapshot(rm, round);
    rep.final_point = pt;
    rep.best_bound = z;
    if (round == 0) rep.round0_bound = z;

    ViolationLists lists = detail::separate(rm, pt, params);

    RoundLog log;
    log.round = round;
    log.z = z;
    log.solve_time = outcome.solve_time;
    log.max_viol_jabr = lists.max_jabr();
    log.max_viol_i2 = lists.max_i2();
    log.max_viol_lim = lists.max_limit();

    if (lists.empty()) {
      rep.rounds.push_back(log);
      rep.status = RunStatus::Converged;
      break;
    }

    auto [computed, added] =
        manager.select_and_add(rm, pt, lists, params.p_jabr, params.p_i2,
                               params.p_lim, params.eps_par, round);
    const int dropped = manager.age_and_expire(rm, pt, params.cut_age,
                                               params.eps_jabr, params.eps_i2,
                                               params.eps_lim);
    log.computed = computed;
    log.added = added;
    log.dropped = dropped;
    rep.rounds.push_back(log);
    rep.total_computed += computed;
    rep.total_added += added;
    rep.total_dropped += dropped;
    ++rep.cut_rounds;

    // stall counter per the improvement test z - z0 < z0 * eps_ftol, with an
    // absolute fallback when the previous bound is ~0
    if (std::isfinite(z_prev)) {
      const double thresh = std::abs(z_prev) > 1e-12
                                ? std::abs(z_prev) * params.eps_ftol
                                : 1e-9;
      if (z - z_prev < thresh)
        ++stall;
      else
        stall = 0;
    }
    z_prev = z;
    if (stall >= params.stall_rounds) {
      rep.status = RunStatus::Stalled;
      break;
    }
    ++round;
  }
  rep.wall_time = elapsed();
  return rep;
}

inline RunReport cutplane(RelaxationModel& rm, const AlgorithmParams& params) {
  CutManager manager;
  return cutplane(rm, manager, params);
}

// Warm start: rebuild M0 for the (possibly perturbed) network, re-instate
// every archived cut, then run the ordinary loop. Archived cuts stay valid
// because the cones they approximate are load-independent.
inline RunReport warm_start(const Network& net, const CutArchive& archive,
                            const AlgorithmParams& params,
                            const BuildOptions& opts, RelaxationModel& rm,
                            CutManager& manager) {
  check_archive(archive, net);
  rm = build_base_model(net, opts);
  for (const auto& [cut, round] : archive.cuts) manager.instate(rm, cut, round);
  RunReport rep = cutplane(rm, manager, params);
  rep.warm = true;
  return rep;
}

inline RunReport warm_start(const Network& net, const CutArchive& archive,
                            const AlgorithmParams& params,
                            const BuildOptions& opts = {}) {
  RelaxationModel rm;
  CutManager manager;
  return warm_start(net, archive, params, opts, rm, manager);
}

}  // namespace cutplane
