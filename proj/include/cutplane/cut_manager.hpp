#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cutplane/relaxation.hpp"
#include "cutplane/separation.hpp"

namespace cutplane {

struct ManagedCut {
  LinearCut cut;
  ConstrId id;         // valid while live
  bool live = false;
  int round_added = 0;
  int age = 0;         // consecutive rounds slack
  double last_slack = 0.0;
};

struct CutArchive {
  int nbus = 0, nbranch = 0;
  std::uint64_t data_hash = 0;
  std::vector<std::pair<LinearCut, int>> cuts;  // cut, round-added
};

// FNV-1a over the per-unit network data; identifies the case an archive
// belongs to. Perturbed loads change the hash but not the topology counts.
inline std::uint64_t network_fingerprint(const Network& net) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  mix(net.base_mva);
  for (const Bus& b : net.buses) {
    mix(b.Pd); mix(b.Qd); mix(b.Gs); mix(b.Bs); mix(b.Vmin); mix(b.Vmax);
  }
  for (const Branch& br : net.branches) {
    mix(br.r); mix(br.x); mix(br.b_sh); mix(br.tau); mix(br.sigma);
    mix(std::isfinite(br.limit) ? br.limit : -1.0);
    mix(static_cast<double>(br.from)); mix(static_cast<double>(br.to));
  }
  for (const Generator& g : net.generators) {
    mix(g.Pmin); mix(g.Pmax); mix(g.Qmin); mix(g.Qmax);
    mix(static_cast<double>(g.bus));
  }
  return h;
}

// epsilon-parallel test on normalized cuts: cosine of the normals over the
// union of variable roles exceeds 1 - eps_par.
inline bool is_parallel(const LinearCut& a, const LinearCut& b,
                        double eps_par) {
  if (a.branch != b.branch) return false;  // disjoint variables, cosine 0
  std::array<double, kNumRoles> va{}, vb{};
  for (const auto& [role, coeff] : a.terms) va[static_cast<int>(role)] = coeff;
  for (const auto& [role, coeff] : b.terms) vb[static_cast<int>(role)] = coeff;
  double dot = 0.0;
  for (int i = 0; i < kNumRoles; ++i) dot += va[i] * vb[i];
  return dot > 1.0 - eps_par;
}

class CutManager {
 public:
  const std::vector<ManagedCut>& live() const { return live_; }
  const std::vector<ManagedCut>& dormant() const { return dormant_; }

  std::size_t live_count() const { return live_.size(); }

  // Adds one cut to the backend and registry unconditionally.
  void instate(RelaxationModel& rm, const LinearCut& cut, int round) {
    ManagedCut mc;
    mc.cut = cut;
    mc.round_added = round;
    mc.live = true;
    mc.id = rm.model.add_linear_constraint(backend_terms(rm, cut), Sense::LE,
                                           cut.rhs);
    live_.push_back(std::move(mc));
  }

  // Top-p% selection with epsilon-parallel rejection against live cuts of the
  // same family and branch. Returns (computed, added).
  std::pair<int, int> select_and_add(RelaxationModel& rm,
                                     const SolutionPoint& pt,
                                     const ViolationLists& lists,
                                     double p_jabr, double p_i2, double p_lim,
                                     double eps_par, int round) {
    int computed = 0, added = 0;
    auto process = [&](const std::vector<Violation>& list, double pct,
                       CutFamily family) {
      if (list.empty()) return;
      const std::size_t take = static_cast<std::size_t>(
          std::ceil(pct / 100.0 * static_cast<double>(list.size())));
      for (std::size_t i = 0; i < take && i < list.size(); ++i) {
        const Violation& v = list[i];
        LinearCut cut;
        switch (family) {
          case CutFamily::Jabr:
            cut = jabr_cut(v.branch, pt.c[v.branch], pt.s[v.branch],
                           pt.vk2_[v.branch], pt.vm2_[v.branch]);
            break;
          case CutFamily::I2:
            cut = i2_cut(v.branch, pt.Pkm[v.branch], pt.Qkm[v.branch],
                         pt.vk2_[v.branch], pt.i2[v.branch]);
            break;
          case CutFamily::Limit: {
            const double U = rm.net.branches[v.branch].limit;
            cut = v.from_side
                      ? limit_cut(v.branch, pt.Pkm[v.branch], pt.Qkm[v.branch],
                                  U, true)
                      : limit_cut(v.branch, pt.Pmk[v.branch], pt.Qmk[v.branch],
                                  U, false);
            break;
          }
        }
        ++computed;
        bool rejected = false;
        for (const ManagedCut& mc : live_) {
          if (mc.cut.family != family || mc.cut.branch != cut.branch) continue;
          if (is_parallel(mc.cut, cut, eps_par)) {
            rejected = true;
            break;
          }
        }
        if (!rejected) {
          instate(rm, cut, round);
          ++added;
        }
      }
    };
    process(lists.jabr, p_jabr, CutFamily::Jabr);
    process(lists.i2, p_i2, CutFamily::I2);
    process(lists.limit, p_lim, CutFamily::Limit);
    return {computed, added};
  }

  // Slack-based aging; cuts slack for T_age consecutive rounds are removed
  // from the backend and parked in the dormant pool. Returns dropped count.
  int age_and_expire(RelaxationModel& rm, const SolutionPoint& pt, int T_age,
                     double eps_jabr, double eps_i2, double eps_lim) {
    int dropped = 0;
    std::vector<ManagedCut> keep;
    keep.reserve(live_.size());
    for (ManagedCut& mc : live_) {
      const auto vals = pt.branch_point(mc.cut.branch).roles();
      mc.last_slack = mc.cut.rhs - mc.cut.lhs(vals);
      const double eps = mc.cut.family == CutFamily::Jabr   ? eps_jabr
                         : mc.cut.family == CutFamily::I2   ? eps_i2
                                                            : eps_lim;
      if (mc.last_slack > eps)
        ++mc.age;
      else
        mc.age = 0;
      if (mc.age >= T_age) {
        rm.model.remove_constraint(mc.id);
        mc.live = false;
        mc.id = {};
        dormant_.push_back(mc);
        ++dropped;
      } else {
        keep.push_back(mc);
      }
    }
    live_ = std::move(keep);
    return dropped;
  }

  void save_archive(const std::string& path, const Network& net) const {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot open archive for writing: " + path);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(network_fingerprint(net)));
    out << "cutarchive v1 " << net.buses.size() << " " << net.branches.size()
        << " " << hash << "\n";
    auto emit = [&out](const ManagedCut& mc) {
      out << to_string(mc.cut.family) << " " << mc.cut.branch;
      char buf[40];
      for (const auto& [role, coeff] : mc.cut.terms) {
        std::snprintf(buf, sizeof(buf), "%.17g", coeff);
        out << " " << to_string(role) << ":" << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", mc.cut.rhs);
      out << " rhs=" << buf << " round=" << mc.round_added << "\n";
    };
    for (const ManagedCut& mc : live_) emit(mc);
    for (const ManagedCut& mc : dormant_) emit(mc);
    out.flush();
    if (!out) throw ModelError("I/O failure writing archive " + path);
  }

 private:
  std::vector<ManagedCut> live_;
  std::vector<ManagedCut> dormant_;

  static std::vector<std::pair<VarId, double>> backend_terms(
      const RelaxationModel& rm, const LinearCut& cut) {
    std::vector<std::pair<VarId, double>> terms;
    const int e = cut.branch;
    const Branch& br = rm.net.branches[e];
    for (const auto& [role, coeff] : cut.terms) {
      VarId id;
      switch (role) {
        case VarRole::C: id = rm.vars.c[e]; break;
        case VarRole::S: id = rm.vars.s[e]; break;
        case VarRole::Vk2: id = rm.vars.v2[br.from]; break;
        case VarRole::Vm2: id = rm.vars.v2[br.to]; break;
        case VarRole::I2: id = rm.vars.i2[e]; break;
        case VarRole::Pkm: id = rm.vars.Pkm[e]; break;
        case VarRole::Qkm: id = rm.vars.Qkm[e]; break;
        case VarRole::Pmk: id = rm.vars.Pmk[e]; break;
        case VarRole::Qmk: id = rm.vars.Qmk[e]; break;
      }
      terms.push_back({id, coeff});
    }
    return terms;
  }
};

inline CutArchive load_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open archive: " + path);
  CutArchive arc;
  std::string header, magic, version, hash;
  if (!std::getline(in, header)) throw ModelError("empty archive " + path);
  {
    std::istringstream ss(header);
    if (!(ss >> magic >> version >> arc.nbus >> arc.nbranch >> hash) ||
        magic != "cutarchive")
      throw ModelError("malformed archive header in " + path);
    if (version != "v1")
      throw ModelError("unrecognized archive version '" + version + "'");
    arc.data_hash = std::stoull(hash, nullptr, 16);
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string fam;
    LinearCut cut;
    int round = 0;
    ss >> fam >> cut.branch;
    cut.family = fam == "jabr"  ? CutFamily::Jabr
                 : fam == "i2"  ? CutFamily::I2
                 : fam == "limit" ? CutFamily::Limit
                                  : throw ModelError("unknown cut family '" +
                                                     fam + "' in " + path);
    std::string tok;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      const auto eq = tok.find('=');
      if (tok.rfind("rhs=", 0) == 0)
        cut.rhs = std::stod(tok.substr(4));
      else if (tok.rfind("round=", 0) == 0)
        round = std::stoi(tok.substr(6));
      else if (colon != std::string::npos)
        cut.terms.push_back({role_from_string(tok.substr(0, colon)),
                             std::stod(tok.substr(colon + 1))});
      else
        throw ModelError("malformed cut token '" + tok + "' in " + path);
      (void)eq;
    }
    arc.cuts.push_back({std::move(cut), round});
  }
  return arc;
}

// Topology must match; a load/data difference is the documented warm-start
// path and only warrants a warning.
inline void check_archive(const CutArchive& arc, const Network& net,
                          std::ostream& warn = std::cerr) {
  if (arc.nbus != static_cast<int>(net.buses.size()) ||
      arc.nbranch != static_cast<int>(net.branches.size()))
    throw ModelError("cut archive topology mismatch: archive " +
                     std::to_string(arc.nbus) + "/" +
                     std::to_string(arc.nbranch) + " buses/branches, case " +
                     std::to_string(net.buses.size()) + "/" +
                     std::to_string(net.branches.size()));
  if (arc.data_hash != network_fingerprint(net))
    warn << "warning: cut archive data fingerprint differs from case "
            "(perturbed instance?)\n";
}

}  // namespace cutplane
