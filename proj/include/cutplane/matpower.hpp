#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cutplane/network.hpp"
#include "cutplane/prng.hpp"

namespace cutplane {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric tables of a MATPOWER case, exactly as written in the file.
struct RawCase {
  double baseMVA = 0.0;
  std::vector<std::vector<double>> bus;
  std::vector<std::vector<double>> gen;
  std::vector<std::vector<double>> branch;
  std::vector<std::vector<double>> gencost;
};

struct PerturbationSpec {
  std::uint64_t seed = 0;
  double mean_scale = 0.05;
  double sd_scale = 0.05;
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
  const auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool parse_row(const std::string& text, std::vector<double>& out) {
  out.clear();
  std::istringstream ss(text);
  double v;
  while (ss >> v) out.push_back(v);
  ss.clear();
  std::string rest;
  ss >> rest;
  return rest.empty();
}

}  // namespace detail

// Parses the function-body subset of the MATPOWER case format: scalar
// mpc.baseMVA and the bus/gen/branch/gencost matrices.
inline RawCase parse_matpower(std::istream& in) {
  RawCase raw;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  std::string current;  // table currently being read, empty if none
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::strip_comment(line);
    if (current.empty()) {
      const auto mpc = s.find("mpc.");
      if (mpc == std::string::npos) continue;
      const auto eq = s.find('=', mpc);
      if (eq == std::string::npos) continue;
      std::string name = s.substr(mpc + 4, eq - mpc - 4);
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace),
                 name.end());
      std::string tail = s.substr(eq + 1);
      if (name == "baseMVA") {
        std::istringstream ss(tail);
        char semi;
        if (!(ss >> raw.baseMVA))
          throw ParseError("line " + std::to_string(lineno) +
                           ": malformed baseMVA");
        ss >> semi;
        seen.insert(name);
        continue;
      }
      if (name != "bus" && name != "gen" && name != "branch" &&
          name != "gencost")
        continue;
      seen.insert(name);
      const auto brk = tail.find('[');
      if (brk == std::string::npos)
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected '[' after mpc." + name);
      current = name;
      s = tail.substr(brk + 1);
    }
    // inside a matrix: rows end with ';', matrix ends with '];'
    bool done = false;
    const auto close = s.find(']');
    if (close != std::string::npos) {
      s = s.substr(0, close);
      done = true;
    }
    std::stringstream rows(s);
    std::string rowtext;
    while (std::getline(rows, rowtext, ';')) {
      std::vector<double> row;
      if (!detail::parse_row(rowtext, row))
        throw ParseError("line " + std::to_string(lineno) +
                         ": malformed matrix row in mpc." + current);
      if (row.empty()) continue;
      auto& table = current == "bus"      ? raw.bus
                    : current == "gen"    ? raw.gen
                    : current == "branch" ? raw.branch
                                          : raw.gencost;
      table.push_back(std::move(row));
    }
    if (done) current.clear();
  }
  for (const char* need : {"baseMVA", "bus", "gen", "branch"})
    if (!seen.count(need)) throw ParseError(std::string("missing table: ") + need);
  if (!(raw.baseMVA > 0.0)) throw ParseError("baseMVA must be positive");
  std::set<long long> ids;
  for (const auto& row : raw.bus) {
    if (row.size() < 13) throw ParseError("bus row too short");
    if (!ids.insert(static_cast<long long>(row[0])).second)
      throw ParseError("duplicate bus id " +
                       std::to_string(static_cast<long long>(row[0])));
  }
  for (const auto& row : raw.gen)
    if (row.size() < 10) throw ParseError("gen row too short");
  for (const auto& row : raw.branch)
    if (row.size() < 11) throw ParseError("branch row too short");
  return raw;
}

inline RawCase parse_matpower(const std::string& text) {
  std::istringstream ss(text);
  return parse_matpower(ss);
}

inline RawCase parse_matpower_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file: " + path);
  return parse_matpower(in);
}

namespace detail {

inline GeneratorCost convert_cost(const std::vector<double>& row) {
  GeneratorCost cost;
  const int model = static_cast<int>(row[0]);
  const int n = static_cast<int>(row[3]);
  if (static_cast<int>(row.size()) < 4 + (model == 1 ? 2 * n : n))
    throw ParseError("gencost row shorter than its declared length");
  if (model == 2) {
    cost.kind = GeneratorCost::Kind::Quadratic;
    // coefficients ordered highest degree first
    double c[3] = {0, 0, 0};  // c2, c1, c0
    for (int i = 0; i < n; ++i) {
      const int degree = n - 1 - i;
      if (degree > 2)
        throw ParseError("polynomial gencost of degree > 2 not supported");
      c[2 - degree] = row[4 + i];
    }
    cost.c2 = c[0];
    cost.c1 = c[1];
    cost.c0 = c[2];
    if (cost.c2 < 0.0) throw ParseError("gencost quadratic coefficient < 0");
  } else if (model == 1) {
    cost.kind = GeneratorCost::Kind::PiecewiseLinear;
    for (int i = 0; i < n; ++i)
      cost.points.push_back({row[4 + 2 * i], row[4 + 2 * i + 1]});
    double prev_slope = -kNoLimit;
    for (std::size_t i = 1; i < cost.points.size(); ++i) {
      const double dp = cost.points[i].p - cost.points[i - 1].p;
      if (!(dp > 0.0))
        throw ParseError("PWL gencost breakpoints not strictly increasing");
      const double slope = (cost.points[i].cost - cost.points[i - 1].cost) / dp;
      if (slope < prev_slope - 1e-9)
        throw ParseError("PWL gencost is not convex");
      prev_slope = slope;
    }
  } else {
    throw ParseError("unknown gencost model " + std::to_string(model));
  }
  return cost;
}

}  // namespace detail

// Converts a raw case to the per-unit network model: drops out-of-service
// equipment, compacts bus ids, normalizes tap ratios, converts to per-unit.
inline Network to_network(const RawCase& raw) {
  Network net;
  net.base_mva = raw.baseMVA;
  std::map<long long, int> id_to_index;
  for (const auto& row : raw.bus) {
    Bus b;
    b.index = static_cast<int>(net.buses.size());
    b.original_id = static_cast<int>(row[0]);
    b.Pd = row[2] / raw.baseMVA;
    b.Qd = row[3] / raw.baseMVA;
    b.Gs = row[4] / raw.baseMVA;
    b.Bs = row[5] / raw.baseMVA;
    b.Vmax = row[11];
    b.Vmin = row[12];
    if (b.Vmin > b.Vmax)
      throw ModelError("bus " + std::to_string(b.original_id) +
                       ": Vmin > Vmax");
    id_to_index[b.original_id] = b.index;
    net.buses.push_back(b);
  }
  for (std::size_t g = 0; g < raw.gen.size(); ++g) {
    const auto& row = raw.gen[g];
    if (row[7] == 0.0) continue;  // status
    Generator gen;
    const auto it = id_to_index.find(static_cast<long long>(row[0]));
    if (it == id_to_index.end())
      throw ModelError("generator references unknown bus " +
                       std::to_string(static_cast<long long>(row[0])));
    gen.bus = it->second;
    gen.Qmax = row[3] / raw.baseMVA;
    gen.Qmin = row[4] / raw.baseMVA;
    gen.Pmax = row[8] / raw.baseMVA;
    gen.Pmin = row[9] / raw.baseMVA;
    if (gen.Pmin > gen.Pmax) throw ModelError("generator has Pmin > Pmax");
    if (gen.Qmin > gen.Qmax) throw ModelError("generator has Qmin > Qmax");
    if (g < raw.gencost.size())
      gen.cost = detail::convert_cost(raw.gencost[g]);
    net.generators.push_back(gen);
  }
  for (const auto& row : raw.branch) {
    if (row[10] == 0.0) continue;  // status
    Branch br;
    const auto fit = id_to_index.find(static_cast<long long>(row[0]));
    const auto tit = id_to_index.find(static_cast<long long>(row[1]));
    if (fit == id_to_index.end() || tit == id_to_index.end())
      throw ModelError("branch endpoint references unknown bus");
    br.from = fit->second;
    br.to = tit->second;
    br.r = row[2];
    br.x = row[3];
    br.b_sh = row[4];
    br.limit = row[5] > 0.0 ? row[5] / raw.baseMVA : kNoLimit;
    br.tau = row[8] != 0.0 ? row[8] : 1.0;
    br.sigma = row[9] * M_PI / 180.0;
    if (row.size() >= 13 && (row[11] != 0.0 || row[12] != 0.0)) {
      const double lo = std::abs(row[11]), hi = std::abs(row[12]);
      br.angle_bound = std::max(lo, hi) * M_PI / 180.0;
    }
    net.branches.push_back(br);
  }
  net.rebuild_incidence();
  return net;
}

// Gaussian load perturbation: Pd <- Pd + N(mean_scale*Pd, (sd_scale*Pd)^2),
// clamped at 0; per-bus PRNG streams keyed by dense bus index.
inline Network perturb_loads(const Network& net, const PerturbationSpec& spec) {
  if (spec.sd_scale < 0.0) throw ModelError("sd-scale must be >= 0");
  Network out = net;
  for (Bus& b : out.buses) {
    if (b.Pd == 0.0) continue;
    SplitMix64 g = SplitMix64::stream(spec.seed, static_cast<std::uint64_t>(b.index));
    const double draw =
        spec.mean_scale * b.Pd + spec.sd_scale * b.Pd * g.gaussian();
    b.Pd = std::max(0.0, b.Pd + draw);
  }
  return out;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_network(const Network& net, std::ostream& out) {
  const double base = net.base_mva;
  out << "function mpc = cutplane_case\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << detail::fmt17(base) << ";\n\n";
  out << "mpc.bus = [\n";
  for (const Bus& b : net.buses) {
    out << "\t" << b.original_id << "\t1\t" << detail::fmt17(b.Pd * base)
        << "\t" << detail::fmt17(b.Qd * base) << "\t"
        << detail::fmt17(b.Gs * base) << "\t" << detail::fmt17(b.Bs * base)
        << "\t1\t1\t0\t1\t1\t" << detail::fmt17(b.Vmax) << "\t"
        << detail::fmt17(b.Vmin) << ";\n";
  }
  out << "];\n\nmpc.gen = [\n";
  for (const Generator& g : net.generators) {
    out << "\t" << net.buses[g.bus].original_id << "\t0\t0\t"
        << detail::fmt17(g.Qmax * base) << "\t" << detail::fmt17(g.Qmin * base)
        << "\t1\t" << detail::fmt17(base) << "\t1\t"
        << detail::fmt17(g.Pmax * base) << "\t" << detail::fmt17(g.Pmin * base)
        << ";\n";
  }
  out << "];\n\nmpc.branch = [\n";
  for (const Branch& br : net.branches) {
    out << "\t" << net.buses[br.from].original_id << "\t"
        << net.buses[br.to].original_id << "\t" << detail::fmt17(br.r) << "\t"
        << detail::fmt17(br.x) << "\t" << detail::fmt17(br.b_sh) << "\t"
        << detail::fmt17(std::isinf(br.limit) ? 0.0 : br.limit * base)
        << "\t0\t0\t" << detail::fmt17(br.tau) << "\t"
        << detail::fmt17(br.sigma * 180.0 / M_PI) << "\t1\t"
        << detail::fmt17(-br.angle_bound * 180.0 / M_PI) << "\t"
        << detail::fmt17(br.angle_bound * 180.0 / M_PI) << ";\n";
  }
  out << "];\n\nmpc.gencost = [\n";
  for (const Generator& g : net.generators) {
    if (g.cost.kind == GeneratorCost::Kind::Quadratic) {
      out << "\t2\t0\t0\t3\t" << detail::fmt17(g.cost.c2) << "\t"
          << detail::fmt17(g.cost.c1) << "\t" << detail::fmt17(g.cost.c0)
          << ";\n";
    } else {
      out << "\t1\t0\t0\t" << g.cost.points.size();
      for (const auto& p : g.cost.points)
        out << "\t" << detail::fmt17(p.p) << "\t" << detail::fmt17(p.cost);
      out << ";\n";
    }
  }
  out << "];\n";
}

inline void write_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot open output file: " + path);
  write_network(net, out);
  out.flush();
  if (!out) throw ModelError("I/O failure writing " + path);
}

inline Network load_network(const std::string& path) {
  return to_network(parse_matpower_file(path));
}

}  // namespace cutplane
