// Command-line front end: solve / warmstart / perturb / decompose /
// experiment relax-one over MATPOWER case files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cutplane/cut_manager.hpp"
#include "cutplane/driver.hpp"
#include "cutplane/flow_decomp.hpp"
#include "cutplane/matpower.hpp"

namespace {

using namespace cutplane;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeLimit = 3;
constexpr int kExitInputError = 4;
constexpr int kExitNumericFailure = 5;

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
    case RunStatus::Stalled: return kExitOk;
    case RunStatus::Infeasible: return kExitInfeasible;
    case RunStatus::TimeLimit: return kExitTimeLimit;
    case RunStatus::NumericFailure: return kExitNumericFailure;
  }
  return kExitNumericFailure;
}

struct CommonSolveArgs {
  AlgorithmParams params;
  BuildOptions opts;
  bool no_loss_rows = false;
  bool free_c_lb = false;
  std::string objective_mode = "qp";
  std::string save_cuts, report_path;

  void attach(CLI::App* app) {
    app->add_option("--time-limit", params.time_limit, "Time limit, seconds")
        ->capture_default_str();
    app->add_option("--ftol-rounds", params.stall_rounds,
                    "Admissible stalled rounds before stopping")
        ->capture_default_str();
    app->add_option("--ftol", params.eps_ftol,
                    "Relative objective improvement threshold")
        ->capture_default_str();
    app->add_option("--cut-age", params.cut_age,
                    "Rounds a slack cut survives before expiry")
        ->capture_default_str();
    app->add_option("--eps-jabr", params.eps_jabr, "Jabr violation tolerance")
        ->capture_default_str();
    app->add_option("--eps-i2", params.eps_i2, "i2 violation tolerance")
        ->capture_default_str();
    app->add_option("--eps-lim", params.eps_lim, "Limit violation tolerance")
        ->capture_default_str();
    app->add_option("--eps-par", params.eps_par, "Parallel-cut threshold")
        ->capture_default_str();
    app->add_option("--top-jabr", params.p_jabr,
                    "Top % of violated branches, Jabr family")
        ->capture_default_str();
    app->add_option("--top-i2", params.p_i2,
                    "Top % of violated branches, i2 family")
        ->capture_default_str();
    app->add_option("--top-lim", params.p_lim,
                    "Top % of violated branches, limit family")
        ->capture_default_str();
    app->add_option("--objective", objective_mode,
                    "Objective mode: qp (native quadratic) or pwl")
        ->check(CLI::IsMember({"qp", "pwl"}))
        ->capture_default_str();
    app->add_option("--pwl-segments", opts.pwl_segments,
                    "Secant segments in pwl objective mode")
        ->capture_default_str();
    app->add_flag("--no-loss-rows", no_loss_rows,
                  "Omit the static loss rows from the base model");
    app->add_flag("--free-c-lb", free_c_lb,
                  "Drop the 0 lower bound on the c variables");
    app->add_option("--save-cuts", save_cuts, "Write the cut archive here");
    app->add_option("--report", report_path, "Write a per-round CSV here");
  }

  void finalize() {
    opts.loss_rows = !no_loss_rows;
    opts.c_lower_bound = !free_c_lb;
    opts.objective = objective_mode == "pwl" ? BuildOptions::Objective::PWL
                                             : BuildOptions::Objective::QP;
  }
};

int finish_run(const RunReport& rep, const CommonSolveArgs& args,
               const RelaxationModel& rm, const CutManager& manager) {
  rep.write_text(std::cout);
  if (rep.status == RunStatus::Converged || rep.status == RunStatus::Stalled ||
      rep.status == RunStatus::TimeLimit) {
    if (args.opts.objective == BuildOptions::Objective::PWL)
      std::cout << "note: pwl objective mode, bound is approximate\n";
    std::printf("bound %.2f\n", rep.best_bound);
  }
  if (!args.save_cuts.empty()) manager.save_archive(args.save_cuts, rm.net);
  if (!args.report_path.empty()) {
    std::ofstream csv(args.report_path);
    if (!csv) {
      std::cerr << "error: cannot write report to " << args.report_path << "\n";
      return kExitInputError;
    }
    rep.write_csv(csv);
  }
  return exit_code(rep.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cutting-plane lower bounds for AC optimal power flow"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Build the relaxation and run the cutting-plane loop");
  std::string solve_case;
  solve->add_option("case", solve_case, "MATPOWER case file")->required();
  CommonSolveArgs solve_args;
  solve_args.attach(solve);

  // warmstart
  auto* warm = app.add_subcommand("warmstart", "Run with cuts preloaded from an archive");
  std::string warm_case, warm_cuts;
  warm->add_option("case", warm_case, "MATPOWER case file")->required();
  warm->add_option("--cuts", warm_cuts, "Cut archive from a prior run")->required();
  CommonSolveArgs warm_args;
  warm_args.attach(warm);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Gaussian load perturbation");
  std::string perturb_case, perturb_out;
  PerturbationSpec spec;
  perturb->add_option("case", perturb_case, "MATPOWER case file")->required();
  perturb->add_option("--seed", spec.seed, "PRNG seed")->required();
  perturb->add_option("--mean-scale", spec.mean_scale, "Gaussian mean as a fraction of Pd")
      ->capture_default_str();
  perturb->add_option("--sd-scale", spec.sd_scale, "Gaussian sd as a fraction of Pd")
      ->capture_default_str();
  perturb->add_option("-o,--output", perturb_out, "Output case file")->required();

  // decompose
  auto* decomp = app.add_subcommand("decompose", "Flow decomposition and loss diagnostics");
  std::string decomp_case;
  bool resolve = false;
  decomp->add_option("case", decomp_case, "MATPOWER case file")->required();
  decomp->add_flag("--resolve", resolve, "Re-run the cutting-plane loop to get the point");
  CommonSolveArgs decomp_args;
  decomp_args.attach(decomp);

  // experiment relax-one
  auto* experiment = app.add_subcommand("experiment", "Diagnostic experiments");
  experiment->require_subcommand(1);
  auto* relax_one = experiment->add_subcommand(
      "relax-one", "Suppress one random branch's cone cuts per trial");
  std::string exp_case;
  int exp_trials = 50;
  std::uint64_t exp_seed = 0;
  relax_one->add_option("case", exp_case, "MATPOWER case file")->required();
  relax_one->add_option("--trials", exp_trials, "Number of trials")->capture_default_str();
  relax_one->add_option("--seed", exp_seed, "PRNG seed")->capture_default_str();
  CommonSolveArgs exp_args;
  exp_args.attach(relax_one);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      solve_args.finalize();
      Network net = load_network(solve_case);
      RelaxationModel rm = build_base_model(net, solve_args.opts);
      CutManager manager;
      RunReport rep = cutplane::cutplane(rm, manager, solve_args.params);
      return finish_run(rep, solve_args, rm, manager);
    }
    if (*warm) {
      warm_args.finalize();
      Network net = load_network(warm_case);
      CutArchive archive = load_archive(warm_cuts);
      RelaxationModel rm;
      CutManager manager;
      RunReport rep = warm_start(net, archive, warm_args.params,
                                 warm_args.opts, rm, manager);
      return finish_run(rep, warm_args, rm, manager);
    }
    if (*perturb) {
      Network net = load_network(perturb_case);
      write_network(perturb_loads(net, spec), perturb_out);
      std::cout << "wrote " << perturb_out << "\n";
      return kExitOk;
    }
    if (*decomp) {
      decomp_args.finalize();
      (void)resolve;  // the point always comes from a fresh run
      Network net = load_network(decomp_case);
      RelaxationModel rm = build_base_model(net, decomp_args.opts);
      CutManager manager;
      RunReport rep = cutplane::cutplane(rm, manager, decomp_args.params);
      if (rep.status == RunStatus::Infeasible ||
          rep.status == RunStatus::NumericFailure) {
        std::cerr << "error: no optimal point to decompose (status "
                  << to_string(rep.status) << ")\n";
        return exit_code(rep.status);
      }
      const LossReport lr = loss_report(net, rep.final_point);
      DirectedFlowGraph g = subdivide_and_orient(net, rep.final_point);
      PathDecomposition pd = decompose(g);
      std::printf("bound %.2f\n", rep.best_bound);
      std::printf("generation %.6f load %.6f shunt %.6f\n", lr.total_generation,
                  lr.total_load, lr.total_shunt_consumption);
      std::printf("losses positive %.6f negative %.6f (%d branches negative)\n",
                  lr.positive_losses, lr.negative_losses,
                  lr.negative_loss_branches);
      std::printf("reactive: generation %.6f shunt-production %.6f load %.6f loss %.6f\n",
                  lr.reactive_generation, lr.reactive_shunt_production,
                  lr.reactive_load, lr.reactive_loss);
      std::printf("paths %zu cycles %zu residual %.3g\n", pd.paths.size(),
                  pd.cycles.size(), pd.residual);
      return kExitOk;
    }
    if (*relax_one) {
      exp_args.finalize();
      Network net = load_network(exp_case);
      RelaxOneExperiment exp = single_branch_relaxation_experiment(
          net, exp_trials, exp_seed, exp_args.params, exp_args.opts);
      std::cout << "# adapted single-branch relaxation: per trial the jabr and "
                   "i2 cuts of one random branch are suppressed\n";
      exp.write_csv(std::cout);
      if (!exp_args.report_path.empty()) {
        std::ofstream csv(exp_args.report_path);
        exp.write_csv(csv);
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ModelError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericFailure;
  }
  return kExitInputError;
}
