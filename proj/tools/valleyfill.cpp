#include <chrono>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "vf/errors.hpp"
#include "vf/rng.hpp"
#include "vf/protocol.hpp"
#include "vf/report.hpp"
#include "vf/scenario.hpp"
#include "vf/solver.hpp"

namespace {

// exit codes: 0 ok, 2 parse, 3 infeasible, 4 numeric, 5 io, 1 other
int run(int argc, char** argv) {
  CLI::App app{"Decentralized EV charging under feeder voltage chance constraints"};

  std::string scenario_path;
  std::string mode = "both";
  std::string out_dir = "out";
  bool decentralized = false;
  vf::ScenarioOverrides ov;
  int iters = -1, mc_samples = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double sigma_p = -1.0, nu = -1.0, alpha = -1.0, beta = -1.0, delta = -1.0;

  app.add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("--mode", mode, "ccspds | spds | both")
      ->check(CLI::IsMember({"ccspds", "spds", "both"}));
  app.add_option("--out", out_dir, "Output directory for CSV reports");
  app.add_flag("--decentralized", decentralized,
               "Run the chance-constrained solve through the message protocol");
  app.add_option("--iters", iters, "Override iteration count");
  app.add_option("--seed", seed, "Override scenario seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--mc-samples", mc_samples, "Override Monte Carlo sample count");
  app.add_option("--sigma-p", sigma_p, "Override baseline load std deviation (watts)");
  app.add_option("--nu", nu, "Override voltage lower bound (pu)");
  app.add_option("--alpha", alpha, "Override primal step size");
  app.add_option("--beta", beta, "Override dual step size");
  app.add_option("--delta", delta, "Override chance level");

  CLI11_PARSE(app, argc, argv);

  if (iters >= 0) ov.iters = iters;
  if (seed_set) ov.seed = seed;
  if (mc_samples > 0) ov.mc_samples = mc_samples;
  if (sigma_p >= 0.0) ov.sigma_p_w = sigma_p;
  if (nu > 0.0) ov.nu_lower = nu;
  if (alpha > 0.0) ov.alpha = alpha;
  if (beta > 0.0) ov.beta = beta;
  if (delta > 0.0) ov.delta = delta;

  const auto t0 = std::chrono::steady_clock::now();
  const vf::Scenario sc = vf::load_scenario(scenario_path, ov);
  const vf::Problem problem = vf::build_problem(sc);

  vf::RunReport report;
  report.scenario_meta = sc;
  report.mode = mode;
  const std::uint64_t mc_seed = vf::derive_seed(sc.seed, {0x7265706fULL});

  if (mode == "ccspds" || mode == "both") {
    if (decentralized) {
      auto dec = vf::run_decentralized(problem);
      report.cc = std::move(dec.solve);
      report.messages = std::move(dec.log);
    } else {
      report.cc = vf::run_ccspds(problem);
    }
    report.cc_stats =
        vf::monte_carlo_violations(problem, report.cc->node_ev_w, sc.mc_samples, mc_seed);
    std::printf("ccspds: %d iterations, final max d = %.6g, aggregate peak = %.6g W\n",
                report.cc->iters_run,
                report.cc->history.empty() ? 0.0 : report.cc->history.back().max_d,
                report.cc->aggregate_w.size() ? report.cc->aggregate_w.maxCoeff() : 0.0);
    std::printf("ccspds: violating node-slots (over %d samples): %ld\n", sc.mc_samples,
                report.cc_stats->total_node_slot_violations);
  }
  if (mode == "spds" || mode == "both") {
    report.spds = vf::run_spds_deterministic(problem);
    report.spds_stats =
        vf::monte_carlo_violations(problem, report.spds->node_ev_w, sc.mc_samples, mc_seed);
    std::printf("spds: %d iterations, violating node-slots (over %d samples): %ld\n",
                report.spds->iters_run, sc.mc_samples,
                report.spds_stats->total_node_slot_violations);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  vf::emit_report(report, out_dir);
  std::printf("report written to %s (%.2f s)\n", out_dir.c_str(), report.wall_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vf::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const vf::InfeasibilityError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const vf::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const vf::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
