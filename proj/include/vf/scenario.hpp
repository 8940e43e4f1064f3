#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "vf/fleet.hpp"
#include "vf/gaussian.hpp"
#include "vf/network.hpp"

namespace vf {

struct SolverConfig {
  double alpha = 1e-11;      // primal step
  double beta = 2.0;         // dual step
  double tau_u = 0.974;      // primal shrinking parameter
  double tau_lambda = 0.974; // dual shrinking parameter
  double d_lambda = 5e5;     // dual box upper bound
  double rho = -1.0;         // control-effort weight; < 0 selects 1e-3 * mean(pbar_w)^2
  double delta = 0.9;        // chance level
  int max_iters = 50;
  bool stop_on_converge = false;  // default mirrors the fixed-iteration runs
  double converge_tol = 1e-6;
  int converge_window = 3;
  double mvn_accuracy = 1e-4;
  double mvn_gradient_accuracy = 1e-3;
  int mvn_shifts = 8;
  unsigned threads = 0;  // 0 = hardware; results do not depend on this

  void validate() const;
};

struct WindowSpec {
  double start_hour = 19.0;
  double dt_minutes = 15.0;
  int slots = 52;

  double dt_hours() const { return dt_minutes / 60.0; }
  double hour_of(int slot) const;  // wall-clock hour of a slot start, wrapped to [0,24)
};

struct Scenario {
  std::string name = "scenario";
  FeederModel feeder;
  FleetModel fleet;
  MatrixXd baseline_mu_w;  // K x n per-house means, watts
  WindowSpec window;
  double nu_lower = 0.954;
  double sigma_p_w = 400.0;
  SolverConfig solver;
  int mc_samples = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Command-line overrides applied on top of the scenario file.
struct ScenarioOverrides {
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
  std::optional<int> mc_samples;
  std::optional<double> sigma_p_w;
  std::optional<double> nu_lower;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> delta;
};

Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {});

// Everything the iteration loops need, precomputed once. The network model is
// per-unit; voltage-constraint quantities are scaled to volts^2 and load
// quantities to watts, the unit system the published step sizes assume.
struct Problem {
  Scenario scenario;
  NetworkMatrices net;
  BaselineLoadModel baseline;  // per-unit
  int horizon = 0;
  int n_ev = 0;
  int n_nodes = 0;
  double rho = 0.0;

  VectorXd mean_total_w;          // K, baseline mean total load (watts)
  MatrixXd dcol_v2;               // h x n, D columns in volts^2 per unit control
  MatrixXd z_from_node_watts;     // h x h, maps nodal EV watts to z in volts^2
  std::vector<GaussianVector> yhat_v2;       // K threshold distributions (volts^2)
  std::shared_ptr<ConditionalTable> yhat_conditionals;
  MatrixXd det_threshold_v2;      // h x K, (nu^2-1)V0 + H mu(k), volts^2
  VectorXd required;              // K-slot control mass per EV
  double volts2_per_pu2 = 0.0;

  double dt_hours() const { return scenario.window.dt_hours(); }
};

Problem build_problem(const Scenario& scenario);

// Baseline profile file: per-slot per-house mean watts, either one value per
// slot or one value per (slot, node) pair applied to that node's houses.
MatrixXd load_baseline_profile(const std::string& path, const FeederModel& feeder, int slots);

}  // namespace vf
